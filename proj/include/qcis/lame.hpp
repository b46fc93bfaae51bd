#pragma once

// The Lame worked example: Hermite ansatz data, the Bethe conditions and
// their Newton solver, the constancy functional pi(f) = f^2 + f' - m(m+1)p,
// and the local e^{int f} eigenfunction residual check.
//
// Pole-list convention: the ansatz stores a_1..a_m; the origin a_0 = 0 with
// residue -m is implicit. (Some classical statements number the same data
// a_0..a_n; here the list length is always m.)

#include "qcis/lattice.hpp"
#include "qcis/scalars.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcis {

struct NoConvergence : std::runtime_error {
    explicit NoConvergence(std::uint64_t seed)
        : std::runtime_error("Bethe solver failed to converge (seed " + std::to_string(seed) +
                             "); retry with a new seed"),
          seed(seed)
    {
    }
    std::uint64_t seed;
};

namespace detail {

/// Quasi-random points in the unit square (additive Kronecker sequence with
/// the plastic-number offsets). Index-stable: the only source of variation.
inline std::pair<double, double> r2_point(std::uint64_t index)
{
    constexpr double a1 = 0.7548776662466927;
    constexpr double a2 = 0.5698402909980532;
    double x = std::fmod(0.5 + a1 * static_cast<double>(index + 1), 1.0);
    double y = std::fmod(0.5 + a2 * static_cast<double>(index + 1), 1.0);
    return {x, y};
}

/// Taylor coefficients of wp(y + u) from the exact values (wp(y), wp'(y)),
/// via wp'' = 6 wp^2 - g2/2. Spectrally exact given the seed pair.
inline std::vector<Complex> wp_taylor(Complex w0, Complex w1, Complex g2, int len)
{
    std::vector<Complex> w(static_cast<std::size_t>(std::max(len, 2)), Complex(0));
    w[0] = w0;
    w[1] = w1;
    for (int k = 0; k + 2 < len; ++k) {
        Complex conv = 0;
        for (int l = 0; l <= k; ++l)
            conv += w[static_cast<std::size_t>(l)] * w[static_cast<std::size_t>(k - l)];
        Complex rhs = 6.0 * conv - (k == 0 ? g2 / 2.0 : Complex(0));
        w[static_cast<std::size_t>(k + 2)] = rhs / (static_cast<double>(k + 1) * (k + 2));
    }
    w.resize(static_cast<std::size_t>(len));
    return w;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Bethe conditions and the Hermite ansatz
// ---------------------------------------------------------------------------

/// g_i = [f(a_i + x) + f(a_i - x)] at x = 0: the pole pair cancels and the
/// value is twice the regular part of f at a_i,
///   g_i = 2 (c0 - m zeta(a_i) + sum_{j != i} zeta(a_i - a_j)).
inline std::vector<Complex> bethe_conditions(const std::vector<Complex>& poles, Complex c0, int m,
                                             const Lattice& lat)
{
    std::vector<Complex> g;
    g.reserve(poles.size());
    for (std::size_t i = 0; i < poles.size(); ++i) {
        Complex reg = c0 - static_cast<double>(m) * lat.zeta(poles[i]);
        for (std::size_t j = 0; j < poles.size(); ++j)
            if (j != i)
                reg += lat.zeta(poles[i] - poles[j]);
        g.push_back(2.0 * reg);
    }
    return g;
}

class HermiteAnsatz {
public:
    /// Validates the pole pattern: a_i pairwise distinct and distinct from 0
    /// modulo the lattice.
    HermiteAnsatz(int m, std::vector<Complex> poles, Complex c0, const Lattice& lat)
        : m_(m), poles_(std::move(poles)), c0_(c0)
    {
        if (m < 0 || static_cast<int>(poles_.size()) != m)
            throw std::invalid_argument("HermiteAnsatz needs exactly m poles besides the origin");
        double margin = 1e-6 * std::abs(lat.omega1());
        for (std::size_t i = 0; i < poles_.size(); ++i) {
            if (lat.dist(poles_[i]) < margin)
                throw std::invalid_argument("ansatz pole collides with the origin lattice");
            for (std::size_t j = i + 1; j < poles_.size(); ++j)
                if (lat.dist(poles_[i] - poles_[j]) < margin)
                    throw std::invalid_argument("ansatz poles collide modulo the lattice");
        }
        for (Complex g : bethe_conditions(poles_, c0_, m_, lat))
            residual_ = std::max(residual_, std::abs(g));
    }

    int m() const { return m_; }
    const std::vector<Complex>& poles() const { return poles_; }
    Complex c0() const { return c0_; }
    /// Max violation of the defining conditions, snapshot at construction.
    double residual() const { return residual_; }

    /// The sigma-partner: the involution on ansatz data induced by
    /// x -> -x on eigenfunctions (poles and c0 negate; lambda is preserved).
    HermiteAnsatz sigma(const Lattice& lat) const
    {
        std::vector<Complex> neg;
        neg.reserve(poles_.size());
        for (Complex a : poles_)
            neg.push_back(-a);
        return {m_, std::move(neg), -c0_, lat};
    }

private:
    int m_;
    std::vector<Complex> poles_;
    Complex c0_;
    double residual_ = 0;
};

/// f(z) = c0 + sum_i zeta(z - a_i) - m zeta(z). Residues: +1 at each a_i,
/// -m at 0; their sum vanishes, so f is elliptic with no correction term.
inline Complex hermite_f(const HermiteAnsatz& a, Complex z, const Lattice& lat)
{
    Complex f = a.c0();
    for (Complex p : a.poles())
        f += lat.zeta(z - p);
    f -= static_cast<double>(a.m()) * lat.zeta(z);
    return f;
}

inline Complex hermite_f_prime(const HermiteAnsatz& a, Complex z, const Lattice& lat)
{
    Complex f = 0;
    for (Complex p : a.poles())
        f -= lat.wp(z - p);
    f += static_cast<double>(a.m()) * lat.wp(z);
    return f;
}

// ---------------------------------------------------------------------------
// Bethe conditions
// ---------------------------------------------------------------------------

inline double bethe_residual(const HermiteAnsatz& a, const Lattice& lat)
{
    double worst = 0;
    for (Complex g : bethe_conditions(a.poles(), a.c0(), a.m(), lat))
        worst = std::max(worst, std::abs(g));
    return worst;
}

/// The additive constant is pinned by the vanishing of the regular part of f
/// at the origin (equivalently, no residue of pi(f) dx there): c0 = sum zeta(a_i).
inline Complex eliminate_c0(const std::vector<Complex>& poles, const Lattice& lat)
{
    Complex c0 = 0;
    for (Complex a : poles)
        c0 += lat.zeta(a);
    return c0;
}

// ---------------------------------------------------------------------------
// pi(f) constancy functional
// ---------------------------------------------------------------------------

struct PiResult {
    Complex lambda;  ///< mean of pi(f) over the sample points
    double residual; ///< max |pi(f) - lambda|: the constancy defect
};

/// Evaluates pi(f) = f^2 + f' - m(m+1) wp at 20 quasi-random non-pole points.
inline PiResult pi_residual(const HermiteAnsatz& a, const Lattice& lat)
{
    const double mm1 = static_cast<double>(a.m()) * (a.m() + 1);
    std::vector<Complex> values;
    std::uint64_t index = 0;
    while (values.size() < 20 && index < 4000) {
        auto [x, y] = detail::r2_point(index++);
        Complex z = lat.from_unit_cell(x, y);
        bool clear = lat.dist(z) > 0.08 * std::abs(lat.omega1());
        for (Complex p : a.poles())
            clear = clear && lat.dist(z - p) > 0.08 * std::abs(lat.omega1());
        if (!clear)
            continue;
        Complex f = hermite_f(a, z, lat);
        Complex fp = hermite_f_prime(a, z, lat);
        values.push_back(f * f + fp - mm1 * lat.wp(z));
    }
    if (values.size() < 20)
        throw std::runtime_error("pi_residual: could not place sample points away from poles");
    Complex mean = 0;
    for (Complex v : values)
        mean += v;
    mean /= static_cast<double>(values.size());
    double worst = 0;
    for (Complex v : values)
        worst = std::max(worst, std::abs(v - mean));
    return {mean, worst};
}

// ---------------------------------------------------------------------------
// Newton solver for the Bethe conditions
// ---------------------------------------------------------------------------

struct SpectralPoint {
    Complex lambda; ///< pi(f), reported through the constancy functional
    HermiteAnsatz ansatz;
    double bethe_resid;
    double pi_resid;
};

/// Solves the m Bethe conditions in the pole positions (c0 eliminated by the
/// origin normalization). Minimum-norm Newton steps handle the one-parameter
/// solution curve; seeds come from the fixed low-discrepancy sequence.
inline SpectralPoint solve_bethe(int m, const Lattice& lat, std::uint64_t seed)
{
    if (m < 1)
        throw std::invalid_argument("solve_bethe needs m >= 1");
    const double scale = std::abs(lat.omega1());

    // Seed poles: consecutive sequence points, skipping lattice-translate
    // collisions with already placed poles.
    std::vector<Complex> poles;
    std::uint64_t index = seed * 97 + 1;
    while (static_cast<int>(poles.size()) < m && index < seed * 97 + 5000) {
        auto [x, y] = detail::r2_point(index++);
        Complex cand = lat.from_unit_cell(x, y);
        bool clear = lat.dist(cand) > 0.05 * scale;
        for (Complex p : poles)
            clear = clear && lat.dist(cand - p) > 0.05 * scale;
        if (clear)
            poles.push_back(cand);
    }
    if (static_cast<int>(poles.size()) < m)
        throw NoConvergence(seed);

    auto residual_of = [&](const std::vector<Complex>& a) {
        double worst = 0;
        for (Complex g : bethe_conditions(a, eliminate_c0(a, lat), m, lat))
            worst = std::max(worst, std::abs(g));
        return worst;
    };
    auto valid = [&](const std::vector<Complex>& a) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (lat.dist(a[i]) < 0.02 * scale)
                return false;
            for (std::size_t j = i + 1; j < a.size(); ++j)
                if (lat.dist(a[i] - a[j]) < 0.02 * scale)
                    return false;
        }
        return true;
    };

    for (int iter = 0; iter < 60; ++iter) {
        Complex c0 = eliminate_c0(poles, lat);
        std::vector<Complex> g = bethe_conditions(poles, c0, m, lat);
        double worst = 0;
        for (Complex v : g)
            worst = std::max(worst, std::abs(v));
        if (worst < 1e-10) {
            HermiteAnsatz ansatz(m, poles, c0, lat);
            PiResult pi = pi_residual(ansatz, lat);
            return {pi.lambda, ansatz, worst, pi.residual};
        }

        // Analytic Jacobian: d zeta = -wp.
        Eigen::MatrixXcd jac(m, m);
        for (int i = 0; i < m; ++i) {
            Complex diag = (static_cast<double>(m) - 1.0) * lat.wp(poles[static_cast<std::size_t>(i)]);
            for (int k = 0; k < m; ++k) {
                if (k == i)
                    continue;
                Complex diff = poles[static_cast<std::size_t>(i)] - poles[static_cast<std::size_t>(k)];
                diag -= lat.wp(diff);
                jac(i, k) = 2.0 * (lat.wp(diff) - lat.wp(poles[static_cast<std::size_t>(k)]));
            }
            jac(i, i) = 2.0 * diag;
        }
        Eigen::VectorXcd rhs(m);
        for (int i = 0; i < m; ++i)
            rhs(i) = -g[static_cast<std::size_t>(i)];
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(jac);
        cod.setThreshold(1e-9);
        Eigen::VectorXcd step = cod.solve(rhs);

        // Damped update keeping poles distinct and off the lattice.
        double damp = 1.0;
        bool moved = false;
        for (int attempt = 0; attempt < 8; ++attempt, damp *= 0.5) {
            std::vector<Complex> next = poles;
            for (int i = 0; i < m; ++i)
                next[static_cast<std::size_t>(i)] += damp * step(i);
            if (!valid(next))
                continue;
            if (residual_of(next) < worst || damp < 0.2) {
                poles = std::move(next);
                moved = true;
                break;
            }
        }
        if (!moved)
            throw NoConvergence(seed);
    }
    throw NoConvergence(seed);
}

// ---------------------------------------------------------------------------
// Local eigenfunction check: psi = e^{int f} against (L_m - lambda)
// ---------------------------------------------------------------------------

/// Picks a base point in the cell far from every pole of f.
inline Complex choose_base_point(const HermiteAnsatz& a, const Lattice& lat)
{
    Complex best = 0;
    double best_clearance = -1;
    for (std::uint64_t index = 1000; index < 1048; ++index) {
        auto [x, y] = detail::r2_point(index);
        Complex z = lat.from_unit_cell(x, y);
        double clearance = lat.dist(z);
        for (Complex p : a.poles())
            clearance = std::min(clearance, lat.dist(z - p));
        if (clearance > best_clearance) {
            best_clearance = clearance;
            best = z;
        }
    }
    return best;
}

/// Taylor coefficients of f at x0 through the wp Taylor recursion: the
/// derivative of f is an explicit combination of wp values.
inline std::vector<Complex> hermite_f_taylor(const HermiteAnsatz& a, Complex x0,
                                             const Lattice& lat, int len)
{
    std::vector<Complex> fprime(static_cast<std::size_t>(std::max(len - 1, 1)), Complex(0));
    auto accumulate = [&](Complex center, double weight) {
        auto [w0, w1] = lat.wp_pair(center);
        std::vector<Complex> w = detail::wp_taylor(w0, w1, lat.g2(), len - 1);
        for (std::size_t k = 0; k < fprime.size(); ++k)
            fprime[k] += weight * w[k];
    };
    for (Complex p : a.poles())
        accumulate(x0 - p, -1.0);
    accumulate(x0, static_cast<double>(a.m()));

    std::vector<Complex> f(static_cast<std::size_t>(len), Complex(0));
    f[0] = hermite_f(a, x0, lat);
    for (int k = 1; k < len; ++k)
        f[static_cast<std::size_t>(k)] = fprime[static_cast<std::size_t>(k - 1)] / static_cast<double>(k);
    return f;
}

/// psi = e^{int f} as a local Taylor series (psi(x0) = 1) by the first-order
/// recursion psi' = f psi.
inline std::vector<Complex> exp_integral_series(const std::vector<Complex>& f, int len)
{
    std::vector<Complex> psi(static_cast<std::size_t>(len), Complex(0));
    psi[0] = 1.0;
    for (int k = 0; k + 1 < len; ++k) {
        Complex s = 0;
        for (int j = 0; j <= k && j < static_cast<int>(f.size()); ++j)
            s += f[static_cast<std::size_t>(j)] * psi[static_cast<std::size_t>(k - j)];
        psi[static_cast<std::size_t>(k + 1)] = s / static_cast<double>(k + 1);
    }
    return psi;
}

/// Max residual coefficient of (L_m - lambda) psi through the given order,
/// with psi built from the ansatz at an automatically chosen base point.
inline double eigenfunction_check(const HermiteAnsatz& a, Complex lambda, const Lattice& lat,
                                  int trunc)
{
    Complex x0 = choose_base_point(a, lat);
    int len = trunc + 3;
    std::vector<Complex> f = hermite_f_taylor(a, x0, lat, len);
    std::vector<Complex> psi = exp_integral_series(f, len);

    auto [w0, w1] = lat.wp_pair(x0);
    std::vector<Complex> wp = detail::wp_taylor(w0, w1, lat.g2(), len);
    const double mm1 = static_cast<double>(a.m()) * (a.m() + 1);

    double worst = 0;
    for (int k = 0; k < trunc; ++k) {
        Complex psi2 = static_cast<double>(k + 1) * (k + 2) * psi[static_cast<std::size_t>(k + 2)];
        Complex pot = 0;
        for (int j = 0; j <= k; ++j)
            pot += wp[static_cast<std::size_t>(j)] * psi[static_cast<std::size_t>(k - j)];
        Complex residual = psi2 - mm1 * pot - lambda * psi[static_cast<std::size_t>(k)];
        worst = std::max(worst, std::abs(residual));
    }
    return worst;
}

} // namespace qcis
