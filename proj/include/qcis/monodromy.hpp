#pragma once

// Numerical differential-Galois probe for psi'' = (m(m+1) wp(z) + lambda) psi
// on the once-punctured torus: fundamental matrices transported along the
// period loops and a small loop around the puncture, with determinant,
// group-relation, commutator and invariant-line diagnostics.

#include "qcis/lattice.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace qcis {

struct PathNearPole : std::domain_error {
    PathNearPole() : std::domain_error("transport path passes too close to a lattice point") {}
};
struct StepUnderflow : std::runtime_error {
    StepUnderflow() : std::runtime_error("adaptive step size underflow near a singularity") {}
};

namespace detail {

// Dormand-Prince 5(4) tableau.
constexpr double kDP_A[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kDP_C[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kDP_B5[7] = {35.0 / 384,      0.0,        500.0 / 1113, 125.0 / 192,
                              -2187.0 / 6784,  11.0 / 84,  0.0};
constexpr double kDP_B4[7] = {5179.0 / 57600,  0.0,          7571.0 / 16695, 393.0 / 640,
                              -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

} // namespace detail

/// Fundamental 2x2 matrix of psi'' = (m(m+1) wp + lambda) psi along a
/// polyline, by embedded Dormand-Prince stepping at 1e-12 tolerances.
/// Columns continue the basis (psi, psi') normalized at the path start.
inline Eigen::Matrix2cd transport(double m, Complex lambda, const Lattice& lat,
                                  const std::vector<Complex>& path)
{
    if (path.size() < 2)
        throw std::invalid_argument("transport needs a polyline with at least two points");
    const double scale = std::abs(lat.omega1());
    const double clearance = 0.02 * scale;
    for (std::size_t s = 0; s + 1 < path.size(); ++s)
        for (int t = 0; t <= 64; ++t) {
            Complex z = path[s] + (path[s + 1] - path[s]) * (static_cast<double>(t) / 64.0);
            if (lat.dist(z) < clearance)
                throw PathNearPole();
        }

    const double mm1 = m * (m + 1);
    auto rhs = [&](Complex z, const Eigen::Matrix2cd& y, Complex dz) {
        Complex q = mm1 * lat.wp(z) + lambda;
        Eigen::Matrix2cd a;
        a << Complex(0), Complex(1), q, Complex(0);
        return Eigen::Matrix2cd((a * y) * dz);
    };

    Eigen::Matrix2cd y = Eigen::Matrix2cd::Identity();
    const double atol = 1e-12, rtol = 1e-12;
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        Complex z0 = path[s], dz = path[s + 1] - path[s];
        double seg = std::abs(dz);
        if (seg == 0)
            continue;
        double t = 0;
        double h = std::min(0.05 * scale / seg, 1.0);
        while (t < 1.0) {
            // cap step near lattice translates
            Complex zc = z0 + dz * t;
            double cap = lat.dist(zc) < 0.1 * scale ? 0.01 * scale / seg : 0.25 * scale / seg;
            h = std::min({h, cap, 1.0 - t});
            if (h < 1e-13)
                throw StepUnderflow();
            Eigen::Matrix2cd k[7];
            for (int stage = 0; stage < 7; ++stage) {
                Eigen::Matrix2cd yi = y;
                for (int p = 0; p < stage; ++p)
                    yi += h * detail::kDP_A[stage][p] * k[p];
                k[stage] = rhs(z0 + dz * (t + detail::kDP_C[stage] * h), yi, dz);
            }
            Eigen::Matrix2cd y5 = y, err = Eigen::Matrix2cd::Zero();
            for (int stage = 0; stage < 7; ++stage) {
                y5 += h * detail::kDP_B5[stage] * k[stage];
                err += h * (detail::kDP_B5[stage] - detail::kDP_B4[stage]) * k[stage];
            }
            double scaled = 0;
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    scaled = std::max(scaled, std::abs(err(i, j)) /
                                                  (atol + rtol * std::abs(y5(i, j))));
            if (scaled <= 1.0) {
                y = y5;
                t += h;
            }
            double factor = scaled > 0 ? 0.9 * std::pow(scaled, -0.2) : 5.0;
            h *= std::clamp(factor, 0.2, 5.0);
        }
    }
    return y;
}

// ---------------------------------------------------------------------------
// Loop diagnostics
// ---------------------------------------------------------------------------

struct MonodromyResult {
    Eigen::Matrix2cd loop_a, loop_b, loop_puncture;
    Complex lambda;
    double m = 0;
    double det_defect = 0;        ///< max |det M - 1| over the three loops
    double relation_defect = 0;   ///< parallelogram word B^-1 A^-1 B A vs M0^{+-1}
    double commutator_defect = 0; ///< |A B - B A|
    double common_line_defect = 0;
    double degeneracy = 0; ///< min |tr^2 - 4| over A, B: ~0 exactly at branch points
};

/// Minimum over eigenvectors v of A of the angle defect of B v from the line
/// of v; a large value certifies no common invariant line.
inline double irreducibility_probe(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b)
{
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> eig(a);
    double best = 1.0;
    for (int k = 0; k < 2; ++k) {
        Eigen::Vector2cd v = eig.eigenvectors().col(k);
        Eigen::Vector2cd w = b * v;
        double wn = w.norm();
        if (wn == 0)
            return 0.0;
        Complex overlap = (v.adjoint() * w)(0) / v.squaredNorm();
        Eigen::Vector2cd residual = w - overlap * v;
        best = std::min(best, residual.norm() / wn);
    }
    return best;
}

inline double irreducibility_probe(const MonodromyResult& r)
{
    return irreducibility_probe(r.loop_a, r.loop_b);
}

/// Transports around the two period loops and a 64-gon around the puncture
/// enclosed by their parallelogram, all based at the same basepoint.
inline MonodromyResult monodromy_group(double m, Complex lambda, const Lattice& lat,
                                       Complex basepoint)
{
    MonodromyResult result;
    result.lambda = lambda;
    result.m = m;

    result.loop_a = transport(m, lambda, lat, {basepoint, basepoint + lat.omega1()});
    result.loop_b = transport(m, lambda, lat, {basepoint, basepoint + lat.omega2()});

    // puncture representative inside the basepoint's period parallelogram
    Complex w1 = lat.omega1(), w2 = lat.omega2();
    double det = std::real(w1) * std::imag(w2) - std::imag(w1) * std::real(w2);
    double x = (std::imag(w2) * std::real(basepoint) - std::real(w2) * std::imag(basepoint)) / det;
    double y = (-std::imag(w1) * std::real(basepoint) + std::real(w1) * std::imag(basepoint)) / det;
    Complex puncture = (std::floor(x) + 1.0) * w1 + (std::floor(y) + 1.0) * w2;

    double radius = 0.05 * std::abs(lat.omega1());
    Complex dir = (basepoint - puncture) / std::abs(basepoint - puncture);
    std::vector<Complex> loop{basepoint};
    const int gon = 64;
    double phase0 = std::arg(dir);
    loop.push_back(puncture + radius * dir);
    for (int k = 1; k <= gon; ++k)
        loop.push_back(puncture +
                       radius * std::polar(1.0, phase0 + 2 * std::numbers::pi * k / gon));
    loop.push_back(basepoint);
    result.loop_puncture = transport(m, lambda, lat, loop);

    auto det_defect = [](const Eigen::Matrix2cd& mt) { return std::abs(mt.determinant() - 1.0); };
    result.det_defect = std::max({det_defect(result.loop_a), det_defect(result.loop_b),
                                  det_defect(result.loop_puncture)});

    // Transfer matrices compose right-to-left; the parallelogram boundary
    // (legs A, B, A reversed, B reversed) encloses exactly the puncture.
    Eigen::Matrix2cd grp = result.loop_b.inverse() * result.loop_a.inverse() * result.loop_b *
                           result.loop_a;
    result.relation_defect =
        std::min((grp - result.loop_puncture).norm(),
                 (grp - result.loop_puncture.inverse()).norm());
    result.commutator_defect =
        (result.loop_a * result.loop_b - result.loop_b * result.loop_a).norm();
    result.common_line_defect = irreducibility_probe(result.loop_a, result.loop_b);
    auto floquet_gap = [](const Eigen::Matrix2cd& mt) {
        Complex tr = mt.trace();
        return std::abs(tr * tr - 4.0);
    };
    result.degeneracy = std::min(floquet_gap(result.loop_a), floquet_gap(result.loop_b));
    return result;
}

inline Complex default_basepoint(const Lattice& lat) { return lat.from_unit_cell(0.37, 0.41); }

// ---------------------------------------------------------------------------
// Scan over eigenvalues
// ---------------------------------------------------------------------------

struct ScanRow {
    Complex lambda;
    double commutator_defect = 0;
    double det_defect = 0;
    double relation_defect = 0;
    double common_line_defect = 0;
    double degeneracy = 0;
    bool flagged = false; ///< defect profile deviates from the majority
};

/// Per-lambda defect table. Outliers are flagged, never suppressed: which
/// numeric lambda are non-generic is not decidable from finitely many runs.
inline std::vector<ScanRow> commutativity_scan(double m, const std::vector<Complex>& lambdas,
                                               const Lattice& lat)
{
    std::vector<ScanRow> rows;
    rows.reserve(lambdas.size());
    for (Complex lambda : lambdas) {
        MonodromyResult r = monodromy_group(m, lambda, lat, default_basepoint(lat));
        rows.push_back({lambda, r.commutator_defect, r.det_defect, r.relation_defect,
                        r.common_line_defect, r.degeneracy});
    }
    auto median_of = [](std::vector<double> v) {
        if (v.empty())
            return 0.0;
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    std::vector<double> comm, degen;
    for (const auto& row : rows) {
        comm.push_back(row.commutator_defect);
        degen.push_back(row.degeneracy);
    }
    double median_comm = median_of(comm), median_degen = median_of(degen);
    for (auto& row : rows)
        row.flagged = row.commutator_defect > 10 * std::max(median_comm, 1e-12) ||
                      row.det_defect > 1e-8 || row.relation_defect > 1e-6 ||
                      row.degeneracy < 1e-2 * median_degen;
    return rows;
}

} // namespace qcis
