#pragma once

// Formal solution bases and rank of the eigenvalue problem, commutant search
// by undetermined coefficients, the Burchnall-Chaundy spectral polynomial,
// the algebraic-type verdict and the centralizer commutativity property.

#include "qcis/elliptic.hpp"
#include "qcis/linalg.hpp"
#include "qcis/opalg.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcis {

struct SingularPoint : std::domain_error {
    SingularPoint() : std::domain_error("leading coefficient vanishes at the base point") {}
};
struct NonScalarAction : std::runtime_error {
    explicit NonScalarAction(const std::string& what) : std::runtime_error(what) {}
};
struct InterpolationMismatch : std::runtime_error {
    explicit InterpolationMismatch(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Base points on the curve p'^2 = 4p^3 - g2 p - g3
// ---------------------------------------------------------------------------

template <class K>
struct CurvePoint {
    K p, pp;

    bool on_curve(const EllipticInvariants& inv) const
    {
        K rhs = K(4) * p * p * p - K(inv.g2) * p - K(inv.g3);
        return pp * pp == rhs;
    }
};

/// Smallest-height exact point on the curve: rational (p0, p0') when one
/// exists within the height bound, otherwise Gaussian-rational (p0, r*i).
inline CurvePoint<GaussianRational> default_base_point(const EllipticInvariants& inv,
                                                       int max_height = 60)
{
    std::optional<CurvePoint<GaussianRational>> imaginary;
    for (int h = 1; h <= max_height; ++h) {
        for (int d = 1; d <= h; ++d) {
            int an = h - d;
            for (int n : {an, -an}) {
                if (boost::multiprecision::gcd(Integer(std::abs(n)), Integer(d)) != 1)
                    continue;
                Rational p0(n, d);
                Rational rhs = 4 * p0 * p0 * p0 - inv.g2 * p0 - inv.g3;
                if (auto r = exact_sqrt(rhs))
                    return {GaussianRational(p0), GaussianRational(*r)};
                if (!imaginary) {
                    if (auto r = exact_sqrt(-rhs))
                        imaginary = CurvePoint<GaussianRational>{
                            GaussianRational(p0), GaussianRational(Rational(0), *r)};
                }
                if (n == 0)
                    break; // 0 == -0
            }
        }
    }
    if (imaginary)
        return *imaginary;
    throw std::runtime_error("no exact base point of height <= " + std::to_string(max_height));
}

// ---------------------------------------------------------------------------
// Formal solution bases (Frobenius recursion at an ordinary point)
// ---------------------------------------------------------------------------

template <class K>
struct SolutionBasis {
    K lambda;
    CurvePoint<K> base;
    std::vector<LaurentSeries<K>> basis; ///< echelon: basis[k] = u^k + O(u^N)
};

/// N = order(L) echelonized series solutions of (L - lambda) psi = 0 at the
/// base point; coefficients of L are Taylor-expanded there through the
/// iterated ring derivation.
template <class K>
SolutionBasis<K> solution_basis(const DiffOp<EllipticRing>& op, const K& lambda,
                                const CurvePoint<K>& base, int trunc = kDefaultTrunc)
{
    if (op.is_zero() || op.order() < 1)
        throw std::invalid_argument("solution_basis needs an operator of positive order");
    if (!base.on_curve(op.ring().inv))
        throw std::invalid_argument("base point does not satisfy the curve relation");
    const int n = op.order();
    // Taylor tables: taylor[j][q] = q-th Taylor coefficient of a_j at the base.
    std::vector<std::vector<K>> taylor(static_cast<std::size_t>(n) + 1);
    for (int j = 0; j <= n; ++j) {
        EllipticElement cur = op.coeff(j);
        K fact(1);
        for (int q = 0; q < trunc; ++q) {
            if (q > 0) {
                cur = op.ring().derive(cur);
                fact *= K(q);
            }
            taylor[static_cast<std::size_t>(j)].push_back(cur.template eval<K>(base.p, base.pp) /
                                                          fact);
        }
    }
    const K lead = taylor[static_cast<std::size_t>(n)][0];
    if (scalar_is_zero(lead))
        throw SingularPoint();

    SolutionBasis<K> out{lambda, base, {}};
    for (int k = 0; k < n; ++k) {
        std::vector<K> c(static_cast<std::size_t>(trunc), K{});
        c[static_cast<std::size_t>(k)] = K(1);
        // Coefficient of u^s in sum_j a_j psi^(j) - lambda psi determines c_{s+n}.
        for (int s = 0; s + n < trunc; ++s) {
            K acc = -lambda * c[static_cast<std::size_t>(s)];
            for (int j = 0; j <= n; ++j) {
                // contribution sum_{q+i=s} taylor[j][q] * c_{i+j} * (i+j)!/i!
                for (int q = 0; q <= s; ++q) {
                    int i = s - q;
                    if (i + j >= trunc)
                        continue;
                    if (j == n && q == 0 && i == s)
                        continue; // the unknown c_{s+n} itself
                    K falling(1);
                    for (int t = i + 1; t <= i + j; ++t)
                        falling *= K(t);
                    acc += taylor[static_cast<std::size_t>(j)][static_cast<std::size_t>(q)] *
                           c[static_cast<std::size_t>(i + j)] * falling;
                }
            }
            K falling(1);
            for (int t = s + 1; t <= s + n; ++t)
                falling *= K(t);
            c[static_cast<std::size_t>(s + n)] = -acc / (lead * falling);
        }
        out.basis.push_back(LaurentSeries<K>::from_coeffs(0, std::move(c), trunc));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rank
// ---------------------------------------------------------------------------

struct UnitFailure {
    int valuation; ///< valuation of the leading coefficient (> 0 means not a unit)
};

struct RankResult {
    int rank = 0;
    std::optional<UnitFailure> failure;
};

/// Formal-disc rank: order(L) when the leading coefficient is a unit of
/// k[[u]]; otherwise reports the unit-failure locus.
template <class K>
RankResult rank(const DiffOp<SeriesRing<K>>& op)
{
    if (op.is_zero())
        return {0, UnitFailure{0}};
    const auto& lead = op.leading();
    if (lead.valuation() != 0)
        return {0, UnitFailure{lead.valuation()}};
    return {op.order(), std::nullopt};
}

/// Elliptic-coefficient rank at a generic point: any nonzero elliptic
/// function is a unit in the local ring away from its finitely many zeros.
inline RankResult rank(const DiffOp<EllipticRing>& op)
{
    if (op.is_zero())
        return {0, UnitFailure{0}};
    return {op.order(), std::nullopt};
}

// ---------------------------------------------------------------------------
// Commutant search by undetermined coefficients
// ---------------------------------------------------------------------------

struct CommutantUnknown {
    int j; ///< the D^j slot
    int a; ///< power of p
    int b; ///< power of p' (0 or 1)
};

struct CommutantSystem {
    MatrixX<Rational> matrix;
    VectorX<Rational> rhs;
    std::vector<CommutantUnknown> unknowns;
};

namespace detail {

inline std::vector<CommutantUnknown> ansatz_monomials(int s, int wbound)
{
    std::vector<CommutantUnknown> unknowns;
    for (int j = s - 1; j >= 0; --j) {
        int cap = std::min(wbound, s) - j;
        for (int b = 0; b <= 1; ++b)
            for (int a = 0; 2 * a + 3 * b <= cap; ++a)
                unknowns.push_back({j, a, b});
    }
    return unknowns;
}

// Flattens an operator into the (D-power, monomial) coordinate table used by
// the linear system; rows come from a fixed enumeration of slots.
struct SlotIndex {
    std::map<std::pair<int, EllipticElement::Monomial>, int> index;

    void absorb(const DiffOp<EllipticRing>& op)
    {
        for (int k = 0; k <= op.order(); ++k)
            for (const auto& [mono, c] : op.coeff(k).terms())
                index.try_emplace({k, mono}, 0);
    }
    void number()
    {
        int n = 0;
        for (auto& [slot, id] : index)
            id = n++;
    }
    int rows() const { return static_cast<int>(index.size()); }
};

} // namespace detail

/// Assembles the exact linear system expressing [L, D^s + sum b_j D^j] = 0 in
/// the undetermined coefficients of the b_j.
inline CommutantSystem assemble_commutant_system(const DiffOp<EllipticRing>& lame, int s,
                                                 int wbound)
{
    using EOp = DiffOp<EllipticRing>;
    const EllipticRing& ring = lame.ring();
    CommutantSystem sys;
    sys.unknowns = detail::ansatz_monomials(s, wbound);

    EOp fixed = commutator(lame, EOp::d_power(ring, s));
    std::vector<EOp> columns;
    columns.reserve(sys.unknowns.size());
    for (const auto& u : sys.unknowns)
        columns.push_back(
            commutator(lame, EOp::d_power(ring, u.j, EllipticElement::monomial(u.a, u.b))));

    detail::SlotIndex slots;
    slots.absorb(fixed);
    for (const auto& col : columns)
        slots.absorb(col);
    slots.number();

    sys.matrix = MatrixX<Rational>::Zero(slots.rows(), static_cast<int>(columns.size()));
    sys.rhs = VectorX<Rational>::Zero(slots.rows());
    for (std::size_t c = 0; c < columns.size(); ++c)
        for (int k = 0; k <= columns[c].order(); ++k)
            for (const auto& [mono, v] : columns[c].coeff(k).terms())
                sys.matrix(slots.index.at({k, mono}), static_cast<int>(c)) = v;
    for (int k = 0; k <= fixed.order(); ++k)
        for (const auto& [mono, v] : fixed.coeff(k).terms())
            sys.rhs(slots.index.at({k, mono})) = -v;
    return sys;
}

struct CommutantSearch {
    std::optional<DiffOp<EllipticRing>> op; ///< normalized witness; empty = NotFound
    int nullity = 0;                        ///< dimension of the homogeneous solutions
    int unknowns = 0;
    int equations = 0;
};

/// Searches for Q = D^s + sum_{j<s} b_j D^j with [L, Q] = 0 exactly, b_j in
/// Q[p, p'] of weighted degree <= s - j (and <= wbound - j). The returned
/// operator is normalized to be skew-adjoint, which forces the D^{s-1}
/// coefficient to vanish. NotFound is a bounded-search verdict.
inline CommutantSearch find_commuting(const DiffOp<EllipticRing>& lame, int s, int wbound = -1)
{
    using EOp = DiffOp<EllipticRing>;
    if (lame.order() != 2 || !(lame.leading() == EllipticElement(1)))
        throw std::invalid_argument("find_commuting expects a monic order-2 operator");
    if (s < 1 || s % 2 == 0)
        throw std::invalid_argument("find_commuting expects odd target order");
    if (wbound < 0)
        wbound = s;

    const EllipticRing& ring = lame.ring();
    CommutantSystem sys = assemble_commutant_system(lame, s, wbound);
    auto sol = solve_affine<Rational>(sys.matrix, sys.rhs);
    CommutantSearch out;
    out.unknowns = static_cast<int>(sys.unknowns.size());
    out.equations = static_cast<int>(sys.matrix.rows());
    out.nullity = static_cast<int>(nullspace(sys.matrix).cols());
    if (!sol)
        return out;

    std::vector<EllipticElement> coeffs(static_cast<std::size_t>(s) + 1);
    coeffs[static_cast<std::size_t>(s)] = EllipticElement(1);
    for (std::size_t i = 0; i < sys.unknowns.size(); ++i) {
        const auto& u = sys.unknowns[i];
        coeffs[static_cast<std::size_t>(u.j)].add_term(u.a, u.b,
                                                       sol->particular(static_cast<int>(i)));
    }
    EOp q0(ring, std::move(coeffs));
    // Skew part: kills every self-adjoint kernel direction (1, L, L^2, ...)
    // and keeps the leading D^s term since s is odd.
    EOp q = scale(sub(q0, adjoint(q0)), ring.constant(Rational(1, 2)));
    if (!commutator(lame, q).is_zero())
        throw std::logic_error("commutant solver produced a non-commuting operator");
    out.op = q;
    return out;
}

// ---------------------------------------------------------------------------
// Spectral polynomial (Burchnall-Chaundy curve)
// ---------------------------------------------------------------------------

class SpectralCurve {
public:
    /// coeffs[k] multiplies lambda^k; monic of odd degree by construction.
    explicit SpectralCurve(std::vector<Rational> coeffs) : c_(std::move(coeffs))
    {
        if (c_.empty() || c_.back() != 1)
            throw InterpolationMismatch("spectral polynomial is not monic");
    }

    int degree() const { return static_cast<int>(c_.size()) - 1; }
    const std::vector<Rational>& coeffs() const { return c_; }

    template <class K>
    K eval(const K& x) const
    {
        K acc{};
        for (int k = degree(); k >= 0; --k)
            acc = acc * x + K(c_[static_cast<std::size_t>(k)]);
        return acc;
    }

    /// disc(P) = (-1)^{n(n-1)/2} Res(P, P') for monic P, via the Sylvester matrix.
    Rational discriminant() const
    {
        int n = degree();
        if (n < 1)
            return Rational(1);
        std::vector<Rational> dp(static_cast<std::size_t>(n), Rational(0));
        for (int k = 1; k <= n; ++k)
            dp[static_cast<std::size_t>(k - 1)] = Rational(k) * c_[static_cast<std::size_t>(k)];
        int rows = n + (n - 1);
        MatrixX<Rational> syl = MatrixX<Rational>::Zero(rows, rows);
        for (int r = 0; r < n - 1; ++r)
            for (int k = 0; k <= n; ++k)
                syl(r, r + n - k) = c_[static_cast<std::size_t>(k)];
        for (int r = 0; r < n; ++r)
            for (int k = 0; k <= n - 1; ++k)
                syl(n - 1 + r, r + n - 1 - k) = dp[static_cast<std::size_t>(k)];
        Rational res = determinant(syl);
        return ((n * (n - 1) / 2) % 2 ? -res : res);
    }

private:
    std::vector<Rational> c_;
};

/// Matrix of Q acting on the echelonized lambda-fiber (exact). Q preserves
/// the fiber because it commutes with L; a failure to land back in the span
/// signals a broken precondition or too low a truncation.
template <class K>
MatrixX<K> centralizer_action(const DiffOp<EllipticRing>& lame, const DiffOp<EllipticRing>& q,
                              const K& lambda, const CurvePoint<K>& base,
                              int trunc = kDefaultTrunc)
{
    const int n = lame.order();
    SolutionBasis<K> fiber = solution_basis(lame, lambda, base, trunc);
    auto q_local = taylor_op_at(q, base.p, base.pp, trunc);
    MatrixX<K> action(n, n);
    for (int k = 0; k < n; ++k) {
        LaurentSeries<K> image = qcis::apply(q_local, fiber.basis[static_cast<std::size_t>(k)]);
        LaurentSeries<K> remainder = image;
        for (int i = 0; i < n; ++i) {
            K coord = image.at_or_zero(i);
            action(i, k) = coord;
            remainder = sub(remainder, scale(fiber.basis[static_cast<std::size_t>(i)], coord));
        }
        if (!remainder.is_zero())
            throw NonScalarAction("operator does not preserve the solution fiber");
    }
    return action;
}

/// Evaluates Q^2 on solution bases at 2m+2 exact sample eigenvalues, checks
/// the action is scalar, interpolates the monic degree-(2m+1) polynomial and
/// certifies the operator identity Q^2 - P(L) = 0 by full expansion.
inline SpectralCurve spectral_polynomial(const DiffOp<EllipticRing>& lame,
                                         const DiffOp<EllipticRing>& q,
                                         int trunc = kDefaultTrunc)
{
    using EOp = DiffOp<EllipticRing>;
    if (lame.order() != 2)
        throw std::invalid_argument("spectral_polynomial expects an order-2 operator");
    if (q.order() < 1 || q.order() % 2 == 0)
        throw std::invalid_argument("spectral_polynomial expects odd order(Q)");
    if (!commutator(lame, q).is_zero())
        throw std::invalid_argument("spectral_polynomial expects [L, Q] = 0");

    const int deg = q.order(); // 2m+1
    CurvePoint<GaussianRational> base = default_base_point(lame.ring().inv);
    std::vector<Rational> xs, ys;
    int lambda_int = 0, skipped = 0;
    while (static_cast<int>(xs.size()) < deg + 1) {
        if (skipped > 10)
            throw NonScalarAction("fiber action of Q^2 repeatedly non-scalar");
        GaussianRational lambda{Rational(lambda_int), Rational(0)};
        MatrixX<GaussianRational> action =
            centralizer_action(lame, q, lambda, base, trunc);
        MatrixX<GaussianRational> sq = action * action;
        bool scalar = true;
        for (int i = 0; i < sq.rows() && scalar; ++i)
            for (int j = 0; j < sq.cols() && scalar; ++j)
                if (i == j ? !(sq(i, j) == sq(0, 0)) : !sq(i, j).is_zero())
                    scalar = false;
        if (!scalar || !sq(0, 0).is_real()) {
            ++skipped;
            ++lambda_int;
            continue;
        }
        xs.emplace_back(lambda_int);
        ys.push_back(sq(0, 0).re);
        ++lambda_int;
    }

    // Exact Lagrange interpolation through (xs, ys).
    std::vector<Rational> poly(static_cast<std::size_t>(deg) + 1, Rational(0));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::vector<Rational> basis{Rational(1)};
        Rational denom(1);
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (j == i)
                continue;
            basis.insert(basis.begin(), Rational(0));
            for (std::size_t k = 0; k + 1 < basis.size(); ++k)
                basis[k] -= xs[j] * basis[k + 1];
            denom *= xs[i] - xs[j];
        }
        Rational w = ys[i] / denom;
        for (std::size_t k = 0; k < basis.size(); ++k)
            poly[k] += w * basis[k];
    }
    if (poly.back() != 1)
        throw InterpolationMismatch("interpolated polynomial is not monic of degree 2m+1");
    SpectralCurve curve(poly);

    // Full operator verification: Q^2 = P(L) exactly.
    const EllipticRing& ring = lame.ring();
    EOp horner = EOp::zero(ring);
    for (int k = curve.degree(); k >= 0; --k) {
        horner = compose(horner, lame);
        horner = add(horner, scale(EOp::identity(ring),
                                   ring.constant(curve.coeffs()[static_cast<std::size_t>(k)])));
    }
    if (!sub(compose(q, q), horner).is_zero())
        throw InterpolationMismatch("operator identity Q^2 - P(L) = 0 failed");
    return curve;
}

// ---------------------------------------------------------------------------
// Algebraic-type verdict and the commutativity property
// ---------------------------------------------------------------------------

struct AlgebraicTypeVerdict {
    bool algebraic = false;
    int searched_max_order = 0;
    int witness_order = 0;
    std::optional<DiffOp<EllipticRing>> witness;
    std::optional<SpectralCurve> curve;
    int regular_semisimple_samples = 0; ///< sampled lambda with distinct eigenvalues
};

/// Bounded search for a commuting operator acting regularly and semisimply
/// on the fiber. The negative verdict means "no witness up to max_order",
/// never a proof of non-existence.
inline AlgebraicTypeVerdict algebraic_type_test(const DiffOp<EllipticRing>& lame, int max_order,
                                                int wbound = -1, int samples = 5,
                                                std::uint64_t seed = 1)
{
    AlgebraicTypeVerdict verdict;
    verdict.searched_max_order = max_order;
    for (int s = 1; s <= max_order; s += 2) {
        CommutantSearch found = find_commuting(lame, s, wbound < 0 ? s : wbound);
        if (!found.op)
            continue;
        SpectralCurve curve = spectral_polynomial(lame, *found.op);
        CurvePoint<GaussianRational> base = default_base_point(lame.ring().inv);
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> num(-30, 30), den(1, 6);
        int distinct = 0;
        for (int t = 0; t < samples; ++t) {
            Rational lambda(num(rng), den(rng));
            GaussianRational gl(lambda);
            MatrixX<GaussianRational> action = centralizer_action(lame, *found.op, gl, base);
            // Eigenvalues are distinct iff the characteristic discriminant
            // tr^2 - 4 det is nonzero; by the curve identity that equals 4 P(lambda).
            GaussianRational tr = action(0, 0) + action(1, 1);
            GaussianRational det = action(0, 0) * action(1, 1) - action(0, 1) * action(1, 0);
            GaussianRational disc = tr * tr - GaussianRational(4) * det;
            bool eig_distinct = !disc.is_zero();
            if (eig_distinct != (curve.eval(lambda) != 0))
                throw NonScalarAction("fiber discriminant disagrees with P(lambda)");
            if (eig_distinct)
                ++distinct;
        }
        if (distinct == 0)
            continue; // never regular on the sampled fibers: keep searching
        verdict.algebraic = true;
        verdict.witness_order = s;
        verdict.witness = *found.op;
        verdict.curve = curve;
        verdict.regular_semisimple_samples = distinct;
        return verdict;
    }
    return verdict;
}

struct CommutativityReport {
    int pairs = 0;
    bool all_commute = true;
    std::vector<std::pair<int, int>> failures;
};

/// Theorem-style property check: every pair of found centralizer elements
/// commutes exactly.
inline CommutativityReport
centralizer_commutativity_check(const std::vector<DiffOp<EllipticRing>>& found)
{
    CommutativityReport report;
    for (std::size_t i = 0; i < found.size(); ++i)
        for (std::size_t j = i + 1; j < found.size(); ++j) {
            ++report.pairs;
            if (!commutator(found[i], found[j]).is_zero()) {
                report.all_commute = false;
                report.failures.emplace_back(static_cast<int>(i), static_cast<int>(j));
            }
        }
    return report;
}

// ---------------------------------------------------------------------------
// The Lame family (used across the toolkit; the worked example lives in lame.hpp)
// ---------------------------------------------------------------------------

/// L_m = D^2 - m(m+1) p over the elliptic ring.
inline DiffOp<EllipticRing> build_lame(const Rational& m, const EllipticRing& ring)
{
    EllipticElement pot = (-m * (m + 1)) * EllipticElement::p();
    return DiffOp<EllipticRing>(ring, {pot, ring.zero(), ring.one()});
}

} // namespace qcis
