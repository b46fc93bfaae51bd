#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcis/commutant.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <map>
#include <random>

using namespace qcis;
using EOp = DiffOp<EllipticRing>;
using SOp = DiffOp<SeriesRing<Rational>>;
using G = GaussianRational;

namespace {

const EllipticRing kRing{EllipticInvariants(4, 1)};

// Hand-derived witness for m = 1 (independent elimination of the 4-unknown
// system [L, D^3 + b2 D^2 + b1 D + b0] = 0): Q_1 = D^3 - 3 p D - (3/2) p'.
EOp frozen_q1()
{
    EllipticElement b1 = Rational(-3) * EllipticElement::p();
    EllipticElement b0 = Rational(-3, 2) * EllipticElement::p_prime();
    return EOp(kRing, {b0, b1, kRing.zero(), kRing.one()});
}

} // namespace

TEST_CASE("default base point: Gaussian fallback for g2=4, g3=1")
{
    auto base = default_base_point(kRing.inv);
    CHECK(base.on_curve(kRing.inv));
    CHECK(base.p == G(0));
    CHECK(base.pp == G::i()); // no small rational point on y^2 = 4x^3 - 4x - 1

    EllipticInvariants flat(4, 0);
    auto real_base = default_base_point(flat);
    CHECK(real_base.on_curve(flat));
    CHECK(real_base.pp.is_real());
}

TEST_CASE("solution_basis: double integration for D^2 at lambda 0")
{
    EOp d2 = EOp::d_power(kRing, 2);
    auto base = default_base_point(kRing.inv);
    auto fiber = solution_basis(d2, G(0), base, 12);
    CHECK(fiber.basis.size() == 2);
    CHECK(fiber.basis[0] == LaurentSeries<G>::constant(G(1), 12));
    CHECK(fiber.basis[1] == LaurentSeries<G>::monomial(G(1), 1, 12));
}

TEST_CASE("solution_basis: first-order exponential")
{
    EOp d = EOp::d_power(kRing, 1);
    auto base = default_base_point(kRing.inv);
    G c(Rational(3, 2));
    auto fiber = solution_basis(d, c, base, 10);
    REQUIRE(fiber.basis.size() == 1);
    G pw(1), fact(1);
    for (int k = 0; k < 10; ++k) {
        if (k > 0) {
            pw *= c;
            fact *= G(k);
        }
        CHECK(fiber.basis[0].at_or_zero(k) == pw / fact);
    }
}

TEST_CASE("solution_basis: Lame m=1 echelon basis with small residual")
{
    EOp lame = build_lame(1, kRing);
    auto base = default_base_point(kRing.inv);
    int trunc = 24;
    auto fiber = solution_basis(lame, G(0), base, trunc);
    REQUIRE(fiber.basis.size() == 2);
    // echelon shape
    CHECK(fiber.basis[0].at_or_zero(0) == G(1));
    CHECK(fiber.basis[0].at_or_zero(1) == G(0));
    CHECK(fiber.basis[1].at_or_zero(0) == G(0));
    CHECK(fiber.basis[1].at_or_zero(1) == G(1));
    // residual through the available window, via an independent apply
    auto local = taylor_op_at(lame, base.p, base.pp, trunc);
    for (const auto& psi : fiber.basis) {
        auto residual = qcis::apply(local, psi); // lambda = 0
        CHECK(residual.is_zero());
        CHECK(residual.trunc() >= trunc - 2);
    }
}

TEST_CASE("solution_basis: singular base point rejected")
{
    // leading coefficient p vanishes at the base point (0, i)
    EOp op(kRing, {kRing.one(), kRing.zero(), EllipticElement::p()});
    auto base = default_base_point(kRing.inv);
    CHECK_THROWS_AS((void)solution_basis(op, G(0), base, 10), SingularPoint);
}

TEST_CASE("rank: Lame family, series examples, unit failure")
{
    CHECK(rank(build_lame(1, kRing)).rank == 2);
    CHECK(rank(build_lame(3, kRing)).rank == 2);

    SeriesRing<Rational> sring{16};
    using S = LaurentSeries<Rational>;
    SOp d3_plus_ud(sring, {S::zero(16), S::monomial(1, 1, 16), S::zero(16),
                           S::constant(1, 16)});
    CHECK(rank(d3_plus_ud).rank == 3);
    CHECK(!rank(d3_plus_ud).failure);

    SOp u_d(sring, {S::zero(16), S::monomial(1, 1, 16)});
    auto r = rank(u_d);
    CHECK(r.rank == 0);
    REQUIRE(r.failure);
    CHECK(r.failure->valuation == 1);
}

TEST_CASE("find_commuting: m=1 returns the frozen hand-derived Q_1")
{
    EOp lame = build_lame(1, kRing);
    auto search = find_commuting(lame, 3);
    REQUIRE(search.op);
    CHECK(*search.op == frozen_q1());
    CHECK(commutator(lame, *search.op).is_zero());
    CHECK(adjoint(*search.op) == neg(*search.op));
    CHECK(search.op->coeff(2).is_zero()); // no D^2 term
}

TEST_CASE("find_commuting: half-integer m has no witness; nullspace matches brute force")
{
    for (Rational m : {Rational(1, 2), Rational(3, 2)}) {
        EOp lame = build_lame(m, kRing);
        for (int s : {3, 5, 7}) {
            auto search = find_commuting(lame, s);
            CHECK(!search.op);

            CommutantSystem sys = assemble_commutant_system(lame, s, s);
            test::OracleSystem oracle = test::oracle_system(lame, s, s);
            CHECK(!solve_affine<Rational>(sys.matrix, sys.rhs));
            CHECK(!solve_affine<Rational>(oracle.a, oracle.b));

            auto n_solver = nullspace(sys.matrix);
            auto n_oracle = nullspace(oracle.a);
            CHECK(n_solver.cols() == n_oracle.cols());
            // same unknown enumeration on both routes: kernels must agree as sets
            for (int c = 0; c < n_oracle.cols(); ++c) {
                VectorX<Rational> image = sys.matrix * n_oracle.col(c);
                for (int i = 0; i < image.size(); ++i)
                    CHECK(image(i) == 0);
            }
            for (int c = 0; c < n_solver.cols(); ++c) {
                VectorX<Rational> image = oracle.a * n_solver.col(c);
                for (int i = 0; i < image.size(); ++i)
                    CHECK(image(i) == 0);
            }
        }
    }
}

TEST_CASE("find_commuting: m=2 witness is skew-adjoint of order 5")
{
    EOp lame = build_lame(2, kRing);
    auto search = find_commuting(lame, 5);
    REQUIRE(search.op);
    CHECK(search.op->order() == 5);
    CHECK(commutator(lame, *search.op).is_zero());
    CHECK(adjoint(*search.op) == neg(*search.op));
    CHECK(search.op->coeff(4).is_zero());
}

TEST_CASE("spectral_polynomial: frozen P_1 for g2=4, g3=1")
{
    EOp lame = build_lame(1, kRing);
    EOp q1 = frozen_q1();
    SpectralCurve curve = spectral_polynomial(lame, q1);
    // Hand derivation: mu = -p'(a)/2 on psi = e^{int f}, so
    // P_1(t) = t^3 - (g2/4) t - g3/4 = t^3 - t - 1/4.
    REQUIRE(curve.degree() == 3);
    CHECK(curve.coeffs()[3] == 1);
    CHECK(curve.coeffs()[2] == 0);
    CHECK(curve.coeffs()[1] == -1);
    CHECK(curve.coeffs()[0] == Rational(-1, 4));
    // disc(P_1) = (g2^3 - 27 g3^2)/16 = 37/16 != 0
    CHECK(curve.discriminant() == Rational(37, 16));
    CHECK(curve.discriminant() == kRing.inv.discriminant() / 16);
}

TEST_CASE("spectral_polynomial: degenerate even-order input rejected")
{
    EOp lame = build_lame(1, kRing);
    CHECK_THROWS_AS((void)spectral_polynomial(lame, lame), std::invalid_argument);
}

TEST_CASE("spectral_polynomial: monic odd degree for m = 1, 2")
{
    for (int m : {1, 2}) {
        EOp lame = build_lame(m, kRing);
        auto search = find_commuting(lame, 2 * m + 1);
        REQUIRE(search.op);
        SpectralCurve curve = spectral_polynomial(lame, *search.op);
        CHECK(curve.degree() == 2 * m + 1);
        CHECK(curve.coeffs().back() == 1);
    }
}

TEST_CASE("centralizer_action: L acts as the scalar lambda")
{
    EOp lame = build_lame(1, kRing);
    auto base = default_base_point(kRing.inv);
    G lambda(Rational(5, 3));
    auto action = centralizer_action(lame, lame, lambda, base, 20);
    CHECK(action(0, 0) == lambda);
    CHECK(action(1, 1) == lambda);
    CHECK(action(0, 1).is_zero());
    CHECK(action(1, 0).is_zero());
}

TEST_CASE("centralizer_action: trace zero, det = -P_1(lambda), fiber identity")
{
    EOp lame = build_lame(1, kRing);
    EOp q1 = frozen_q1();
    SpectralCurve curve = spectral_polynomial(lame, q1);
    auto base = default_base_point(kRing.inv);

    std::mt19937_64 rng(140814);
    for (int t = 0; t < 6; ++t) {
        G lambda(test::random_rational(rng, 12, 5));
        auto action = centralizer_action(lame, q1, lambda, base, 24);
        CHECK((action(0, 0) + action(1, 1)).is_zero());
        G det = action(0, 0) * action(1, 1) - action(0, 1) * action(1, 0);
        CHECK(det == -curve.eval(lambda));
        auto sq = MatrixX<G>(action * action);
        CHECK(sq(0, 0) == curve.eval(lambda));
        CHECK(sq(1, 1) == curve.eval(lambda));
        CHECK(sq(0, 1).is_zero());
        CHECK(sq(1, 0).is_zero());
    }

    // Gaussian eigenvalue: the exact-complex mode end to end.
    G lambda = G::i();
    auto action = centralizer_action(lame, q1, lambda, base, 24);
    auto sq = MatrixX<G>(action * action);
    CHECK(sq(0, 0) == curve.eval(lambda));
    CHECK(sq(0, 1).is_zero());
}

TEST_CASE("centralizer_action: double eigenvalue exactly at branch points")
{
    // On g2=4, g3=0 the curve P_1(t) = t^3 - t has rational roots 0, 1, -1.
    EllipticRing flat{EllipticInvariants(4, 0)};
    EOp lame = build_lame(1, flat);
    auto search = find_commuting(lame, 3);
    REQUIRE(search.op);
    SpectralCurve curve = spectral_polynomial(lame, *search.op);
    CHECK(curve.eval(Rational(0)) == 0);
    CHECK(curve.eval(Rational(1)) == 0);

    auto base = default_base_point(flat.inv);
    for (int root : {0, 1, -1}) {
        auto action = centralizer_action(lame, *search.op, G(root), base, 24);
        G tr = action(0, 0) + action(1, 1);
        G det = action(0, 0) * action(1, 1) - action(0, 1) * action(1, 0);
        CHECK((tr * tr - G(4) * det).is_zero()); // discriminant 0: double eigenvalue
        auto sq = MatrixX<G>(action * action);
        CHECK(sq(0, 0).is_zero());
        CHECK(sq(0, 1).is_zero());
        CHECK(sq(1, 0).is_zero());
        CHECK(sq(1, 1).is_zero());
    }
    // and a non-branch value for contrast
    auto action = centralizer_action(lame, *search.op, G(2), base, 24);
    G tr = action(0, 0) + action(1, 1);
    G det = action(0, 0) * action(1, 1) - action(0, 1) * action(1, 0);
    CHECK(!(tr * tr - G(4) * det).is_zero());
}

TEST_CASE("algebraic_type_test: verdicts for m = 1, 1/2, 0")
{
    auto v1 = algebraic_type_test(build_lame(1, kRing), 7);
    CHECK(v1.algebraic);
    CHECK(v1.witness_order == 3);
    REQUIRE(v1.curve);
    CHECK(v1.curve->degree() == 3);
    CHECK(v1.regular_semisimple_samples > 0);

    auto vhalf = algebraic_type_test(build_lame(Rational(1, 2), kRing), 7);
    CHECK(!vhalf.algebraic);
    CHECK(vhalf.searched_max_order == 7);

    auto v0 = algebraic_type_test(build_lame(0, kRing), 7);
    CHECK(v0.algebraic);
    CHECK(v0.witness_order == 1);
    REQUIRE(v0.witness);
    CHECK(*v0.witness == EOp::d_power(kRing, 1));
}

TEST_CASE("centralizer commutativity property")
{
    EOp lame = build_lame(1, kRing);
    EOp q1 = frozen_q1();

    auto report = centralizer_commutativity_check({lame, q1, compose(q1, lame)});
    CHECK(report.pairs == 3);
    CHECK(report.all_commute);

    std::mt19937_64 rng(31);
    EOp poly = add(compose(lame, lame),
                   scale(lame, kRing.constant(test::random_rational(rng))));
    auto report2 = centralizer_commutativity_check({lame, poly});
    CHECK(report2.all_commute);

    auto report3 = centralizer_commutativity_check({lame});
    CHECK(report3.pairs == 0);
    CHECK(report3.all_commute);

    // discriminating power: D does not commute with L_1
    auto report4 = centralizer_commutativity_check({lame, EOp::d_power(kRing, 1)});
    CHECK(!report4.all_commute);
}
