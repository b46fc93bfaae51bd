#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcis/opalg.hpp"
#include "test_util.hpp"

#include <random>

using namespace qcis;
using S = LaurentSeries<Rational>;
using SOp = DiffOp<SeriesRing<Rational>>;
using EOp = DiffOp<EllipticRing>;

namespace {

const SeriesRing<Rational> kSRing{24};

SOp random_series_op(std::mt19937_64& rng, int max_order = 3)
{
    std::uniform_int_distribution<int> od(0, max_order);
    int n = od(rng);
    std::vector<S> coeffs;
    for (int j = 0; j <= n; ++j)
        coeffs.push_back(test::random_series<Rational>(
            rng, [](std::mt19937_64& r) { return test::random_rational(r); }, -2, 2, 6));
    return SOp(kSRing, std::move(coeffs));
}

EOp random_elliptic_op(const EllipticRing& ring, std::mt19937_64& rng, int max_order = 3)
{
    std::uniform_int_distribution<int> od(0, max_order), na(0, 2), nb(0, 1), nt(1, 3);
    int n = od(rng);
    std::vector<EllipticElement> coeffs;
    for (int j = 0; j <= n; ++j) {
        EllipticElement e;
        int terms = nt(rng);
        for (int t = 0; t < terms; ++t)
            e.add_term(na(rng), nb(rng), test::random_rational(rng));
        coeffs.push_back(e);
    }
    return EOp(ring, std::move(coeffs));
}

EOp lame_operator(const EllipticRing& ring, const Rational& m)
{
    EllipticElement pot = (-m * (m + 1)) * EllipticElement::p();
    return EOp(ring, {pot, ring.zero(), ring.one()});
}

} // namespace

TEST_CASE("compose: Leibniz base case D o u = uD + 1")
{
    SOp d = SOp::d_power(kSRing, 1);
    SOp u = SOp::mult(kSRing, S::monomial(Rational(1), 1, 24));
    SOp prod = compose(d, u);
    CHECK(prod.order() == 1);
    CHECK(prod.coeff(1) == S::monomial(Rational(1), 1, 24));
    CHECK(prod.coeff(0) == S::constant(Rational(1), 24));
}

TEST_CASE("compose: identity is neutral")
{
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 10; ++iter) {
        SOp a = random_series_op(rng);
        CHECK(compose(a, SOp::identity(kSRing)) == a);
        CHECK(compose(SOp::identity(kSRing), a) == a);
    }
}

TEST_CASE("commutator [D^2, p] = 2p'D + p'' over the elliptic ring")
{
    EllipticRing ring{EllipticInvariants(4, 1)};
    EOp d2 = EOp::d_power(ring, 2);
    EOp p = EOp::mult(ring, EllipticElement::p());
    EOp comm = commutator(d2, p);

    EllipticElement two_pp = Rational(2) * EllipticElement::p_prime();
    EllipticElement ppp; // 6p^2 - g2/2
    ppp.add_term(2, 0, 6);
    ppp.add_term(0, 0, -ring.inv.g2 / 2);
    CHECK(comm.order() == 1);
    CHECK(comm.coeff(1) == two_pp);
    CHECK(comm.coeff(0) == ppp);
}

TEST_CASE("commutator: polynomials in L commute with L")
{
    EllipticRing ring{EllipticInvariants(4, 1)};
    EOp lame = lame_operator(ring, 1);
    CHECK(commutator(lame, lame).is_zero());

    std::mt19937_64 rng(1234);
    for (int iter = 0; iter < 5; ++iter) {
        // random monic cubic P(L)
        EOp poly = compose(lame, compose(lame, lame));
        for (int k = 0; k < 3; ++k) {
            EOp lk = EOp::identity(ring);
            for (int i = 0; i < k; ++i)
                lk = compose(lk, lame);
            poly = add(poly, scale(lk, ring.constant(test::random_rational(rng))));
        }
        CHECK(commutator(lame, poly).is_zero());
        CHECK(poly.order() == 6);
    }
}

TEST_CASE("adjoint: D* = -D, odd powers flip, Lame operators are selfadjoint")
{
    EllipticRing ring{EllipticInvariants(4, 1)};
    EOp d = EOp::d_power(ring, 1);
    CHECK(adjoint(d) == neg(d));
    EOp d3 = EOp::d_power(ring, 3);
    CHECK(adjoint(d3) == neg(d3));

    for (int m : {0, 1, 2, 3}) {
        EOp lame = lame_operator(ring, m);
        CHECK(adjoint(lame) == lame);
    }
}

TEST_CASE("adjoint: involution and anti-homomorphism on random pairs")
{
    EllipticRing ring{EllipticInvariants(Rational(5, 3), Rational(1, 2))};
    std::mt19937_64 rng(5551);
    for (int iter = 0; iter < 20; ++iter) {
        EOp a = random_elliptic_op(ring, rng);
        EOp b = random_elliptic_op(ring, rng);
        CHECK(adjoint(adjoint(a)) == a);
        CHECK(adjoint(compose(a, b)) == compose(adjoint(b), adjoint(a)));
    }
}

TEST_CASE("compose: associativity on random triples (exact)")
{
    EllipticRing ring{EllipticInvariants(4, 1)};
    std::mt19937_64 rng(90210);
    for (int iter = 0; iter < 15; ++iter) {
        EOp a = random_elliptic_op(ring, rng, 2);
        EOp b = random_elliptic_op(ring, rng, 2);
        EOp c = random_elliptic_op(ring, rng, 2);
        CHECK(compose(compose(a, b), c) == compose(a, compose(b, c)));
    }
}

TEST_CASE("commutator: Jacobi identity on random triples")
{
    EllipticRing ring{EllipticInvariants(4, 1)};
    std::mt19937_64 rng(424243);
    for (int iter = 0; iter < 10; ++iter) {
        EOp a = random_elliptic_op(ring, rng, 2);
        EOp b = random_elliptic_op(ring, rng, 2);
        EOp c = random_elliptic_op(ring, rng, 2);
        EOp jac = add(add(commutator(a, commutator(b, c)), commutator(b, commutator(c, a))),
                      commutator(c, commutator(a, b)));
        CHECK(jac.is_zero());
    }
}

TEST_CASE("apply: examples")
{
    SOp d2 = SOp::d_power(kSRing, 2);
    S u3 = S::monomial(Rational(1), 3, 24);
    CHECK(qcis::apply(d2, u3) == S::monomial(Rational(6), 1, 22));

    std::mt19937_64 rng(31415);
    S psi = test::random_rational_series(rng);
    CHECK(qcis::apply(SOp::identity(kSRing), psi) == psi);
}

TEST_CASE("apply is compatible with compose")
{
    std::mt19937_64 rng(2718);
    for (int iter = 0; iter < 15; ++iter) {
        SOp a = random_series_op(rng, 2);
        SOp b = random_series_op(rng, 2);
        S psi = test::random_series<Rational>(
            rng, [](std::mt19937_64& r) { return test::random_rational(r); }, 0, 2, 8);
        CHECK(qcis::apply(compose(a, b), psi) == qcis::apply(a, qcis::apply(b, psi)));
    }
}

TEST_CASE("ring mismatch detected")
{
    EllipticRing r1{EllipticInvariants(4, 1)};
    EllipticRing r2{EllipticInvariants(4, Rational(2))};
    EOp a = EOp::d_power(r1, 1);
    EOp b = EOp::d_power(r2, 1);
    CHECK_THROWS_AS((void)compose(a, b), RingMismatch);
}

TEST_CASE("order bookkeeping: product orders add; zero order sentinel")
{
    EllipticRing ring{EllipticInvariants(4, 1)};
    std::mt19937_64 rng(606);
    for (int iter = 0; iter < 10; ++iter) {
        EOp a = random_elliptic_op(ring, rng, 3);
        EOp b = random_elliptic_op(ring, rng, 3);
        if (a.is_zero() || b.is_zero())
            continue;
        CHECK(compose(a, b).order() == a.order() + b.order());
    }
    CHECK(commutator(EOp::d_power(ring, 1), EOp::identity(ring)).order() == kZeroOrder);
}

TEST_CASE("embed_op and taylor_op_at agree at the origin-free base point")
{
    EllipticRing ring{EllipticInvariants(4, 1)};
    EOp lame = lame_operator(ring, 1);
    auto disc = embed_op(lame, 16);
    CHECK(disc.order() == 2);
    CHECK(disc.coeff(0) == scale(wp_series(ring.inv, 16), Rational(-2)));

    // Taylor expansion at the Gaussian point (p, p') = (0, i) on y^2 = 4x^3-4x-1.
    GaussianRational p0(0), pp0 = GaussianRational::i();
    auto at_base = taylor_op_at(lame, p0, pp0, 12);
    CHECK(at_base.coeff(0).coeff(0) == GaussianRational(0));       // -2*p(x0) = 0
    CHECK(at_base.coeff(0).coeff(1) == -(GaussianRational(2) * pp0)); // -2*p'(x0)
    CHECK(at_base.coeff(2) == LaurentSeries<GaussianRational>::constant(GaussianRational(1), 12));
}
