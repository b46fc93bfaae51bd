#pragma once

// Test-only oracles, independent of the implementation paths they check.

#include "qcis/commutant.hpp"

#include <map>
#include <utility>
#include <vector>

namespace qcis::test {

// Independent assembly of the commutant linear system from the hand Leibniz
// expansion  [L, b D^j] = 2 b' D^{j+1} + b'' D^j - b sum_{k>=1} C(j,k) V^(k) D^{j-k}
// (L = D^2 + V), bypassing the operator-composition machinery.
struct OracleSystem {
    std::map<std::pair<int, EllipticElement::Monomial>, int> rows;
    MatrixX<Rational> a;
    VectorX<Rational> b;
};

inline DiffOp<EllipticRing> oracle_bracket(const DiffOp<EllipticRing>& lame,
                                           const EllipticElement& b, int j)
{
    const EllipticRing& ring = lame.ring();
    const EllipticElement v = lame.coeff(0);
    std::vector<EllipticElement> c(static_cast<std::size_t>(j) + 2);
    c[static_cast<std::size_t>(j) + 1] = Rational(2) * ring.derive(b);
    c[static_cast<std::size_t>(j)] = ring.derive(ring.derive(b));
    EllipticElement vk = v;
    Rational binom(1);
    for (int k = 1; k <= j; ++k) {
        vk = ring.derive(vk);
        binom = binom * Rational(j - k + 1) / Rational(k);
        c[static_cast<std::size_t>(j - k)] =
            c[static_cast<std::size_t>(j - k)] - ring.mul(b, binom * vk);
    }
    return DiffOp<EllipticRing>(ring, std::move(c));
}

inline OracleSystem oracle_system(const DiffOp<EllipticRing>& lame, int s, int wbound)
{
    OracleSystem sys;
    std::vector<DiffOp<EllipticRing>> cols;
    for (int j = s - 1; j >= 0; --j)
        for (int bexp = 0; bexp <= 1; ++bexp)
            for (int a = 0; 2 * a + 3 * bexp <= std::min(wbound, s) - j; ++a)
                cols.push_back(oracle_bracket(lame, EllipticElement::monomial(a, bexp), j));
    DiffOp<EllipticRing> fixed = oracle_bracket(lame, EllipticElement(1), s);
    auto note = [&](const DiffOp<EllipticRing>& op) {
        for (int k = 0; k <= op.order(); ++k)
            for (const auto& [mono, c] : op.coeff(k).terms())
                sys.rows.try_emplace({k, mono}, 0);
    };
    note(fixed);
    for (const auto& col : cols)
        note(col);
    int r = 0;
    for (auto& [key, id] : sys.rows)
        id = r++;
    sys.a = MatrixX<Rational>::Zero(r, static_cast<int>(cols.size()));
    sys.b = VectorX<Rational>::Zero(r);
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (int k = 0; k <= cols[c].order(); ++k)
            for (const auto& [mono, v] : cols[c].coeff(k).terms())
                sys.a(sys.rows.at({k, mono}), static_cast<int>(c)) = v;
    for (int k = 0; k <= fixed.order(); ++k)
        for (const auto& [mono, v] : fixed.coeff(k).terms())
            sys.b(sys.rows.at({k, mono})) = -v;
    return sys;
}

} // namespace qcis::test
