#pragma once

// The exact Weierstrass layer: the Laurent expansion of p at the origin and
// the differential ring Q[p, p'] / (p'^2 - 4p^3 + g2*p + g3) for a fixed
// non-degenerate rational curve (g2, g3).

#include "qcis/scalars.hpp"
#include "qcis/series.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace qcis {

struct EllipticInvariants {
    Rational g2, g3;

    EllipticInvariants(Rational g2_, Rational g3_) : g2(std::move(g2_)), g3(std::move(g3_))
    {
        if (discriminant() == 0)
            throw std::domain_error("degenerate curve: g2^3 - 27*g3^2 = 0");
    }

    /// Skips the smoothness guard. Exists for probing degenerate seeds only.
    static EllipticInvariants unchecked(Rational g2_, Rational g3_)
    {
        EllipticInvariants inv;
        inv.g2 = std::move(g2_);
        inv.g3 = std::move(g3_);
        return inv;
    }

    Rational discriminant() const { return g2 * g2 * g2 - 27 * g3 * g3; }

    friend bool operator==(const EllipticInvariants& a, const EllipticInvariants& b) = default;

private:
    EllipticInvariants() = default;
};

/// Laurent expansion of the Weierstrass p-function:
/// u^-2 + sum_{k>=2} c_k u^{2k-2}, with c_2 = g2/20, c_3 = g3/28 and the
/// classical quadratic recursion above. Exact coefficients.
inline LaurentSeries<Rational> wp_series(const EllipticInvariants& inv, int trunc = kDefaultTrunc)
{
    if (trunc < -2)
        throw std::invalid_argument("wp_series: truncation below the pole");
    if (trunc == -2)
        return LaurentSeries<Rational>::zero(trunc);
    // c[k] multiplies u^{2k-2}; needs 2k-2 <= trunc-1.
    int kmax = (trunc + 1) / 2;
    std::vector<Rational> c(static_cast<std::size_t>(std::max(kmax + 1, 4)), Rational(0));
    if (kmax >= 2)
        c[2] = inv.g2 / 20;
    if (kmax >= 3)
        c[3] = inv.g3 / 28;
    for (int k = 4; k <= kmax; ++k) {
        Rational s(0);
        for (int j = 2; j <= k - 2; ++j)
            s += c[static_cast<std::size_t>(j)] * c[static_cast<std::size_t>(k - j)];
        c[static_cast<std::size_t>(k)] = s * Rational(3) / Rational((2 * k + 1) * (k - 3));
    }
    std::vector<Rational> coeffs(static_cast<std::size_t>(trunc + 2), Rational(0));
    coeffs[0] = 1; // u^-2
    for (int k = 2; k <= kmax; ++k)
        coeffs[static_cast<std::size_t>(2 * k)] = c[static_cast<std::size_t>(k)];
    return LaurentSeries<Rational>::from_coeffs(-2, std::move(coeffs), trunc);
}

inline LaurentSeries<Rational> wp_prime_series(const EllipticInvariants& inv, int trunc = kDefaultTrunc)
{
    return derive(wp_series(inv, trunc + 1));
}

// ---------------------------------------------------------------------------
// EllipticElement: canonical form sum coeff * p^a * p'^b with b in {0,1}
// ---------------------------------------------------------------------------

class EllipticElement {
public:
    using Monomial = std::pair<int, int>; // (a, b) for p^a p'^b

    EllipticElement() = default;
    EllipticElement(Rational c) // NOLINT(google-explicit-constructor)
    {
        if (c != 0)
            terms_[{0, 0}] = std::move(c);
    }
    EllipticElement(int c) : EllipticElement(Rational(c)) {} // NOLINT(google-explicit-constructor)

    static EllipticElement p() { return monomial(1, 0); }
    static EllipticElement p_prime() { return monomial(0, 1); }
    static EllipticElement monomial(int a, int b, Rational c = Rational(1))
    {
        EllipticElement e;
        if (c != 0)
            e.terms_[{a, b}] = std::move(c);
        return e;
    }

    bool is_zero() const { return terms_.empty(); }
    const std::map<Monomial, Rational>& terms() const { return terms_; }

    Rational coeff(int a, int b) const
    {
        auto it = terms_.find({a, b});
        return it == terms_.end() ? Rational(0) : it->second;
    }

    void add_term(int a, int b, const Rational& c)
    {
        if (c == 0)
            return;
        Rational& slot = terms_[{a, b}];
        slot += c;
        if (slot == 0)
            terms_.erase({a, b});
    }

    friend bool operator==(const EllipticElement& x, const EllipticElement& y) = default;

    friend EllipticElement operator-(const EllipticElement& x)
    {
        EllipticElement r;
        for (const auto& [mono, c] : x.terms_)
            r.terms_[mono] = -c;
        return r;
    }
    friend EllipticElement operator+(const EllipticElement& x, const EllipticElement& y)
    {
        EllipticElement r = x;
        for (const auto& [mono, c] : y.terms_)
            r.add_term(mono.first, mono.second, c);
        return r;
    }
    friend EllipticElement operator-(const EllipticElement& x, const EllipticElement& y)
    {
        return x + (-y);
    }
    friend EllipticElement operator*(const Rational& c, const EllipticElement& x)
    {
        EllipticElement r;
        if (c == 0)
            return r;
        for (const auto& [mono, v] : x.terms_)
            r.terms_[mono] = c * v;
        return r;
    }

    /// Substitutes exact values (p0, p0') of (p, p'); K is Rational or GaussianRational.
    template <class K>
    K eval(const K& p0, const K& pp0) const
    {
        K out{};
        for (const auto& [mono, c] : terms_) {
            K t = K(c);
            for (int i = 0; i < mono.first; ++i)
                t *= p0;
            if (mono.second)
                t *= pp0;
            out += t;
        }
        return out;
    }

    /// Weighted degree with p -> 2, p' -> 3 (0 for the zero element).
    int weight() const
    {
        int w = 0;
        for (const auto& [mono, c] : terms_)
            w = std::max(w, 2 * mono.first + 3 * mono.second);
        return w;
    }

private:
    std::map<Monomial, Rational> terms_;
};

inline std::string to_string(const EllipticElement& e)
{
    if (e.is_zero())
        return "0";
    std::string out;
    for (const auto& [mono, c] : e.terms()) {
        auto [a, b] = mono;
        std::string body;
        if (a > 0)
            body += a == 1 ? "p" : "p^" + std::to_string(a);
        if (b > 0)
            body += std::string(body.empty() ? "" : "*") + "p'";
        std::string cs = to_string(c);
        bool neg = cs[0] == '-';
        if (!out.empty()) {
            out += neg ? " - " : " + ";
            if (neg)
                cs = cs.substr(1);
        }
        if (body.empty())
            out += cs;
        else if (cs == "1")
            out += body;
        else if (cs == "-1")
            out += "-" + body;
        else
            out += cs + "*" + body;
    }
    return out;
}

// ---------------------------------------------------------------------------
// The ring context (fixes g2, g3 for products, derivation, embedding)
// ---------------------------------------------------------------------------

struct EllipticRing {
    using Elem = EllipticElement;

    EllipticInvariants inv;

    explicit EllipticRing(EllipticInvariants inv_) : inv(std::move(inv_)) {}

    Elem zero() const { return {}; }
    Elem one() const { return Elem(1); }
    Elem constant(Rational c) const { return Elem(std::move(c)); }
    bool is_zero(const Elem& e) const { return e.is_zero(); }
    bool eq(const Elem& x, const Elem& y) const { return x == y; }
    bool same(const EllipticRing& o) const { return inv == o.inv; }

    Elem add(const Elem& x, const Elem& y) const { return x + y; }
    Elem sub(const Elem& x, const Elem& y) const { return x - y; }
    Elem neg(const Elem& x) const { return -x; }

    Elem mul(const Elem& x, const Elem& y) const
    {
        Elem r;
        for (const auto& [mx, cx] : x.terms())
            for (const auto& [my, cy] : y.terms()) {
                int a = mx.first + my.first;
                int b = mx.second + my.second;
                Rational c = cx * cy;
                if (b < 2) {
                    r.add_term(a, b, c);
                    continue;
                }
                // p'^2 -> 4p^3 - g2*p - g3   (b == 2 is the only case)
                r.add_term(a + 3, 0, 4 * c);
                r.add_term(a + 1, 0, -inv.g2 * c);
                r.add_term(a, 0, -inv.g3 * c);
            }
        return r;
    }

    /// The derivation with d(p) = p', d(p') = 6p^2 - g2/2, extended by Leibniz.
    Elem derive(const Elem& x) const
    {
        Elem r;
        for (const auto& [mono, c] : x.terms()) {
            auto [a, b] = mono;
            if (a > 0) {
                // a * p^{a-1} * p'^{b+1}, reducing p'^2 when b = 1
                Rational ac = Rational(a) * c;
                if (b == 0) {
                    r.add_term(a - 1, 1, ac);
                } else {
                    r.add_term(a + 2, 0, 4 * ac);
                    r.add_term(a, 0, -inv.g2 * ac);
                    r.add_term(a - 1, 0, -inv.g3 * ac);
                }
            }
            if (b == 1) {
                // p^a * (6p^2 - g2/2)
                r.add_term(a + 2, 0, 6 * c);
                r.add_term(a, 0, -inv.g2 / 2 * c);
            }
        }
        return r;
    }

    /// Ring homomorphism into the formal disc: p -> wp_series, p' -> its derivative.
    LaurentSeries<Rational> embed(const Elem& e, int trunc = kDefaultTrunc) const
    {
        using S = LaurentSeries<Rational>;
        S wp = wp_series(inv, trunc + 1);
        S wpp = qcis::derive(wp);
        S out = S::zero(trunc);
        for (const auto& [mono, c] : e.terms()) {
            S t = S::constant(c, trunc);
            for (int i = 0; i < mono.first; ++i)
                t = t * wp;
            if (mono.second)
                t = t * wpp;
            out = out + t;
        }
        return truncate_to(out, trunc);
    }
};

/// Free-function flavor of the ring derivation.
inline EllipticElement ring_derive(const EllipticRing& ring, const EllipticElement& e)
{
    return ring.derive(e);
}

inline LaurentSeries<Rational> embed(const EllipticRing& ring, const EllipticElement& e,
                                     int trunc = kDefaultTrunc)
{
    return ring.embed(e, trunc);
}

} // namespace qcis
