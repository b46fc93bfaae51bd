#pragma once

// Truncated Laurent series with exact coefficients over a scalar field K
// (Rational or GaussianRational). The formal-disc coefficient ring: a value
// represents sum_{k >= val} c_k u^k where every exponent >= trunc() is
// unknown (not zero). Truncation bookkeeping is pessimistic: operations
// never report coefficients they cannot certify.

#include "qcis/scalars.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qcis {

inline constexpr int kDefaultTrunc = 40;

struct ZeroSeries : std::domain_error {
    ZeroSeries() : std::domain_error("inversion of the zero series") {}
};
struct PoleTooDeep : std::domain_error {
    explicit PoleTooDeep(int val)
        : std::domain_error("log-derivative input has a pole of order " + std::to_string(-val) +
                            " (only simple poles allowed)")
    {
    }
};

template <class K>
class LaurentSeries {
public:
    LaurentSeries() : val_(kDefaultTrunc), trunc_(kDefaultTrunc) {}

    static LaurentSeries zero(int trunc = kDefaultTrunc)
    {
        LaurentSeries s;
        s.val_ = s.trunc_ = trunc;
        return s;
    }
    static LaurentSeries constant(K c, int trunc = kDefaultTrunc)
    {
        return monomial(std::move(c), 0, trunc);
    }
    static LaurentSeries monomial(K c, int exponent, int trunc = kDefaultTrunc)
    {
        LaurentSeries s;
        s.val_ = exponent;
        s.trunc_ = trunc;
        s.c_.push_back(std::move(c));
        s.normalize();
        return s;
    }
    /// Builds sum c[k] u^{val+k}, known through exponent trunc-1.
    static LaurentSeries from_coeffs(int val, std::vector<K> coeffs, int trunc)
    {
        LaurentSeries s;
        s.val_ = val;
        s.trunc_ = trunc;
        s.c_ = std::move(coeffs);
        if (val + static_cast<int>(s.c_.size()) > trunc)
            s.c_.resize(static_cast<std::size_t>(std::max(trunc - val, 0)));
        s.normalize();
        return s;
    }

    bool is_zero() const { return c_.empty(); }
    int valuation() const { return val_; }
    int trunc() const { return trunc_; }

    /// Coefficient of u^k. Refuses to answer beyond the truncation.
    const K& coeff(int k) const
    {
        if (k >= trunc_)
            throw std::logic_error("coefficient requested at or beyond truncation");
        return at_or_zero(k);
    }

    /// Coefficient of u^k with exponents below the valuation reported as
    /// exact zeros. No truncation guard; callers must stay below trunc().
    const K& at_or_zero(int k) const
    {
        static const K kZero{};
        int i = k - val_;
        if (i < 0 || i >= static_cast<int>(c_.size()))
            return kZero;
        return c_[static_cast<std::size_t>(i)];
    }

    const std::vector<K>& coeffs() const { return c_; }

private:
    void normalize()
    {
        std::size_t lead = 0;
        while (lead < c_.size() && scalar_is_zero(c_[lead]))
            ++lead;
        if (lead == c_.size()) {
            c_.clear();
            val_ = trunc_;
            return;
        }
        if (lead > 0) {
            c_.erase(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(lead));
            val_ += static_cast<int>(lead);
        }
        while (!c_.empty() && scalar_is_zero(c_.back()))
            c_.pop_back();
        assert(val_ <= trunc_);
    }

    int val_;
    int trunc_;
    std::vector<K> c_;
};

template <class K>
LaurentSeries<K> add(const LaurentSeries<K>& a, const LaurentSeries<K>& b)
{
    int trunc = std::min(a.trunc(), b.trunc());
    int lo = std::min({a.valuation(), b.valuation(), trunc});
    std::vector<K> c;
    c.reserve(static_cast<std::size_t>(trunc - lo));
    for (int k = lo; k < trunc; ++k)
        c.push_back(a.at_or_zero(k) + b.at_or_zero(k));
    return LaurentSeries<K>::from_coeffs(lo, std::move(c), trunc);
}

template <class K>
LaurentSeries<K> neg(const LaurentSeries<K>& a)
{
    std::vector<K> c(a.coeffs());
    for (K& x : c)
        x = -x;
    return LaurentSeries<K>::from_coeffs(a.valuation(), std::move(c), a.trunc());
}

template <class K>
LaurentSeries<K> sub(const LaurentSeries<K>& a, const LaurentSeries<K>& b)
{
    return add(a, neg(b));
}

template <class K>
LaurentSeries<K> mul(const LaurentSeries<K>& a, const LaurentSeries<K>& b)
{
    int trunc = std::min(a.trunc() + b.valuation(), b.trunc() + a.valuation());
    if (a.is_zero() || b.is_zero())
        return LaurentSeries<K>::zero(trunc);
    int val = a.valuation() + b.valuation();
    int n = trunc - val;
    if (n <= 0)
        return LaurentSeries<K>::zero(trunc);
    std::vector<K> c(static_cast<std::size_t>(n), K{});
    const auto& ac = a.coeffs();
    const auto& bc = b.coeffs();
    for (std::size_t i = 0; i < ac.size(); ++i) {
        if (scalar_is_zero(ac[i]))
            continue;
        for (std::size_t j = 0; j < bc.size(); ++j) {
            std::size_t k = i + j;
            if (static_cast<int>(k) >= n)
                break;
            c[k] += ac[i] * bc[j];
        }
    }
    return LaurentSeries<K>::from_coeffs(val, std::move(c), trunc);
}

template <class K>
LaurentSeries<K> scale(const LaurentSeries<K>& a, const K& s)
{
    if (scalar_is_zero(s))
        return LaurentSeries<K>::zero(a.trunc());
    std::vector<K> c(a.coeffs());
    for (K& x : c)
        x = x * s;
    return LaurentSeries<K>::from_coeffs(a.valuation(), std::move(c), a.trunc());
}

/// Multiplication by the monomial u^k (exact reindexing).
template <class K>
LaurentSeries<K> shift(const LaurentSeries<K>& a, int k)
{
    return LaurentSeries<K>::from_coeffs(a.valuation() + k, a.coeffs(), a.trunc() + k);
}

template <class K>
LaurentSeries<K> derive(const LaurentSeries<K>& a)
{
    int trunc = a.trunc() - 1;
    std::vector<K> c;
    int val = a.valuation() - 1;
    c.reserve(a.coeffs().size());
    for (int k = a.valuation(); k < a.trunc(); ++k) {
        if (k - 1 >= trunc)
            break;
        c.push_back(a.at_or_zero(k) * K(k));
    }
    return LaurentSeries<K>::from_coeffs(val, std::move(c), trunc);
}

/// Multiplicative inverse; result truncation is trunc - 2*valuation.
template <class K>
LaurentSeries<K> invert(const LaurentSeries<K>& a)
{
    if (a.is_zero())
        throw ZeroSeries();
    int len = a.trunc() - a.valuation();
    std::vector<K> u(a.coeffs());
    u.resize(static_cast<std::size_t>(len), K{});
    std::vector<K> b(static_cast<std::size_t>(len), K{});
    b[0] = K(1) / u[0];
    for (int n = 1; n < len; ++n) {
        K s{};
        for (int k = 1; k <= n; ++k)
            s += u[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(n - k)];
        b[static_cast<std::size_t>(n)] = -s * b[0];
    }
    return LaurentSeries<K>::from_coeffs(-a.valuation(), std::move(b),
                                         a.trunc() - 2 * a.valuation());
}

template <class K>
LaurentSeries<K> truncate_to(const LaurentSeries<K>& a, int trunc)
{
    if (trunc >= a.trunc())
        return a;
    return LaurentSeries<K>::from_coeffs(a.valuation(), a.coeffs(), trunc);
}

/// Equality of the known parts: agreement on every exponent below the
/// smaller truncation. At matched truncations this is exact equality.
template <class K>
bool operator==(const LaurentSeries<K>& a, const LaurentSeries<K>& b)
{
    int t = std::min(a.trunc(), b.trunc());
    int lo = std::min(a.valuation(), b.valuation());
    for (int k = lo; k < t; ++k)
        if (!(a.at_or_zero(k) == b.at_or_zero(k)))
            return false;
    return true;
}

template <class K>
LaurentSeries<K> operator-(const LaurentSeries<K>& a)
{
    return neg(a);
}
template <class K>
LaurentSeries<K> operator+(const LaurentSeries<K>& a, const LaurentSeries<K>& b)
{
    return add(a, b);
}
template <class K>
LaurentSeries<K> operator-(const LaurentSeries<K>& a, const LaurentSeries<K>& b)
{
    return sub(a, b);
}
template <class K>
LaurentSeries<K> operator*(const LaurentSeries<K>& a, const LaurentSeries<K>& b)
{
    return mul(a, b);
}

template <class K>
struct LogSolution {
    K exponent;            ///< residue rho: the local solution is u^rho * tail
    LaurentSeries<K> tail; ///< unit power series with tail(0) = 1
};

/// Solves psi' = f * psi locally: psi = u^rho * g with g(0) = 1.
/// f may have at worst a simple pole; rho is its residue at 0.
template <class K>
LogSolution<K> solve_log_derivative(const LaurentSeries<K>& f, int trunc)
{
    if (!f.is_zero() && f.valuation() < -1)
        throw PoleTooDeep(f.valuation());
    K rho = f.trunc() > -1 ? f.coeff(-1) : K{};
    // g'/g = h where h = f - rho/u has valuation >= 0.
    LaurentSeries<K> h = sub(f, LaurentSeries<K>::monomial(rho, -1, f.trunc()));
    int tg = std::min(trunc, f.trunc() + 1);
    std::vector<K> g;
    g.push_back(K(1));
    for (int k = 1; k < tg; ++k) {
        K s{};
        for (int j = 0; j < k; ++j) {
            int he = k - 1 - j;
            if (he < h.trunc())
                s += h.at_or_zero(he) * g[static_cast<std::size_t>(j)];
        }
        g.push_back(s / K(k));
    }
    return {rho, LaurentSeries<K>::from_coeffs(0, std::move(g), tg)};
}

template <class K>
LogSolution<K> solve_log_derivative(const LaurentSeries<K>& f)
{
    return solve_log_derivative(f, f.trunc() + 1);
}

// ---------------------------------------------------------------------------
// Display
// ---------------------------------------------------------------------------

inline std::string format_coeff(const Rational& c) { return to_string(c); }
inline std::string format_coeff(const GaussianRational& c)
{
    return c.is_real() ? to_string(c.re) : "(" + to_string(c) + ")";
}

/// Textual form, e.g. "u^-2 + 1/5*u^2 + O(u^3)".
template <class K>
std::string to_string(const LaurentSeries<K>& s)
{
    std::string out;
    for (int k = s.valuation(); k < s.trunc(); ++k) {
        K c = s.at_or_zero(k);
        if (scalar_is_zero(c))
            continue;
        std::string mono = k == 0 ? "" : (k == 1 ? "u" : "u^" + std::to_string(k));
        std::string cs = format_coeff(c);
        bool neg_lead = !cs.empty() && cs[0] == '-';
        if (!out.empty()) {
            out += neg_lead ? " - " : " + ";
            if (neg_lead)
                cs = cs.substr(1);
        }
        if (mono.empty())
            out += cs;
        else if (cs == "1")
            out += mono;
        else if (cs == "-1")
            out += "-" + mono;
        else
            out += cs + "*" + mono;
    }
    std::string tail = "O(u^" + std::to_string(s.trunc()) + ")";
    return out.empty() ? tail : out + " + " + tail;
}

} // namespace qcis
