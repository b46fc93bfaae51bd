#pragma once

// Exact scalar fields used throughout the toolkit: arbitrary-precision
// rationals and the Gaussian rationals Q(i) for exact complex constants.
// Rational wraps boost's cpp_rational behind a plain value type so that
// generic libraries (Eigen) see an ordinary scalar.

#include <boost/multiprecision/cpp_int.hpp>
#include <complex>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace qcis {

using Integer = boost::multiprecision::cpp_int;

class Rational {
public:
    Rational() = default;
    Rational(int n) : v_(n) {}       // NOLINT(google-explicit-constructor)
    Rational(long long n) : v_(n) {} // NOLINT(google-explicit-constructor)
    Rational(int n, int d) : v_(n, d) {}
    Rational(const Integer& n, const Integer& d) : v_(n, d) {}
    explicit Rational(Integer n) : v_(std::move(n)) {}
    explicit Rational(boost::multiprecision::cpp_rational v) : v_(std::move(v)) {}

    const boost::multiprecision::cpp_rational& raw() const { return v_; }
    bool is_zero() const { return v_.is_zero(); }

    friend Integer numerator(const Rational& x) { return numerator(x.v_); }
    friend Integer denominator(const Rational& x) { return denominator(x.v_); }

    friend Rational operator-(const Rational& a) { return Rational(-a.v_); }
    friend Rational operator+(const Rational& a, const Rational& b) { return Rational(a.v_ + b.v_); }
    friend Rational operator-(const Rational& a, const Rational& b) { return Rational(a.v_ - b.v_); }
    friend Rational operator*(const Rational& a, const Rational& b) { return Rational(a.v_ * b.v_); }
    friend Rational operator/(const Rational& a, const Rational& b)
    {
        if (b.is_zero())
            throw std::domain_error("rational division by zero");
        return Rational(a.v_ / b.v_);
    }
    Rational& operator+=(const Rational& b) { v_ += b.v_; return *this; }
    Rational& operator-=(const Rational& b) { v_ -= b.v_; return *this; }
    Rational& operator*=(const Rational& b) { v_ *= b.v_; return *this; }
    Rational& operator/=(const Rational& b) { *this = *this / b; return *this; }

    friend bool operator==(const Rational& a, const Rational& b) { return a.v_ == b.v_; }
    friend auto operator<=>(const Rational& a, const Rational& b)
    {
        return a.v_ < b.v_ ? std::strong_ordering::less
               : a.v_ == b.v_ ? std::strong_ordering::equal
                              : std::strong_ordering::greater;
    }

    friend Rational abs(const Rational& a) { return a.v_ < 0 ? -a : a; }

private:
    boost::multiprecision::cpp_rational v_;
};

inline double to_double(const Rational& x) { return x.raw().template convert_to<double>(); }

inline std::string to_string(const Rational& x)
{
    if (denominator(x) == 1)
        return numerator(x).str();
    return numerator(x).str() + "/" + denominator(x).str();
}

inline std::ostream& operator<<(std::ostream& os, const Rational& x) { return os << to_string(x); }

/// Parses "p/q" or "p" (optionally signed). Throws std::invalid_argument on junk.
inline Rational parse_rational(const std::string& s)
{
    if (s.empty())
        throw std::invalid_argument("empty rational literal");
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos)
            return Rational(Integer(s));
        Integer num(s.substr(0, slash));
        Integer den(s.substr(slash + 1));
        if (den == 0)
            throw std::invalid_argument("zero denominator");
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        throw std::invalid_argument("bad rational literal: " + s);
    }
}

/// If x is a perfect square in Q, returns its nonnegative square root.
inline std::optional<Rational> exact_sqrt(const Rational& x)
{
    if (x < 0)
        return std::nullopt;
    Integer n = numerator(x), d = denominator(x);
    Integer rn = boost::multiprecision::sqrt(n), rd = boost::multiprecision::sqrt(d);
    if (rn * rn != n || rd * rd != d)
        return std::nullopt;
    return Rational(rn, rd);
}

// ---------------------------------------------------------------------------
// Gaussian rationals a + b·i
// ---------------------------------------------------------------------------

struct GaussianRational {
    Rational re, im;

    GaussianRational() = default;
    GaussianRational(int v) : re(v) {}                                       // NOLINT(google-explicit-constructor)
    GaussianRational(Rational r) : re(std::move(r)) {}                       // NOLINT(google-explicit-constructor)
    GaussianRational(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

    static GaussianRational i() { return {Rational(0), Rational(1)}; }

    bool is_zero() const { return re.is_zero() && im.is_zero(); }
    bool is_real() const { return im.is_zero(); }
    GaussianRational conj() const { return {re, -im}; }
    Rational norm2() const { return re * re + im * im; }

    friend bool operator==(const GaussianRational& a, const GaussianRational& b) = default;

    friend GaussianRational operator-(const GaussianRational& a) { return {-a.re, -a.im}; }
    friend GaussianRational operator+(const GaussianRational& a, const GaussianRational& b)
    {
        return {a.re + b.re, a.im + b.im};
    }
    friend GaussianRational operator-(const GaussianRational& a, const GaussianRational& b)
    {
        return {a.re - b.re, a.im - b.im};
    }
    friend GaussianRational operator*(const GaussianRational& a, const GaussianRational& b)
    {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend GaussianRational operator/(const GaussianRational& a, const GaussianRational& b)
    {
        Rational n = b.norm2();
        if (n.is_zero())
            throw std::domain_error("division by zero GaussianRational");
        GaussianRational p = a * b.conj();
        return {p.re / n, p.im / n};
    }
    GaussianRational& operator+=(const GaussianRational& b) { return *this = *this + b; }
    GaussianRational& operator-=(const GaussianRational& b) { return *this = *this - b; }
    GaussianRational& operator*=(const GaussianRational& b) { return *this = *this * b; }
    GaussianRational& operator/=(const GaussianRational& b) { return *this = *this / b; }
};

// ADL hooks (Eigen's numext falls back to these for custom complex scalars).
inline Rational real(const GaussianRational& z) { return z.re; }
inline Rational imag(const GaussianRational& z) { return z.im; }
inline GaussianRational conj(const GaussianRational& z) { return z.conj(); }
inline Rational abs2(const GaussianRational& z) { return z.norm2(); }

inline std::string to_string(const GaussianRational& z)
{
    if (z.im.is_zero())
        return to_string(z.re);
    std::string im = to_string(z.im) + "*i";
    if (z.re.is_zero())
        return im;
    return z.im < 0 ? to_string(z.re) + " - " + to_string(-z.im) + "*i"
                    : to_string(z.re) + " + " + im;
}

inline std::ostream& operator<<(std::ostream& os, const GaussianRational& z)
{
    return os << to_string(z);
}

inline std::complex<double> to_complex(const GaussianRational& z)
{
    return {to_double(z.re), to_double(z.im)};
}

// Uniform scalar queries so templates can treat Rational and GaussianRational alike.
inline bool scalar_is_zero(const Rational& x) { return x.is_zero(); }
inline bool scalar_is_zero(const GaussianRational& x) { return x.is_zero(); }

} // namespace qcis
