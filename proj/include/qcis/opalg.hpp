#pragma once

// Ordinary differential operators sum_j a_j D^j over a pluggable exact
// coefficient ring (formal-disc Laurent series or the elliptic ring):
// composition by the Leibniz rule, commutators, the formal adjoint with
// D* = -D, and application to series.

#include "qcis/elliptic.hpp"
#include "qcis/scalars.hpp"
#include "qcis/series.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace qcis {

struct RingMismatch : std::invalid_argument {
    RingMismatch() : std::invalid_argument("operands live over different coefficient rings") {}
};

/// Sentinel order of the exact-zero operator.
inline constexpr int kZeroOrder = std::numeric_limits<int>::min();

/// Formal-disc coefficient ring; `trunc` only seeds freshly made constants.
template <class K>
struct SeriesRing {
    using Elem = LaurentSeries<K>;

    int trunc = kDefaultTrunc;

    Elem zero() const { return Elem::zero(trunc); }
    Elem one() const { return Elem::constant(K(1), trunc); }
    Elem constant(K c) const { return Elem::constant(std::move(c), trunc); }
    bool is_zero(const Elem& e) const { return e.is_zero(); }
    bool eq(const Elem& x, const Elem& y) const { return x == y; }
    bool same(const SeriesRing&) const { return true; }

    Elem add(const Elem& x, const Elem& y) const { return qcis::add(x, y); }
    Elem sub(const Elem& x, const Elem& y) const { return qcis::sub(x, y); }
    Elem neg(const Elem& x) const { return qcis::neg(x); }
    Elem mul(const Elem& x, const Elem& y) const { return qcis::mul(x, y); }
    Elem derive(const Elem& x) const { return qcis::derive(x); }
};

template <class Ring>
class DiffOp {
public:
    using Elem = typename Ring::Elem;

    explicit DiffOp(Ring ring) : ring_(std::move(ring)) {}
    DiffOp(Ring ring, std::vector<Elem> coeffs) : ring_(std::move(ring)), c_(std::move(coeffs))
    {
        normalize();
    }

    static DiffOp zero(Ring ring) { return DiffOp(std::move(ring)); }
    static DiffOp identity(Ring ring)
    {
        auto one = ring.one();
        return DiffOp(std::move(ring), {one});
    }
    /// The operator c * D^j.
    static DiffOp d_power(Ring ring, int j, Elem c)
    {
        std::vector<Elem> v(static_cast<std::size_t>(j) + 1, ring.zero());
        v.back() = std::move(c);
        return DiffOp(std::move(ring), std::move(v));
    }
    static DiffOp d_power(Ring ring, int j)
    {
        auto one = ring.one();
        return d_power(std::move(ring), j, std::move(one));
    }
    /// Multiplication operator (order 0).
    static DiffOp mult(Ring ring, Elem c) { return DiffOp(std::move(ring), {std::move(c)}); }

    const Ring& ring() const { return ring_; }
    bool is_zero() const { return c_.empty(); }
    int order() const { return c_.empty() ? kZeroOrder : static_cast<int>(c_.size()) - 1; }

    const Elem& coeff(int j) const
    {
        static const Elem kZero{};
        if (j < 0 || j >= static_cast<int>(c_.size()))
            return kZero;
        return c_[static_cast<std::size_t>(j)];
    }
    const std::vector<Elem>& coeffs() const { return c_; }

    const Elem& leading() const
    {
        if (c_.empty())
            throw std::logic_error("leading coefficient of the zero operator");
        return c_.back();
    }

    friend DiffOp add(const DiffOp& a, const DiffOp& b)
    {
        a.check_ring(b);
        std::vector<Elem> v(std::max(a.c_.size(), b.c_.size()), a.ring_.zero());
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (j < a.c_.size())
                v[j] = a.ring_.add(v[j], a.c_[j]);
            if (j < b.c_.size())
                v[j] = a.ring_.add(v[j], b.c_[j]);
        }
        return DiffOp(a.ring_, std::move(v));
    }
    friend DiffOp neg(const DiffOp& a)
    {
        std::vector<Elem> v;
        v.reserve(a.c_.size());
        for (const Elem& e : a.c_)
            v.push_back(a.ring_.neg(e));
        return DiffOp(a.ring_, std::move(v));
    }
    friend DiffOp sub(const DiffOp& a, const DiffOp& b) { return add(a, neg(b)); }

    friend DiffOp scale(const DiffOp& a, const Elem& c)
    {
        std::vector<Elem> v;
        v.reserve(a.c_.size());
        for (const Elem& e : a.c_)
            v.push_back(a.ring_.mul(c, e));
        return DiffOp(a.ring_, std::move(v));
    }

    /// Operator product A o B via the Leibniz rule D o a = a D + a'.
    friend DiffOp compose(const DiffOp& a, const DiffOp& b)
    {
        a.check_ring(b);
        DiffOp result = zero(a.ring_);
        DiffOp cur = b; // D^i o B
        for (int i = 0;; ++i) {
            if (i <= a.order() && !a.ring_.is_zero(a.coeff(i)))
                result = add(result, scale(cur, a.coeff(i)));
            if (i >= a.order())
                break;
            // cur <- D o cur
            std::vector<Elem> v(cur.c_.size() + 1, a.ring_.zero());
            for (std::size_t j = 0; j < cur.c_.size(); ++j) {
                v[j + 1] = a.ring_.add(v[j + 1], cur.c_[j]);
                v[j] = a.ring_.add(v[j], a.ring_.derive(cur.c_[j]));
            }
            cur = DiffOp(a.ring_, std::move(v));
        }
        return result;
    }

    /// AB - BA; exact zero is representable (empty coefficient list).
    friend DiffOp commutator(const DiffOp& a, const DiffOp& b)
    {
        return sub(compose(a, b), compose(b, a));
    }

    /// Formal adjoint: D* = -D, f* = f; an involutive anti-homomorphism.
    friend DiffOp adjoint(const DiffOp& a)
    {
        DiffOp result = zero(a.ring_);
        for (int j = 0; j <= a.order(); ++j) {
            if (a.ring_.is_zero(a.coeff(j)))
                continue;
            DiffOp term = compose(d_power(a.ring_, j), mult(a.ring_, a.coeff(j)));
            if (j % 2)
                term = neg(term);
            result = add(result, term);
        }
        return result;
    }

    friend bool operator==(const DiffOp& a, const DiffOp& b)
    {
        if (!a.ring_.same(b.ring_) || a.c_.size() != b.c_.size())
            return false;
        for (std::size_t j = 0; j < a.c_.size(); ++j)
            if (!a.ring_.eq(a.c_[j], b.c_[j]))
                return false;
        return true;
    }

private:
    void check_ring(const DiffOp& other) const
    {
        if (!ring_.same(other.ring_))
            throw RingMismatch();
    }

    void normalize()
    {
        while (!c_.empty() && ring_.is_zero(c_.back()))
            c_.pop_back();
    }

    Ring ring_;
    std::vector<Elem> c_;
};

/// Applies sum a_j D^j to a series, with pessimistic truncation.
template <class K>
LaurentSeries<K> apply(const DiffOp<SeriesRing<K>>& op, const LaurentSeries<K>& psi)
{
    LaurentSeries<K> out = LaurentSeries<K>::zero(psi.trunc());
    LaurentSeries<K> d = psi;
    for (int j = 0;; ++j) {
        if (j <= op.order() && !op.coeff(j).is_zero())
            out = add(out, mul(op.coeff(j), d));
        if (j >= op.order())
            break;
        d = derive(d);
    }
    return out;
}

/// Embeds an elliptic-coefficient operator into the formal disc at the origin.
inline DiffOp<SeriesRing<Rational>> embed_op(const DiffOp<EllipticRing>& op, int trunc = kDefaultTrunc)
{
    SeriesRing<Rational> ring{trunc};
    std::vector<LaurentSeries<Rational>> coeffs;
    coeffs.reserve(static_cast<std::size_t>(op.order() + 1));
    for (int j = 0; j <= op.order(); ++j)
        coeffs.push_back(op.ring().embed(op.coeff(j), trunc));
    return DiffOp<SeriesRing<Rational>>(ring, std::move(coeffs));
}

/// Taylor-expands an elliptic element at a base point (p0, p0') on the curve:
/// e(x0 + u) = sum_k d^k(e)(x0) u^k / k!, as an exact series over K.
template <class K>
LaurentSeries<K> taylor_at(const EllipticRing& ring, const EllipticElement& e, const K& p0,
                           const K& pp0, int trunc)
{
    std::vector<K> coeffs;
    coeffs.reserve(static_cast<std::size_t>(std::max(trunc, 0)));
    EllipticElement cur = e;
    K factorial(1);
    for (int k = 0; k < trunc; ++k) {
        if (k > 0) {
            cur = ring.derive(cur);
            factorial *= K(k);
        }
        coeffs.push_back(cur.template eval<K>(p0, pp0) / factorial);
    }
    return LaurentSeries<K>::from_coeffs(0, std::move(coeffs), trunc);
}

/// Taylor-expands every coefficient of an elliptic-coefficient operator at a
/// base point, producing an operator over the formal disc there.
template <class K>
DiffOp<SeriesRing<K>> taylor_op_at(const DiffOp<EllipticRing>& op, const K& p0, const K& pp0,
                                   int trunc)
{
    SeriesRing<K> ring{trunc};
    std::vector<LaurentSeries<K>> coeffs;
    coeffs.reserve(static_cast<std::size_t>(op.order() + 1));
    for (int j = 0; j <= op.order(); ++j)
        coeffs.push_back(taylor_at(op.ring(), op.coeff(j), p0, pp0, trunc));
    return DiffOp<SeriesRing<K>>(ring, std::move(coeffs));
}

template <class Ring>
std::string to_string(const DiffOp<Ring>& op)
{
    if (op.is_zero())
        return "0";
    std::string out;
    for (int j = op.order(); j >= 0; --j) {
        if (op.ring().is_zero(op.coeff(j)))
            continue;
        std::string cs = to_string(op.coeff(j));
        std::string ds = j == 0 ? "" : (j == 1 ? "D" : "D^" + std::to_string(j));
        if (!out.empty())
            out += " + ";
        if (ds.empty())
            out += "(" + cs + ")";
        else if (cs == "1")
            out += ds;
        else
            out += "(" + cs + ")*" + ds;
    }
    return out;
}

} // namespace qcis
