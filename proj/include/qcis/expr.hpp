#pragma once

// Operator expression language shared by the CLI:
//   expr := term (('+'|'-') term)* ; term := factor ('*' factor)*
//   factor := '-' factor | atom ('^' nat)?
//   atom := rational | 'u' | 'wp' | "wp'" | 'D' | 'd' digit | '(' expr ')'
//         | 'm' | 'g2' | 'g3'
// Parameters m, g2, g3 are bound to exact rationals at parse time.
// Multiplication is non-commutative in the tree and preserved as written;
// lowering applies the Leibniz normalization exactly once.

#include "qcis/opalg.hpp"
#include "qcis/scalars.hpp"

#include <cctype>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qcis {

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset(offset)
    {
    }
    std::size_t offset;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind { Number, Symbol, Add, Sub, Mul, Neg, Pow };

    Kind kind;
    Rational number;    // Number (always nonnegative; signs are Neg nodes)
    std::string symbol; // Symbol: u wp wp' D d<i>
    ExprPtr lhs, rhs;
    int exponent = 0; // Pow

    static ExprPtr make_number(Rational v)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Number;
        e->number = std::move(v);
        return e;
    }
    static ExprPtr make_symbol(std::string s)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Symbol;
        e->symbol = std::move(s);
        return e;
    }
    static ExprPtr make_binary(Kind k, ExprPtr a, ExprPtr b)
    {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        e->lhs = std::move(a);
        e->rhs = std::move(b);
        return e;
    }
    static ExprPtr make_neg(ExprPtr a)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Neg;
        e->lhs = std::move(a);
        return e;
    }
    static ExprPtr make_pow(ExprPtr a, int n)
    {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Pow;
        e->lhs = std::move(a);
        e->exponent = n;
        return e;
    }
};

inline bool equal(const ExprPtr& a, const ExprPtr& b)
{
    if (!a || !b)
        return a == b;
    if (a->kind != b->kind)
        return false;
    switch (a->kind) {
    case Expr::Kind::Number: return a->number == b->number;
    case Expr::Kind::Symbol: return a->symbol == b->symbol;
    case Expr::Kind::Neg: return equal(a->lhs, b->lhs);
    case Expr::Kind::Pow: return a->exponent == b->exponent && equal(a->lhs, b->lhs);
    default: return equal(a->lhs, b->lhs) && equal(a->rhs, b->rhs);
    }
}

struct ParamBindings {
    std::optional<Rational> m, g2, g3;
};

namespace exprdetail {

class Parser {
public:
    Parser(std::string_view src, const ParamBindings& params) : src_(src), params_(params) {}

    ExprPtr run()
    {
        ExprPtr e = expr();
        skip_ws();
        if (pos_ != src_.size())
            throw ParseError("trailing input", pos_);
        return e;
    }

private:
    ExprPtr expr()
    {
        ExprPtr e = term();
        for (;;) {
            skip_ws();
            if (accept('+'))
                e = Expr::make_binary(Expr::Kind::Add, e, term());
            else if (accept('-'))
                e = Expr::make_binary(Expr::Kind::Sub, e, term());
            else
                return e;
        }
    }
    ExprPtr term()
    {
        ExprPtr e = factor();
        for (;;) {
            skip_ws();
            if (accept('*'))
                e = Expr::make_binary(Expr::Kind::Mul, e, factor());
            else
                return e;
        }
    }
    ExprPtr factor()
    {
        skip_ws();
        if (accept('-'))
            return Expr::make_neg(factor());
        ExprPtr base = atom();
        skip_ws();
        if (accept('^')) {
            skip_ws();
            std::size_t start = pos_;
            std::string digits = take_digits();
            if (digits.empty())
                throw ParseError("expected a nonnegative integer exponent", start);
            return Expr::make_pow(base, std::stoi(digits));
        }
        return base;
    }
    ExprPtr atom()
    {
        skip_ws();
        if (pos_ >= src_.size())
            throw ParseError("unexpected end of input", pos_);
        char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num = take_digits();
            if (pos_ < src_.size() && src_[pos_] == '/') {
                ++pos_;
                std::size_t start = pos_;
                std::string den = take_digits();
                if (den.empty())
                    throw ParseError("expected a denominator", start);
                return Expr::make_number(Rational(Integer(num), Integer(den)));
            }
            return Expr::make_number(Rational(Integer(num)));
        }
        if (accept('(')) {
            ExprPtr e = expr();
            skip_ws();
            if (!accept(')'))
                throw ParseError("expected ')'", pos_);
            return e;
        }
        if (match_word("wp'"))
            return Expr::make_symbol("wp'");
        if (match_word("wp"))
            return Expr::make_symbol("wp");
        if (match_word("u"))
            return Expr::make_symbol("u");
        if (match_word("D"))
            return Expr::make_symbol("D");
        if (match_word("g2"))
            return bound_param(params_.g2, "g2");
        if (match_word("g3"))
            return bound_param(params_.g3, "g3");
        if (match_word("m"))
            return bound_param(params_.m, "m");
        if (c == 'd' && pos_ + 1 < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
            pos_ += 2;
            return Expr::make_symbol(std::string("d") + src_[pos_ - 1]);
        }
        throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
    }

    ExprPtr bound_param(const std::optional<Rational>& value, const char* name)
    {
        if (!value)
            throw ParseError(std::string("unbound parameter '") + name + "'", pos_);
        if (*value < 0)
            return Expr::make_neg(Expr::make_number(-*value));
        return Expr::make_number(*value);
    }

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }
    bool accept(char c)
    {
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    bool match_word(std::string_view word)
    {
        if (src_.substr(pos_, word.size()) != word)
            return false;
        // reject identifier-like continuation ("wp" must not eat into "wp'";
        // longer words are tried first)
        std::size_t end = pos_ + word.size();
        if (end < src_.size()) {
            char next = src_[end];
            if (std::isalnum(static_cast<unsigned char>(next)) || next == '\'')
                return false;
        }
        pos_ = end;
        return true;
    }
    std::string take_digits()
    {
        std::string out;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
            out += src_[pos_++];
        return out;
    }

    std::string_view src_;
    const ParamBindings& params_;
    std::size_t pos_ = 0;
};

} // namespace exprdetail

inline ExprPtr parse_operator(std::string_view src, const ParamBindings& params = {})
{
    return exprdetail::Parser(src, params).run();
}

// ---------------------------------------------------------------------------
// Printing (precedence-aware; print-parse round-trips to an identical tree)
// ---------------------------------------------------------------------------

namespace exprdetail {

inline int precedence(const ExprPtr& e)
{
    switch (e->kind) {
    case Expr::Kind::Add:
    case Expr::Kind::Sub: return 0;
    case Expr::Kind::Mul: return 1;
    case Expr::Kind::Neg: return 2;
    case Expr::Kind::Pow: return 3;
    default: return 4;
    }
}

inline void print_rec(const ExprPtr& e, int min_prec, std::string& out)
{
    bool parens = precedence(e) < min_prec;
    if (parens)
        out += '(';
    switch (e->kind) {
    case Expr::Kind::Number: out += to_string(e->number); break;
    case Expr::Kind::Symbol: out += e->symbol; break;
    case Expr::Kind::Add:
        print_rec(e->lhs, 0, out);
        out += " + ";
        print_rec(e->rhs, 1, out);
        break;
    case Expr::Kind::Sub:
        print_rec(e->lhs, 0, out);
        out += " - ";
        print_rec(e->rhs, 1, out);
        break;
    case Expr::Kind::Mul:
        print_rec(e->lhs, 1, out);
        out += "*";
        print_rec(e->rhs, 2, out);
        break;
    case Expr::Kind::Neg:
        out += '-';
        print_rec(e->lhs, 2, out);
        break;
    case Expr::Kind::Pow:
        print_rec(e->lhs, 4, out);
        out += '^';
        out += std::to_string(e->exponent);
        break;
    }
    if (parens)
        out += ')';
}

} // namespace exprdetail

inline std::string print(const ExprPtr& e)
{
    std::string out;
    exprdetail::print_rec(e, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// Lowering to operator algebras
// ---------------------------------------------------------------------------

inline bool uses_symbol(const ExprPtr& e, std::string_view name)
{
    if (!e)
        return false;
    if (e->kind == Expr::Kind::Symbol && e->symbol == name)
        return true;
    return uses_symbol(e->lhs, name) || uses_symbol(e->rhs, name);
}

template <class Ring, class SymbolFn>
DiffOp<Ring> lower(const ExprPtr& e, const Ring& ring, SymbolFn&& symbol_op)
{
    using Op = DiffOp<Ring>;
    switch (e->kind) {
    case Expr::Kind::Number: return Op::mult(ring, ring.constant(e->number));
    case Expr::Kind::Symbol: return symbol_op(e->symbol);
    case Expr::Kind::Add:
        return add(lower(e->lhs, ring, symbol_op), lower(e->rhs, ring, symbol_op));
    case Expr::Kind::Sub:
        return sub(lower(e->lhs, ring, symbol_op), lower(e->rhs, ring, symbol_op));
    case Expr::Kind::Mul:
        return compose(lower(e->lhs, ring, symbol_op), lower(e->rhs, ring, symbol_op));
    case Expr::Kind::Neg: return neg(lower(e->lhs, ring, symbol_op));
    case Expr::Kind::Pow: {
        Op base = lower(e->lhs, ring, symbol_op);
        Op out = Op::identity(ring);
        for (int i = 0; i < e->exponent; ++i)
            out = compose(out, base);
        return out;
    }
    }
    throw std::logic_error("unreachable expression kind");
}

/// Lowers an expression over {wp, wp', D} to an elliptic-coefficient operator.
inline DiffOp<EllipticRing> lower_elliptic(const ExprPtr& e, const EllipticRing& ring)
{
    return lower(e, ring, [&](const std::string& sym) -> DiffOp<EllipticRing> {
        if (sym == "wp")
            return DiffOp<EllipticRing>::mult(ring, EllipticElement::p());
        if (sym == "wp'")
            return DiffOp<EllipticRing>::mult(ring, EllipticElement::p_prime());
        if (sym == "D")
            return DiffOp<EllipticRing>::d_power(ring, 1);
        throw std::invalid_argument("symbol '" + sym + "' is not elliptic-ring material");
    });
}

/// Lowers an expression over {u, D} to a formal-disc operator.
inline DiffOp<SeriesRing<Rational>> lower_formal(const ExprPtr& e, int trunc = kDefaultTrunc)
{
    SeriesRing<Rational> ring{trunc};
    return lower(e, ring, [&](const std::string& sym) -> DiffOp<SeriesRing<Rational>> {
        if (sym == "u")
            return DiffOp<SeriesRing<Rational>>::mult(
                ring, LaurentSeries<Rational>::monomial(Rational(1), 1, trunc));
        if (sym == "D")
            return DiffOp<SeriesRing<Rational>>::d_power(ring, 1);
        throw std::invalid_argument("symbol '" + sym + "' is not formal-disc material");
    });
}

/// Emits an elliptic operator in the shared grammar (re-parseable).
inline std::string grammar_string(const EllipticElement& e)
{
    if (e.is_zero())
        return "0";
    std::string out;
    for (const auto& [mono, c] : e.terms()) {
        auto [a, b] = mono;
        std::string body;
        if (a > 0)
            body += a == 1 ? "wp" : "wp^" + std::to_string(a);
        if (b > 0)
            body += std::string(body.empty() ? "" : "*") + "wp'";
        std::string cs = to_string(c);
        bool negative = cs[0] == '-';
        if (negative)
            cs = cs.substr(1);
        if (!out.empty())
            out += negative ? " - " : " + ";
        else if (negative)
            out += "-";
        if (body.empty())
            out += cs;
        else if (cs == "1")
            out += body;
        else
            out += cs + "*" + body;
    }
    return out;
}

inline std::string grammar_string(const DiffOp<EllipticRing>& op)
{
    if (op.is_zero())
        return "0";
    std::string out;
    for (int j = op.order(); j >= 0; --j) {
        if (op.ring().is_zero(op.coeff(j)))
            continue;
        std::string cs = grammar_string(op.coeff(j));
        std::string ds = j == 0 ? "" : (j == 1 ? "D" : "D^" + std::to_string(j));
        bool multi_term = cs.find(" + ") != std::string::npos ||
                          cs.find(" - ") != std::string::npos;
        std::string term;
        if (ds.empty())
            term = multi_term ? "(" + cs + ")" : cs;
        else if (cs == "1")
            term = ds;
        else if (cs == "-1")
            term = "-" + ds;
        else if (multi_term)
            term = "(" + cs + ")*" + ds;
        else
            term = cs + "*" + ds;
        if (out.empty()) {
            out = term;
        } else if (!term.empty() && term[0] == '-') {
            out += " - " + term.substr(1);
        } else {
            out += " + " + term;
        }
    }
    return out;
}

} // namespace qcis
