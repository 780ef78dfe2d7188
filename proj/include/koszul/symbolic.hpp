/*
   Copyright 2026 The Koszul Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

        http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Exact polynomials in z_1..z_n, zbar_1..zbar_n with complex-rational
// coefficients. Nothing in this header rounds, except evaluate(), which
// rounds once at the end.
//
// Text syntax: terms such as `(3/2+1/2i) z1^2 zb2` joined by `+` / `-`;
// `zbK` is zbar_K. print() output parses back to the identical polynomial.

#ifndef KOSZUL_SYMBOLIC_HPP
#define KOSZUL_SYMBOLIC_HPP

#include <gmpxx.h>

#include <array>
#include <cctype>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "koszul/errors.hpp"

namespace koszul {

inline constexpr int kMaxPolyVars = 3;
inline constexpr int kDefaultDegreeCap = 12;

class ComplexRational {
public:
    ComplexRational() = default;
    ComplexRational(long re) : re_(re) {}  // NOLINT: integer literals are scalars
    ComplexRational(mpq_class re, mpq_class im = 0) : re_(std::move(re)), im_(std::move(im)) {
        re_.canonicalize();
        im_.canonicalize();
    }

    static ComplexRational i() { return {0, 1}; }

    const mpq_class& real() const noexcept { return re_; }
    const mpq_class& imag() const noexcept { return im_; }
    bool is_zero() const { return sgn(re_) == 0 && sgn(im_) == 0; }

    ComplexRational conj() const { return {re_, -im_}; }

    std::complex<double> to_complex() const { return {re_.get_d(), im_.get_d()}; }

    friend ComplexRational operator+(const ComplexRational& a, const ComplexRational& b) {
        return {a.re_ + b.re_, a.im_ + b.im_};
    }
    friend ComplexRational operator-(const ComplexRational& a, const ComplexRational& b) {
        return {a.re_ - b.re_, a.im_ - b.im_};
    }
    friend ComplexRational operator*(const ComplexRational& a, const ComplexRational& b) {
        return {a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_};
    }
    friend ComplexRational operator-(const ComplexRational& a) { return {-a.re_, -a.im_}; }
    ComplexRational& operator+=(const ComplexRational& o) { return *this = *this + o; }
    ComplexRational& operator*=(const ComplexRational& o) { return *this = *this * o; }
    friend bool operator==(const ComplexRational& a, const ComplexRational& b) {
        return a.re_ == b.re_ && a.im_ == b.im_;
    }

private:
    mpq_class re_{0};
    mpq_class im_{0};
};

/// Exponents of z_1..z_n (slots 0..n-1) and zbar_1..zbar_n (slots kMaxPolyVars..).
struct Monomial {
    std::array<std::uint8_t, 2 * kMaxPolyVars> exps{};

    static Monomial holo(int axis, int power = 1) {
        Monomial m;
        m.exps[static_cast<std::size_t>(axis)] = static_cast<std::uint8_t>(power);
        return m;
    }
    static Monomial anti(int axis, int power = 1) {
        Monomial m;
        m.exps[static_cast<std::size_t>(kMaxPolyVars + axis)] = static_cast<std::uint8_t>(power);
        return m;
    }

    int z(int axis) const { return exps[static_cast<std::size_t>(axis)]; }
    int zb(int axis) const { return exps[static_cast<std::size_t>(kMaxPolyVars + axis)]; }

    int degree() const {
        int d = 0;
        for (auto e : exps) d += e;
        return d;
    }
    bool is_constant() const { return degree() == 0; }
    bool is_holomorphic() const {
        for (int k = 0; k < kMaxPolyVars; ++k)
            if (zb(k) != 0) return false;
        return true;
    }

    // Graded order: total degree first, then exponent vector.
    friend bool operator<(const Monomial& a, const Monomial& b) {
        const int da = a.degree(), db = b.degree();
        if (da != db) return da < db;
        return a.exps > b.exps;
    }
    friend bool operator==(const Monomial& a, const Monomial& b) = default;
};

class PolyExpr {
public:
    using Terms = std::map<Monomial, ComplexRational>;

    explicit PolyExpr(int n = 1, int degree_cap = kDefaultDegreeCap) : n_(n), cap_(degree_cap) {
        if (n < 1 || n > kMaxPolyVars) throw DimensionMismatch("PolyExpr supports 1..3 variables");
    }

    static PolyExpr constant(int n, const ComplexRational& c) {
        PolyExpr p(n);
        p.add_term(Monomial{}, c);
        return p;
    }
    /// z_{axis+1}
    static PolyExpr z(int n, int axis) { return monomial(n, Monomial::holo(axis), 1); }
    /// zbar_{axis+1}
    static PolyExpr zb(int n, int axis) { return monomial(n, Monomial::anti(axis), 1); }
    static PolyExpr monomial(int n, const Monomial& m, const ComplexRational& c) {
        PolyExpr p(n);
        p.add_term(m, c);
        return p;
    }

    int dim() const noexcept { return n_; }
    int degree_cap() const noexcept { return cap_; }
    void set_degree_cap(int cap) { cap_ = cap; }
    const Terms& terms() const noexcept { return terms_; }
    bool is_zero() const noexcept { return terms_.empty(); }

    int degree() const {
        int d = 0;
        for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
        return d;
    }
    bool is_holomorphic() const {
        for (const auto& [m, c] : terms_)
            if (!m.is_holomorphic()) return false;
        return true;
    }
    ComplexRational constant_term() const {
        auto it = terms_.find(Monomial{});
        return it == terms_.end() ? ComplexRational{} : it->second;
    }

    void add_term(const Monomial& m, const ComplexRational& c) {
        for (int k = n_; k < kMaxPolyVars; ++k)
            if (m.z(k) != 0 || m.zb(k) != 0) throw DimensionMismatch("monomial uses a variable beyond n");
        if (m.degree() > cap_)
            throw DegreeOverflow("term of degree " + std::to_string(m.degree()) + " exceeds cap " +
                                 std::to_string(cap_));
        if (c.is_zero()) return;
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    PolyExpr scaled(const ComplexRational& c) const {
        PolyExpr out(n_, cap_);
        if (c.is_zero()) return out;
        for (const auto& [m, v] : terms_) out.terms_.emplace(m, v * c);
        return out;
    }

    friend PolyExpr operator+(const PolyExpr& a, const PolyExpr& b) {
        check_dim(a, b);
        PolyExpr out = a;
        out.cap_ = std::min(a.cap_, b.cap_);
        for (const auto& [m, c] : b.terms_) out.add_term(m, c);
        return out;
    }
    friend PolyExpr operator-(const PolyExpr& a) { return a.scaled(-1); }
    friend PolyExpr operator-(const PolyExpr& a, const PolyExpr& b) { return a + (-b); }
    friend PolyExpr operator*(const PolyExpr& a, const PolyExpr& b) {
        check_dim(a, b);
        PolyExpr out(a.n_, std::min(a.cap_, b.cap_));
        for (const auto& [ma, ca] : a.terms_) {
            for (const auto& [mb, cb] : b.terms_) {
                Monomial m;
                for (std::size_t k = 0; k < m.exps.size(); ++k)
                    m.exps[k] = static_cast<std::uint8_t>(ma.exps[k] + mb.exps[k]);
                out.add_term(m, ca * cb);
            }
        }
        return out;
    }
    friend bool operator==(const PolyExpr& a, const PolyExpr& b) {
        return a.n_ == b.n_ && a.terms_ == b.terms_;
    }

private:
    static void check_dim(const PolyExpr& a, const PolyExpr& b) {
        if (a.n_ != b.n_) throw DimensionMismatch("polynomials in different numbers of variables");
    }

    int n_;
    int cap_;
    Terms terms_;
};

inline bool is_zero(const PolyExpr& p) { return p.is_zero(); }

/// Formal Wirtinger derivative d/dzbar_{axis+1}.
inline PolyExpr dbar(const PolyExpr& p, int axis) {
    if (axis < 0 || axis >= p.dim()) throw DimensionMismatch("dbar: axis out of range");
    PolyExpr out(p.dim(), p.degree_cap());
    for (const auto& [m, c] : p.terms()) {
        const int e = m.zb(axis);
        if (e == 0) continue;
        Monomial d = m;
        d.exps[static_cast<std::size_t>(kMaxPolyVars + axis)] = static_cast<std::uint8_t>(e - 1);
        out.add_term(d, c * ComplexRational(e));
    }
    return out;
}

/// Formal derivative d/dz_{axis+1}.
inline PolyExpr dz(const PolyExpr& p, int axis) {
    if (axis < 0 || axis >= p.dim()) throw DimensionMismatch("dz: axis out of range");
    PolyExpr out(p.dim(), p.degree_cap());
    for (const auto& [m, c] : p.terms()) {
        const int e = m.z(axis);
        if (e == 0) continue;
        Monomial d = m;
        d.exps[static_cast<std::size_t>(axis)] = static_cast<std::uint8_t>(e - 1);
        out.add_term(d, c * ComplexRational(e));
    }
    return out;
}

inline ComplexRational exact_rational(double x) {
    mpq_class q(x);  // exact: every finite double is a dyadic rational
    return ComplexRational(q);
}

/// Exact evaluation at a floating-point point, rounded once at the end.
inline std::complex<double> evaluate(const PolyExpr& p, std::span<const std::complex<double>> z) {
    if (static_cast<int>(z.size()) != p.dim()) throw DimensionMismatch("evaluate: point dimension");
    std::vector<ComplexRational> zz, zbz;
    for (const auto& v : z) {
        zz.emplace_back(mpq_class(v.real()), mpq_class(v.imag()));
        zbz.push_back(zz.back().conj());
    }
    ComplexRational acc;
    for (const auto& [m, c] : p.terms()) {
        ComplexRational t = c;
        for (int k = 0; k < p.dim(); ++k) {
            for (int e = 0; e < m.z(k); ++e) t *= zz[static_cast<std::size_t>(k)];
            for (int e = 0; e < m.zb(k); ++e) t *= zbz[static_cast<std::size_t>(k)];
        }
        acc += t;
    }
    return acc.to_complex();
}

/// Double-precision evaluator for sampling polynomials onto large grids.
class CompiledPoly {
public:
    explicit CompiledPoly(const PolyExpr& p) : n_(p.dim()) {
        for (const auto& [m, c] : p.terms()) terms_.push_back({m, c.to_complex()});
    }

    std::complex<double> operator()(std::span<const std::complex<double>> z) const {
        std::complex<double> acc{};
        for (const auto& t : terms_) {
            std::complex<double> v = t.coeff;
            for (int k = 0; k < n_; ++k) {
                const auto zk = z[static_cast<std::size_t>(k)];
                for (int e = 0; e < t.mono.z(k); ++e) v *= zk;
                for (int e = 0; e < t.mono.zb(k); ++e) v *= std::conj(zk);
            }
            acc += v;
        }
        return acc;
    }

private:
    struct Term {
        Monomial mono;
        std::complex<double> coeff;
    };
    int n_;
    std::vector<Term> terms_;
};

namespace detail {

inline std::string rational_string(const mpq_class& q) { return q.get_str(10); }

inline std::string monomial_string(const Monomial& m, int n) {
    std::string s;
    auto emit = [&](const std::string& name, int e) {
        if (e == 0) return;
        if (!s.empty()) s += ' ';
        s += name;
        if (e > 1) s += "^" + std::to_string(e);
    };
    for (int k = 0; k < n; ++k) emit("z" + std::to_string(k + 1), m.z(k));
    for (int k = 0; k < n; ++k) emit("zb" + std::to_string(k + 1), m.zb(k));
    return s;
}

}  // namespace detail

inline std::string print(const PolyExpr& p) {
    if (p.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [m, c] : p.terms()) {
        bool negative = false;
        std::string coeff;
        const bool unit_ok = !m.is_constant();
        if (sgn(c.imag()) == 0) {
            negative = sgn(c.real()) < 0;
            mpq_class mag = abs(c.real());
            if (!(unit_ok && mag == 1)) coeff = detail::rational_string(mag);
        } else if (sgn(c.real()) == 0) {
            negative = sgn(c.imag()) < 0;
            mpq_class mag = abs(c.imag());
            coeff = "(" + (mag == 1 ? std::string() : detail::rational_string(mag)) + "i)";
        } else {
            mpq_class mag = abs(c.imag());
            coeff = "(" + detail::rational_string(c.real()) + (sgn(c.imag()) < 0 ? "-" : "+") +
                    (mag == 1 ? std::string() : detail::rational_string(mag)) + "i)";
        }
        if (first)
            out += negative ? "-" : "";
        else
            out += negative ? " - " : " + ";
        first = false;
        const std::string mono = detail::monomial_string(m, p.dim());
        out += coeff;
        if (!coeff.empty() && !mono.empty()) out += ' ';
        out += mono;
    }
    return out;
}

namespace detail {

class PolyParser {
public:
    PolyParser(std::string_view text, int n, int cap) : text_(text), n_(n), cap_(cap) {}

    PolyExpr parse() {
        PolyExpr result(n_, cap_);
        skip_space();
        if (at_end()) fail("empty polynomial");
        int sign = 1;
        if (peek() == '+' || peek() == '-') {
            sign = peek() == '-' ? -1 : 1;
            advance();
        }
        parse_term(result, sign);
        for (;;) {
            skip_space();
            if (at_end()) break;
            const char c = peek();
            if (c != '+' && c != '-') fail(std::string("expected '+' or '-', found '") + c + "'");
            advance();
            parse_term(result, c == '-' ? -1 : 1);
        }
        return result;
    }

private:
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    void skip_space() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }
    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, col_); }

    // digits ['/' digits] | digits '.' digits
    mpq_class parse_number() {
        std::string num;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            num += peek();
            advance();
        }
        if (num.empty()) fail("expected a number");
        if (peek() == '/') {
            advance();
            std::string den;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                den += peek();
                advance();
            }
            if (den.empty()) fail("expected a denominator after '/'");
            mpz_class d(den);
            if (d == 0) fail("zero denominator");
            mpq_class q{mpz_class(num), d};
            q.canonicalize();
            return q;
        }
        if (peek() == '.') {
            advance();
            std::string frac;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                frac += peek();
                advance();
            }
            if (frac.empty()) fail("expected digits after '.'");
            mpz_class scale;
            mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
            mpq_class q{mpz_class(num + frac), scale};
            q.canonicalize();
            return q;
        }
        return mpq_class(mpz_class(num));
    }

    // number ['i'] | 'i'
    ComplexRational parse_scalar() {
        if (peek() == 'i') {
            advance();
            return ComplexRational::i();
        }
        mpq_class q = parse_number();
        if (peek() == 'i') {
            advance();
            return ComplexRational(0, q);
        }
        return ComplexRational(q);
    }

    ComplexRational parse_paren() {
        advance();  // '('
        skip_space();
        int sign = 1;
        if (peek() == '+' || peek() == '-') {
            sign = peek() == '-' ? -1 : 1;
            advance();
            skip_space();
        }
        ComplexRational v = parse_scalar();
        if (sign < 0) v = -v;
        skip_space();
        if (peek() == '+' || peek() == '-') {
            const int s2 = peek() == '-' ? -1 : 1;
            advance();
            skip_space();
            ComplexRational w = parse_scalar();
            v = v + (s2 < 0 ? -w : w);
            skip_space();
        }
        if (peek() != ')') fail("expected ')'");
        advance();
        return v;
    }

    bool starts_factor() const { return peek() == 'z'; }

    void parse_term(PolyExpr& out, int sign) {
        skip_space();
        ComplexRational coeff(sign);
        bool any = false;
        if (peek() == '(') {
            coeff = coeff * parse_paren();
            any = true;
        } else if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == 'i') {
            coeff = coeff * parse_scalar();
            any = true;
        }
        Monomial m;
        for (;;) {
            skip_space();
            if (peek() == '*') {
                advance();
                skip_space();
                if (!starts_factor()) fail("expected a variable after '*'");
            }
            if (!starts_factor()) break;
            advance();
            bool anti = false;
            if (peek() == 'b') {
                anti = true;
                advance();
            }
            std::string idx;
            while (std::isdigit(static_cast<unsigned char>(peek()))) {
                idx += peek();
                advance();
            }
            if (idx.empty()) fail("expected a variable index after 'z'");
            const int k = std::stoi(idx) - 1;
            if (k < 0 || k >= n_) fail("variable index " + idx + " out of range for n = " + std::to_string(n_));
            int power = 1;
            if (peek() == '^') {
                advance();
                std::string e;
                while (std::isdigit(static_cast<unsigned char>(peek()))) {
                    e += peek();
                    advance();
                }
                if (e.empty()) fail("expected an exponent after '^'");
                power = std::stoi(e);
            }
            auto& slot = m.exps[static_cast<std::size_t>(anti ? kMaxPolyVars + k : k)];
            if (slot + power > cap_) fail("exponent exceeds the degree cap");
            slot = static_cast<std::uint8_t>(slot + power);
            any = true;
        }
        if (!any) fail("expected a coefficient or a variable");
        if (m.degree() > cap_) fail("term exceeds the degree cap");
        out.add_term(m, coeff);
    }

    std::string_view text_;
    int n_;
    int cap_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace detail

/// Parses polynomial text in n variables; throws ParseError with line/column.
inline PolyExpr parse_poly(std::string_view text, int n, int degree_cap = kDefaultDegreeCap) {
    return detail::PolyParser(text, n, degree_cap).parse();
}

}  // namespace koszul

#endif
