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

// Koszul-complex structure: forms in wedge^r V (x) C_(0,s), the wedge product,
// the contraction tau_F and dbar acting on the dzbar factor.
//
// The e-factor and the dzbar-factor carry independent gradings that commute
// with each other. Signs therefore factor as sign(e-merge) * sign(dzbar-merge),
// and the anti-derivation sign of tau_F uses the exterior degree r only.
//
// Axes are 0-based in code (axis 0 is z_1); printing is 1-based.

#ifndef KOSZUL_EXTERIOR_HPP
#define KOSZUL_EXTERIOR_HPP

#include <bit>
#include <concepts>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "koszul/errors.hpp"

namespace koszul {

inline constexpr int kMaxExteriorDim = 16;

/// Strictly increasing subset of {0, ..., n-1}, stored as a bitmask.
template <class Tag>
class MultiIndex {
public:
    constexpr MultiIndex() = default;

    static MultiIndex of(std::initializer_list<int> axes) {
        MultiIndex m;
        int last = -1;
        for (int a : axes) {
            if (a <= last || a >= kMaxExteriorDim)
                throw DimensionMismatch("multi-index must be strictly increasing and in range");
            m.bits_ |= (1u << a);
            last = a;
        }
        return m;
    }

    static constexpr MultiIndex from_bits(std::uint32_t bits) {
        MultiIndex m;
        m.bits_ = bits;
        return m;
    }

    constexpr std::uint32_t bits() const noexcept { return bits_; }
    constexpr int size() const noexcept { return std::popcount(bits_); }
    constexpr bool empty() const noexcept { return bits_ == 0; }
    constexpr bool contains(int axis) const noexcept { return (bits_ >> axis) & 1u; }
    constexpr MultiIndex with(int axis) const noexcept { return from_bits(bits_ | (1u << axis)); }
    constexpr MultiIndex without(int axis) const noexcept { return from_bits(bits_ & ~(1u << axis)); }
    /// Largest axis present; -1 when empty.
    constexpr int max_axis() const noexcept { return bits_ == 0 ? -1 : 31 - std::countl_zero(bits_); }
    /// Number of members strictly below axis.
    constexpr int count_below(int axis) const noexcept {
        return std::popcount(bits_ & ((1u << axis) - 1u));
    }

    std::vector<int> axes() const {
        std::vector<int> out;
        for (int a = 0; a < kMaxExteriorDim; ++a)
            if (contains(a)) out.push_back(a);
        return out;
    }

    friend constexpr bool operator==(MultiIndex a, MultiIndex b) noexcept { return a.bits_ == b.bits_; }
    friend constexpr auto operator<=>(MultiIndex a, MultiIndex b) noexcept { return a.bits_ <=> b.bits_; }

private:
    std::uint32_t bits_ = 0;
};

struct ExteriorTag {};
struct ConjTag {};
/// e_{j_1} ^ ... ^ e_{j_r}
using ExteriorIndex = MultiIndex<ExteriorTag>;
/// dzbar_{k_1} ^ ... ^ dzbar_{k_s}
using ConjIndex = MultiIndex<ConjTag>;

/// Sign of sorting the concatenation (a, b) into increasing order; 0 if a and
/// b overlap.
template <class Tag>
constexpr int merge_sign(MultiIndex<Tag> a, MultiIndex<Tag> b) noexcept {
    if (a.bits() & b.bits()) return 0;
    int inversions = 0;
    for (std::uint32_t rest = a.bits(); rest; rest &= rest - 1) {
        const int i = std::countr_zero(rest);
        inversions += b.count_below(i);
    }
    return (inversions & 1) ? -1 : 1;
}

inline std::string exterior_label(ExteriorIndex j) {
    if (j.empty()) return "1";
    std::string s;
    for (int a : j.axes()) {
        if (!s.empty()) s += "^";
        s += "e" + std::to_string(a + 1);
    }
    return s;
}

inline std::string conj_label(ConjIndex k) {
    if (k.empty()) return "1";
    std::string s;
    for (int a : k.axes()) {
        if (!s.empty()) s += "^";
        s += "dzb" + std::to_string(a + 1);
    }
    return s;
}

/// What the Koszul machinery needs from a coefficient algebra. `dbar(c, axis)`
/// is the Wirtinger derivative d/dzbar_axis; `is_zero` decides pruning.
template <class C>
concept Coefficient = std::copyable<C> && requires(const C& a, const C& b, int axis) {
    { a + b } -> std::convertible_to<C>;
    { a - b } -> std::convertible_to<C>;
    { a * b } -> std::convertible_to<C>;
    { -a } -> std::convertible_to<C>;
    { is_zero(a) } -> std::convertible_to<bool>;
    { dbar(a, axis) } -> std::convertible_to<C>;
};

/// Element of Gamma_(r,s): sparse map (J, K) -> coefficient with |J| = r,
/// |K| = s. Absent keys are zero; zero coefficients are never stored.
template <Coefficient C>
class KoszulForm {
public:
    using Key = std::pair<ExteriorIndex, ConjIndex>;
    using Map = std::map<Key, C>;

    KoszulForm(int n, int r, int s) : n_(n), r_(r), s_(s) {
        if (n < 1 || n > kMaxExteriorDim || r < 0 || s < 0)
            throw DimensionMismatch("invalid form degree");
    }

    int dim() const noexcept { return n_; }
    int exterior_degree() const noexcept { return r_; }
    int conj_degree() const noexcept { return s_; }
    const Map& components() const noexcept { return terms_; }
    bool is_zero_form() const noexcept { return terms_.empty(); }

    const C* find(ExteriorIndex j, ConjIndex k) const {
        auto it = terms_.find({j, k});
        return it == terms_.end() ? nullptr : &it->second;
    }

    /// Accumulates c into the (j, k) component.
    void add(ExteriorIndex j, ConjIndex k, const C& c) {
        check_key(j, k);
        auto it = terms_.find({j, k});
        if (it == terms_.end()) {
            if (!is_zero(c)) terms_.emplace(Key{j, k}, c);
            return;
        }
        it->second = it->second + c;
        if (is_zero(it->second)) terms_.erase(it);
    }

    void add_signed(ExteriorIndex j, ConjIndex k, int sign, const C& c) {
        if (sign > 0)
            add(j, k, c);
        else if (sign < 0)
            add(j, k, -c);
    }

    void set(ExteriorIndex j, ConjIndex k, const C& c) {
        check_key(j, k);
        if (is_zero(c))
            terms_.erase({j, k});
        else
            terms_.insert_or_assign(Key{j, k}, c);
    }

    KoszulForm& operator+=(const KoszulForm& o) {
        check_same_shape(o);
        for (const auto& [key, c] : o.terms_) add(key.first, key.second, c);
        return *this;
    }

    KoszulForm& operator-=(const KoszulForm& o) {
        check_same_shape(o);
        for (const auto& [key, c] : o.terms_) add(key.first, key.second, -c);
        return *this;
    }

    friend KoszulForm operator+(KoszulForm a, const KoszulForm& b) { return a += b; }
    friend KoszulForm operator-(KoszulForm a, const KoszulForm& b) { return a -= b; }

    friend KoszulForm operator-(const KoszulForm& a) {
        KoszulForm out(a.n_, a.r_, a.s_);
        for (const auto& [key, c] : a.terms_) out.terms_.emplace(key, -c);
        return out;
    }

    /// Multiplies every component by the coefficient c.
    KoszulForm times(const C& c) const {
        KoszulForm out(n_, r_, s_);
        for (const auto& [key, v] : terms_) out.add(key.first, key.second, v * c);
        return out;
    }

    /// Applies fn to every coefficient (e.g. to restrict or rescale fields).
    template <class Fn>
    KoszulForm map_coefficients(Fn&& fn) const {
        KoszulForm out(n_, r_, s_);
        for (const auto& [key, v] : terms_) out.add(key.first, key.second, fn(v));
        return out;
    }

private:
    void check_key(ExteriorIndex j, ConjIndex k) const {
        if (j.size() != r_ || k.size() != s_ || j.max_axis() >= n_ || k.max_axis() >= n_)
            throw DimensionMismatch("component key does not match form degree (" + std::to_string(r_) +
                                    "," + std::to_string(s_) + ") in dimension " + std::to_string(n_));
    }

    void check_same_shape(const KoszulForm& o) const {
        if (o.n_ != n_ || o.r_ != r_ || o.s_ != s_)
            throw DimensionMismatch("forms of different shape cannot be added");
    }

    int n_;
    int r_;
    int s_;
    Map terms_;
};

/// F = (f_1, ..., f_n).
template <Coefficient C>
struct HolomorphicMap {
    std::vector<C> components;

    int dim() const noexcept { return static_cast<int>(components.size()); }
    const C& operator[](int axis) const { return components.at(static_cast<std::size_t>(axis)); }
};

template <Coefficient C>
KoszulForm<C> wedge(const KoszulForm<C>& a, const KoszulForm<C>& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("wedge: forms live in different dimensions");
    KoszulForm<C> out(a.dim(), a.exterior_degree() + b.exterior_degree(),
                      a.conj_degree() + b.conj_degree());
    if (out.exterior_degree() > a.dim() || out.conj_degree() > a.dim()) return out;
    for (const auto& [ka, ca] : a.components()) {
        for (const auto& [kb, cb] : b.components()) {
            const int se = merge_sign(ka.first, kb.first);
            if (se == 0) continue;
            const int sc = merge_sign(ka.second, kb.second);
            if (sc == 0) continue;
            out.add_signed(ExteriorIndex::from_bits(ka.first.bits() | kb.first.bits()),
                           ConjIndex::from_bits(ka.second.bits() | kb.second.bits()), se * sc, ca * cb);
        }
    }
    return out;
}

/// tau_F(e_{j_1} ^ ... ^ e_{j_r} (x) w) = sum_k (-1)^(k-1) f_{j_k} (e-block without j_k) (x) w.
template <Coefficient C>
KoszulForm<C> tau(const HolomorphicMap<C>& f, const KoszulForm<C>& a) {
    if (f.dim() != a.dim()) throw DimensionMismatch("tau: map and form dimensions differ");
    if (a.exterior_degree() == 0) return KoszulForm<C>(a.dim(), 0, a.conj_degree());
    KoszulForm<C> out(a.dim(), a.exterior_degree() - 1, a.conj_degree());
    for (const auto& [key, w] : a.components()) {
        int position = 0;
        for (int j : key.first.axes()) {
            out.add_signed(key.first.without(j), key.second, (position & 1) ? -1 : 1, f[j] * w);
            ++position;
        }
    }
    return out;
}

/// dbar(e_J (x) w dzbar_K) = e_J (x) sum_j d(w, j) dzbar_j ^ dzbar_K, with d a
/// stand-in for dw/dzbar_j.
template <Coefficient C, class D>
KoszulForm<C> dbar_form_with(const KoszulForm<C>& a, D&& d) {
    KoszulForm<C> out(a.dim(), a.exterior_degree(), a.conj_degree() + 1);
    if (a.conj_degree() >= a.dim()) return out;
    for (const auto& [key, w] : a.components()) {
        for (int j = 0; j < a.dim(); ++j) {
            if (key.second.contains(j)) continue;
            const int sign = (key.second.count_below(j) & 1) ? -1 : 1;
            out.add_signed(key.first, key.second.with(j), sign, d(w, j));
        }
    }
    return out;
}

template <Coefficient C>
KoszulForm<C> dbar_form(const KoszulForm<C>& a) {
    return dbar_form_with(a, [](const C& w, int j) { return dbar(w, j); });
}

/// Human-readable rendering; `coeff` turns a coefficient into text.
template <Coefficient C, class Printer>
std::string to_string(const KoszulForm<C>& a, Printer&& coeff) {
    if (a.is_zero_form()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [key, w] : a.components()) {
        if (!first) os << "\n";
        first = false;
        os << "[" << exterior_label(key.first) << " (x) " << conj_label(key.second) << "] " << coeff(w);
    }
    return os.str();
}

}  // namespace koszul

#endif
