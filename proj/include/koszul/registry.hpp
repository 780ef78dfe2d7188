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

// Named test functions, all vanishing at the origin:
//
//   z1        z_1
//   zero      0
//   bilinear  z_1 z_2 + z_2^2
//   expsum    exp(z_1 + ... + z_n) - 1
//   sinpoly   sin(z_1) + z_2 exp(z_1)
//
// With a basepoint a the function is translated to g(z - a).

#ifndef KOSZUL_REGISTRY_HPP
#define KOSZUL_REGISTRY_HPP

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "koszul/errors.hpp"
#include "koszul/gleason.hpp"

namespace koszul {

inline std::vector<std::string> registry_names() { return {"z1", "zero", "bilinear", "expsum", "sinpoly"}; }

inline HolomorphicInput registry_function(const std::string& name, int n, std::vector<cplx> alpha = {}) {
    if (n < 1 || n > kMaxPolyVars) throw InvalidSpec("dimension must be 1..3");
    if (alpha.empty()) alpha.assign(static_cast<std::size_t>(n), cplx{});
    if (static_cast<int>(alpha.size()) != n) throw DimensionMismatch("basepoint has wrong dimension");
    if ((name == "bilinear" || name == "sinpoly") && n < 2) throw InvalidSpec(name + " needs n >= 2");

    using Fn = cplx (*)(std::span<const cplx>);
    using Grad = void (*)(std::span<const cplx>, std::span<cplx>);
    Fn fn = nullptr;
    Grad grad = nullptr;
    if (name == "z1") {
        fn = [](std::span<const cplx> w) { return w[0]; };
        grad = [](std::span<const cplx>, std::span<cplx> out) {
            std::fill(out.begin(), out.end(), cplx{});
            out[0] = 1.0;
        };
    } else if (name == "zero") {
        fn = [](std::span<const cplx>) { return cplx{}; };
        grad = [](std::span<const cplx>, std::span<cplx> out) { std::fill(out.begin(), out.end(), cplx{}); };
    } else if (name == "bilinear") {
        fn = [](std::span<const cplx> w) { return w[0] * w[1] + w[1] * w[1]; };
        grad = [](std::span<const cplx> w, std::span<cplx> out) {
            std::fill(out.begin(), out.end(), cplx{});
            out[0] = w[1];
            out[1] = w[0] + 2.0 * w[1];
        };
    } else if (name == "expsum") {
        fn = [](std::span<const cplx> w) {
            cplx s{};
            for (const cplx& v : w) s += v;
            return std::exp(s) - 1.0;
        };
        grad = [](std::span<const cplx> w, std::span<cplx> out) {
            cplx s{};
            for (const cplx& v : w) s += v;
            std::fill(out.begin(), out.end(), std::exp(s));
        };
    } else if (name == "sinpoly") {
        fn = [](std::span<const cplx> w) { return std::sin(w[0]) + w[1] * std::exp(w[0]); };
        grad = [](std::span<const cplx> w, std::span<cplx> out) {
            std::fill(out.begin(), out.end(), cplx{});
            out[0] = std::cos(w[0]) + w[1] * std::exp(w[0]);
            out[1] = std::exp(w[0]);
        };
    } else {
        throw InvalidSpec("unknown function '" + name + "'");
    }

    HolomorphicInput in;
    in.name = name;
    in.alpha = alpha;
    in.value = [fn, alpha](std::span<const cplx> z) {
        std::array<cplx, kMaxPolyVars> w{};
        for (std::size_t k = 0; k < z.size(); ++k) w[k] = z[k] - alpha[k];
        return fn(std::span<const cplx>(w.data(), z.size()));
    };
    in.gradient = [grad, alpha](std::span<const cplx> z, std::span<cplx> out) {
        std::array<cplx, kMaxPolyVars> w{};
        for (std::size_t k = 0; k < z.size(); ++k) w[k] = z[k] - alpha[k];
        grad(std::span<const cplx>(w.data(), z.size()), out);
    };
    return in;
}

}  // namespace koszul

#endif
