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

// Solution operators for dbar on polydiscs.
//
// One variable: the solid Cauchy transform
//
//   u(z) = -(1/pi) \iint_D f(w) / (w - z) dA(w),   du/dzbar = f on D,
//
// discretized with the disc quadrature weights of DiscGrid and the midpoint
// kernel 1/(z_i - z_j); the cell containing the singularity contributes zero
// (1/w integrates to zero over a centered square). The same weights and
// kernel table feed a direct O(N^2) sum and a zero-padded FFT convolution.
//
// Several variables: Dolbeault-Grothendieck induction. Peel off the largest
// dzbar index l present, beta = dzbar_l ^ gamma + delta, transform gamma in
// z_l slice by slice, subtract dbar of the result and repeat. At most n passes.

#ifndef KOSZUL_DBAR_HPP
#define KOSZUL_DBAR_HPP

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "koszul/errors.hpp"
#include "koszul/exterior.hpp"
#include "koszul/grid.hpp"
#include "koszul/parallel.hpp"

namespace koszul {

using GridForm = KoszulForm<GridField>;

namespace detail {

struct FftwFree {
    void operator()(fftw_complex* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

inline FftwBuffer fftw_buffer(std::size_t count) {
    auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * count));
    if (!p) throw std::bad_alloc();
    return FftwBuffer(p);
}

// FFTW's planner is not thread-safe; plan execution on distinct buffers is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// P x P complex DFT pair. FFTW_ESTIMATE planning is deterministic, so a plan
/// produces bitwise identical output for identical input on every run.
class Fft2d {
public:
    explicit Fft2d(int p) : p_(p) {
        auto a = fftw_buffer(size());
        auto b = fftw_buffer(size());
        std::lock_guard lock(fftw_planner_mutex());
        forward_ = fftw_plan_dft_2d(p, p, a.get(), b.get(), FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_2d(p, p, a.get(), b.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
        if (!forward_ || !backward_) throw Error("FFTW planning failed");
    }
    Fft2d(const Fft2d&) = delete;
    Fft2d& operator=(const Fft2d&) = delete;
    ~Fft2d() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
    }

    std::size_t size() const { return static_cast<std::size_t>(p_) * p_; }
    int extent() const { return p_; }
    void forward(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(forward_, in, out); }
    void backward(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(backward_, in, out); }

private:
    int p_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

}  // namespace detail

enum class CauchyMethod { direct, fft };

/// Discrete Cauchy transform on the disc of one variable. Planes are M x M
/// arrays indexed ix * M + iy; outputs are written at masked nodes only.
class CauchyTransform {
public:
    CauchyTransform(const GridGeometry& geo, int axis) : disc_(geo.disc(axis)), m_(geo.M()), p_(2 * geo.M()), fft_(p_) {
        const int w = 2 * m_ - 1;
        kernel_.assign(static_cast<std::size_t>(w) * w, cplx{});
        for (int a = -(m_ - 1); a <= m_ - 1; ++a)
            for (int b = -(m_ - 1); b <= m_ - 1; ++b)
                if (a != 0 || b != 0) kernel_[kidx(a, b)] = 1.0 / (disc_.h * cplx(a, b));
        auto spatial = detail::fftw_buffer(fft_.size());
        kernel_hat_ = detail::fftw_buffer(fft_.size());
        std::fill_n(&spatial[0][0], 2 * fft_.size(), 0.0);
        for (int a = -(m_ - 1); a <= m_ - 1; ++a) {
            for (int b = -(m_ - 1); b <= m_ - 1; ++b) {
                const cplx g = kernel_[kidx(a, b)];
                const std::size_t at = static_cast<std::size_t>((a + p_) % p_) * p_ + static_cast<std::size_t>((b + p_) % p_);
                spatial[at][0] = g.real();
                spatial[at][1] = g.imag();
            }
        }
        fft_.forward(spatial.get(), kernel_hat_.get());
    }

    int M() const noexcept { return m_; }
    const DiscGrid& disc() const noexcept { return disc_; }

    /// Kernel value 1/(h (a + i b)) for the node offset (a, b); zero at (0, 0).
    cplx kernel(int a, int b) const { return kernel_[kidx(a, b)]; }

    void apply_direct(std::span<const cplx> in, std::span<cplx> out) const {
        std::vector<std::pair<int, cplx>> sources;
        for (int j = 0; j < m_ * m_; ++j)
            if (disc_.mask[static_cast<std::size_t>(j)]) sources.emplace_back(j, disc_.weights[static_cast<std::size_t>(j)] * in[static_cast<std::size_t>(j)]);
        for (int ix = 0; ix < m_; ++ix) {
            for (int iy = 0; iy < m_; ++iy) {
                const std::size_t i = disc_.idx(ix, iy);
                if (!disc_.mask[i]) {
                    out[i] = {};
                    continue;
                }
                cplx acc{};
                for (const auto& [j, q] : sources) acc += q * kernel(ix - j / m_, iy - j % m_);
                out[i] = acc / std::numbers::pi;
            }
        }
        add_near(in, out);
    }

    struct Workspace {
        detail::FftwBuffer a, b;
    };

    Workspace workspace() const { return {detail::fftw_buffer(fft_.size()), detail::fftw_buffer(fft_.size())}; }

    void apply_fft(std::span<const cplx> in, std::span<cplx> out, Workspace& ws) const {
        fftw_complex* a = ws.a.get();
        fftw_complex* b = ws.b.get();
        std::fill_n(&a[0][0], 2 * fft_.size(), 0.0);
        for (int ix = 0; ix < m_; ++ix)
            for (int iy = 0; iy < m_; ++iy) {
                const std::size_t j = disc_.idx(ix, iy);
                if (!disc_.mask[j]) continue;
                const cplx q = disc_.weights[j] * in[j];
                const std::size_t at = static_cast<std::size_t>(ix) * p_ + iy;
                a[at][0] = q.real();
                a[at][1] = q.imag();
            }
        fft_.forward(a, b);
        for (std::size_t k = 0; k < fft_.size(); ++k) {
            const cplx v = cplx(b[k][0], b[k][1]) * cplx(kernel_hat_[k][0], kernel_hat_[k][1]);
            b[k][0] = v.real();
            b[k][1] = v.imag();
        }
        fft_.backward(b, a);
        const double scale = 1.0 / (static_cast<double>(fft_.size()) * std::numbers::pi);
        for (int ix = 0; ix < m_; ++ix)
            for (int iy = 0; iy < m_; ++iy) {
                const std::size_t i = disc_.idx(ix, iy);
                const std::size_t at = static_cast<std::size_t>(ix) * p_ + iy;
                out[i] = disc_.mask[i] ? cplx(a[at][0], a[at][1]) * scale : cplx{};
            }        add_near(in, out);
    }

private:
    void add_near(std::span<const cplx> in, std::span<cplx> out) const {
        for (const auto& t : disc_.near)
            out[static_cast<std::size_t>(t.target)] += t.coeff * in[static_cast<std::size_t>(t.source)] / std::numbers::pi;
    }

    std::size_t kidx(int a, int b) const {
        return static_cast<std::size_t>(a + m_ - 1) * (2 * m_ - 1) + static_cast<std::size_t>(b + m_ - 1);
    }

    DiscGrid disc_;
    int m_;
    int p_;
    detail::Fft2d fft_;
    std::vector<cplx> kernel_;
    detail::FftwBuffer kernel_hat_;
};

/// Applies the Cauchy transform in variable `axis` to every slice of f (all
/// other coordinates fixed). Slices whose other coordinates are unmasked are
/// left at zero.
inline GridField cauchy_transform(const GridField& f, int axis, CauchyMethod method = CauchyMethod::fft,
                                  const CauchyTransform* prepared = nullptr) {
    const auto& geo = f.grid();
    if (axis < 0 || axis >= geo.n()) throw DimensionMismatch("cauchy_transform: axis out of range");
    std::optional<CauchyTransform> local;
    if (!prepared) prepared = &local.emplace(geo, axis);
    const int M = geo.M();
    const std::size_t sy = geo.stride(axis);
    const std::size_t sx = sy * static_cast<std::size_t>(M);
    std::vector<std::size_t> bases;
    for (std::size_t i = 0; i < geo.size(); ++i) {
        if (geo.ix(i, axis) != 0 || geo.iy(i, axis) != 0) continue;
        bool in = true;
        for (int k = 0; k < geo.n() && in; ++k)
            if (k != axis) in = geo.disc(k).masked(geo.ix(i, k), geo.iy(i, k));
        if (in) bases.push_back(i);
    }
    GridField out(f.geometry());
    auto src = f.values();
    auto dst = out.values();
    parallel_chunks(bases.size(), [&](std::size_t begin, std::size_t end, int) {
        std::vector<cplx> plane(static_cast<std::size_t>(M) * M), result(plane.size());
        auto ws = prepared->workspace();
        for (std::size_t b = begin; b < end; ++b) {
            const std::size_t base = bases[b];
            for (int ix = 0; ix < M; ++ix)
                for (int iy = 0; iy < M; ++iy)
                    plane[static_cast<std::size_t>(ix) * M + iy] = src[base + static_cast<std::size_t>(ix) * sx + static_cast<std::size_t>(iy) * sy];
            if (method == CauchyMethod::fft)
                prepared->apply_fft(plane, result, ws);
            else
                prepared->apply_direct(plane, result);
            for (int ix = 0; ix < M; ++ix)
                for (int iy = 0; iy < M; ++iy)
                    dst[base + static_cast<std::size_t>(ix) * sx + static_cast<std::size_t>(iy) * sy] = result[static_cast<std::size_t>(ix) * M + iy];
        }
    });
    return out;
}

inline GridField cauchy_transform_direct(const GridField& f, int axis = 0) {
    return cauchy_transform(f, axis, CauchyMethod::direct);
}

inline GridField cauchy_transform_fft(const GridField& f, int axis = 0) {
    return cauchy_transform(f, axis, CauchyMethod::fft);
}

/// Componentwise interior max; the largest over all components of a form.
inline double form_interior_max(const GridForm& a, double rho) {
    double best = 0.0;
    for (const auto& [key, c] : a.components()) best = std::max(best, interior_max(c, rho));
    return best;
}

/// dbar u = beta for a (0,s)-form beta with s >= 1 on a polydisc grid.
struct DbarProblem {
    GridForm beta;
    double closedness_tolerance = 0.0;
};

struct DbarSolution {
    GridForm u;
    double residual = 0.0;        // interior max of fd_dbar(u) - beta
    double closedness = 0.0;      // interior max of fd_dbar(beta)
    double beta_max = 0.0;        // interior max of beta
    double u_max = 0.0;           // interior max of u
    int passes = 0;
};

struct DbarOptions {
    CauchyMethod method = CauchyMethod::fft;
    /// Interior used for every measurement; <= 0 means the grid's shrink factor.
    double rho = 0.0;
};

inline DbarSolution solve_dbar_polydisc(const DbarProblem& problem, const DbarOptions& options = {}) {
    const GridForm& beta = problem.beta;
    const int n = beta.dim();
    const int s = beta.conj_degree();
    if (beta.exterior_degree() != 0) throw DimensionMismatch("dbar solve expects a (0,s)-form (no e-factor)");
    if (s < 1 || s > n) throw DimensionMismatch("dbar solve expects 1 <= s <= n");

    DbarSolution sol{GridForm(n, 0, s - 1)};
    if (beta.is_zero_form()) return sol;

    const GeometryPtr geo = beta.components().begin()->second.geometry();
    const double rho = options.rho > 0 ? options.rho : geo->spec().shrink;

    sol.beta_max = form_interior_max(beta, rho);
    sol.closedness = s < n ? form_interior_max(dbar_form(beta), rho) : 0.0;
    if (sol.closedness > problem.closedness_tolerance)
        throw GateFailure("dbar solve", "closedness", sol.closedness, problem.closedness_tolerance);

    std::vector<std::unique_ptr<CauchyTransform>> transforms(static_cast<std::size_t>(n));
    GridForm current = beta;
    int previous_axis = n;
    while (!current.is_zero_form()) {
        int l = -1;
        for (const auto& [key, c] : current.components()) l = std::max(l, key.second.max_axis());
        if (l >= previous_axis)
            throw GateFailure("dbar solve", "max dzbar index must decrease", l + 1, previous_axis);
        previous_axis = l;
        auto& transform = transforms[static_cast<std::size_t>(l)];
        if (!transform) transform = std::make_unique<CauchyTransform>(*geo, l);

        // beta = dzbar_l ^ gamma + delta; dzbar_K = (-1)^(|K|-1) dzbar_l ^ dzbar_{K\l} since l = max K.
        GridForm eta(n, 0, s - 1);
        GridForm next(n, 0, s);
        for (const auto& [key, c] : current.components()) {
            const ConjIndex k = key.second;
            if (k.contains(l)) {
                const int sign = ((k.size() - 1) & 1) ? -1 : 1;
                GridField t = cauchy_transform(c, l, options.method, transform.get());
                eta.add_signed(ExteriorIndex{}, k.without(l), sign, t);
            } else {
                next.add(ExteriorIndex{}, k, c);
            }
        }
        // The dzbar_l components of beta - dbar(eta) vanish in the continuum;
        // their discrete remainder shows up in the final residual.
        for (const auto& [key, c] : eta.components()) {
            const ConjIndex k = key.second;
            for (int j = 0; j < l; ++j) {
                if (k.contains(j)) continue;
                const int sign = (k.count_below(j) & 1) ? -1 : 1;
                next.add_signed(ExteriorIndex{}, k.with(j), -sign, fd_dbar(c, j));
            }
        }
        sol.u += eta;
        current = std::move(next);
        ++sol.passes;
    }

    sol.residual = form_interior_max(dbar_form(sol.u) - beta, rho);
    sol.u_max = sol.u.is_zero_form() ? 0.0 : form_interior_max(sol.u, rho);
    return sol;
}

}  // namespace koszul

#endif
