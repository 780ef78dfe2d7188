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

// Gleason decomposition g = sum_j (z_j - a_j) g_j on a polydisc grid.
//
//   chi      smooth cutoff, 1 near a, 0 past r_out
//   lambda_j local split g = sum (z_j - a_j) lambda_j (ray integral of dg/dz_j)
//   L_j      (1 - chi) g conj(z_j - a_j) / |z - a|^2 + chi lambda_j
//   W        sum_j e_j (x) dbar L_j, a (1,1)-form with tau_F W = dbar g = 0
//   Y        (2,0)-form with tau_F dbar Y = W, from the Koszul descent
//   g_j      components of L - tau_F Y
//
// The identity g = tau_F(L - tau_F Y) = tau_F L holds node by node, so R_id
// is round-off; the numerical work all goes into making the g_j holomorphic.
//
// Descent on a (r,s)-form W with tau W = 0 and dbar W = 0: Y1 = X ^ W. At top
// exterior degree dbar Y1 vanishes in the continuum (gated here). Otherwise
// descend on dbar Y1 to get Y2 and set Y3 = Y1 - tau Y2. Solve dbar Y = Y3
// one e-component at a time.

#ifndef KOSZUL_GLEASON_HPP
#define KOSZUL_GLEASON_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "koszul/dbar.hpp"
#include "koszul/errors.hpp"
#include "koszul/exterior.hpp"
#include "koszul/grid.hpp"
#include "koszul/parallel.hpp"
#include "koszul/symbolic.hpp"

namespace koszul {

/// Fills out[j] with dg/dz_j at z.
using Gradient = std::function<void(std::span<const cplx>, std::span<cplx>)>;

/// g holomorphic on a neighbourhood of the closed polydisc with g(alpha) = 0.
struct HolomorphicInput {
    std::string name;
    Evaluator value;
    Gradient gradient;              // optional
    std::optional<PolyExpr> poly;   // set for polynomial inputs
    std::vector<cplx> alpha;
    double vanishing_tolerance = 1e-10;

    static HolomorphicInput from_poly(std::string name, const PolyExpr& p, std::vector<cplx> alpha) {
        if (!p.is_holomorphic()) throw InvalidSpec("input polynomial must not contain zbar");
        HolomorphicInput in;
        in.name = std::move(name);
        auto compiled = std::make_shared<CompiledPoly>(p);
        in.value = [compiled](std::span<const cplx> z) { return (*compiled)(z); };
        std::vector<CompiledPoly> parts;
        for (int j = 0; j < p.dim(); ++j) parts.emplace_back(dz(p, j));
        auto grads = std::make_shared<std::vector<CompiledPoly>>(std::move(parts));
        in.gradient = [grads](std::span<const cplx> z, std::span<cplx> out) {
            for (std::size_t j = 0; j < grads->size(); ++j) out[j] = (*grads)[j](z);
        };
        in.poly = p;
        in.alpha = std::move(alpha);
        return in;
    }

    int dim() const noexcept { return static_cast<int>(alpha.size()); }

    cplx operator()(std::span<const cplx> z) const { return value(z); }

    /// Analytic gradient when known, else a 32-point trapezoidal contour
    /// integral of radius `reach` in each variable.
    void gradient_at(std::span<const cplx> z, std::span<cplx> out, double reach) const {
        if (gradient) {
            gradient(z, out);
            return;
        }
        constexpr int kPoints = 32;
        std::vector<cplx> w(z.begin(), z.end());
        for (std::size_t j = 0; j < z.size(); ++j) {
            cplx acc{};
            for (int k = 0; k < kPoints; ++k) {
                const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * k / kPoints);
                w[j] = z[j] + reach * e;
                acc += value(w) / e;
            }
            w[j] = z[j];
            out[j] = acc / (reach * kPoints);
        }
    }
};

struct CutoffSpec {
    std::vector<cplx> center;
    double r_in = 0.2;
    double r_out = 0.4;

    void validate(const PolydiscSpec& spec) const {
        if (static_cast<int>(center.size()) != spec.n) throw DimensionMismatch("cutoff center has wrong dimension");
        if (!(r_in > 0 && r_in < r_out)) throw InvalidSpec("cutoff radii need 0 < r_in < r_out");
        for (int k = 0; k < spec.n; ++k) {
            const auto K = static_cast<std::size_t>(k);
            if (std::abs(center[K] - spec.centers[K]) + r_out * spec.radii[K] >= spec.radii[K])
                throw InvalidSpec("cutoff ball must lie strictly inside the polydisc");
        }
    }
};

/// Scaled distance sqrt(sum |z_k - a_k|^2 / R_k^2).
inline double scaled_distance(std::span<const cplx> z, std::span<const cplx> a, std::span<const double> radii) {
    double s = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) s += std::norm(z[k] - a[k]) / (radii[k] * radii[k]);
    return std::sqrt(s);
}

/// Smooth step: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

inline double cutoff_value(const CutoffSpec& c, double rho) {
    return smooth_step((c.r_out - rho) / (c.r_out - c.r_in));
}

inline GridField build_cutoff(const CutoffSpec& cutoff, const GeometryPtr& geo) {
    cutoff.validate(geo->spec());
    const auto& radii = geo->spec().radii;
    return sample([&](std::span<const cplx> z) { return cplx(cutoff_value(cutoff, scaled_distance(z, cutoff.center, radii))); },
                  geo);
}

/// F = z - alpha.
inline HolomorphicMap<GridField> shifted_coordinates(const GeometryPtr& geo, std::span<const cplx> alpha) {
    HolomorphicMap<GridField> f;
    for (int j = 0; j < geo->n(); ++j) f.components.push_back(coordinate_field(geo, j, alpha[static_cast<std::size_t>(j)]));
    return f;
}

struct TaylorSplit {
    std::vector<GridField> lambdas;
    double quadrature_check = 0.0;   // 16 vs 24 Gauss nodes at the outermost node
    double split_residual = 0.0;     // max |g - sum (z_j - a_j) lambda_j| on the support
};

namespace detail {

template <int N>
void ray_integral(const HolomorphicInput& g, std::span<const cplx> z, std::span<cplx> out, double reach) {
    using rule = boost::math::quadrature::gauss<double, N>;
    const std::size_t n = z.size();
    std::vector<cplx> p(n), grad(n);
    std::fill(out.begin(), out.end(), cplx{});
    auto at = [&](double t, double w) {
        for (std::size_t k = 0; k < n; ++k) p[k] = g.alpha[k] + t * (z[k] - g.alpha[k]);
        g.gradient_at(p, grad, reach);
        for (std::size_t k = 0; k < n; ++k) out[k] += w * grad[k];
    };
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    // nodes on [-1,1] mapped to [0,1]
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            at(0.5, 0.5 * w[i]);
            continue;
        }
        at(0.5 * (1.0 - x[i]), 0.5 * w[i]);
        at(0.5 * (1.0 + x[i]), 0.5 * w[i]);
    }
}

}  // namespace detail

/// lambda_j(z) = int_0^1 dg/dz_j(a + t (z - a)) dt on nodes where the cutoff
/// is positive; zero elsewhere.
inline TaylorSplit taylor_split(const HolomorphicInput& g, const GeometryPtr& geo, const CutoffSpec& cutoff) {
    const int n = geo->n();
    if (g.dim() != n) throw DimensionMismatch("input and grid dimensions differ");
    cutoff.validate(geo->spec());
    const auto& radii = geo->spec().radii;
    const double g0 = std::abs(g(g.alpha));
    if (g0 > g.vanishing_tolerance) throw GateFailure("taylor split", "g(alpha) = 0", g0, g.vanishing_tolerance);

    const double reach = 0.5 * (1.0 - cutoff.r_out) * geo->spec().min_radius();
    TaylorSplit out;
    for (int j = 0; j < n; ++j) out.lambdas.emplace_back(geo);
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < geo->size(); ++i) {
        std::array<cplx, kMaxPolyVars> z{};
        geo->coordinates(i, std::span<cplx>(z.data(), static_cast<std::size_t>(n)));
        if (geo->masked(i) && scaled_distance(std::span<const cplx>(z.data(), static_cast<std::size_t>(n)), cutoff.center, radii) < cutoff.r_out)
            support.push_back(i);
    }
    std::vector<double> residual(support.size(), 0.0);
    parallel_for(support.size(), [&](std::size_t s) {
        const std::size_t i = support[s];
        std::array<cplx, kMaxPolyVars> z{}, lam{};
        const auto zs = std::span<cplx>(z.data(), static_cast<std::size_t>(n));
        const auto ls = std::span<cplx>(lam.data(), static_cast<std::size_t>(n));
        geo->coordinates(i, zs);
        detail::ray_integral<16>(g, zs, ls, reach);
        cplx sum{};
        for (int j = 0; j < n; ++j) {
            out.lambdas[static_cast<std::size_t>(j)][i] = lam[static_cast<std::size_t>(j)];
            sum += (z[static_cast<std::size_t>(j)] - g.alpha[static_cast<std::size_t>(j)]) * lam[static_cast<std::size_t>(j)];
        }
        residual[s] = std::abs(sum - g(zs));
    });
    for (double r : residual) out.split_residual = std::max(out.split_residual, r);

    // convergence check at the support node farthest from alpha
    std::size_t far = support.empty() ? 0 : support.front();
    double far_rho = -1.0;
    for (std::size_t i : support) {
        std::array<cplx, kMaxPolyVars> z{};
        geo->coordinates(i, std::span<cplx>(z.data(), static_cast<std::size_t>(n)));
        const double rho = scaled_distance(std::span<const cplx>(z.data(), static_cast<std::size_t>(n)), cutoff.center, radii);
        if (rho > far_rho) {
            far_rho = rho;
            far = i;
        }
    }
    if (!support.empty()) {
        std::array<cplx, kMaxPolyVars> z{}, lam{};
        const auto zs = std::span<cplx>(z.data(), static_cast<std::size_t>(n));
        geo->coordinates(far, zs);
        detail::ray_integral<24>(g, zs, std::span<cplx>(lam.data(), static_cast<std::size_t>(n)), reach);
        for (int j = 0; j < n; ++j)
            out.quadrature_check = std::max(out.quadrature_check, std::abs(lam[static_cast<std::size_t>(j)] - out.lambdas[static_cast<std::size_t>(j)][far]));
    }
    return out;
}

/// L_j = (1 - chi) g conj(F_j) / sum |F_k|^2 + chi lambda_j.
inline std::vector<GridField> build_lifts(const GridField& g, const HolomorphicMap<GridField>& f, const TaylorSplit& split,
                                          const GridField& chi, const CutoffSpec& cutoff) {
    const auto& geo = g.grid();
    const int n = geo.n();
    if (f.dim() != n || static_cast<int>(split.lambdas.size()) != n) throw DimensionMismatch("build_lifts: dimensions");
    const double floor = std::pow(cutoff.r_in * geo.spec().min_radius(), 2);
    std::vector<GridField> lifts;
    for (int j = 0; j < n; ++j) lifts.emplace_back(g.geometry());
    for (std::size_t i = 0; i < geo.size(); ++i) {
        const double c = chi[i].real();
        double denom = 0.0;
        for (int k = 0; k < n; ++k) denom += std::norm(f[k][i]);
        if (c < 1.0 && denom < floor * (1.0 - 1e-9))
            throw Error("build_lifts: singular quotient evaluated inside the cutoff core");
        for (int j = 0; j < n; ++j) {
            const auto J = static_cast<std::size_t>(j);
            cplx v = c * split.lambdas[J][i];
            if (c < 1.0) v += (1.0 - c) * g[i] * std::conj(f[j][i]) / denom;
            lifts[J][i] = v;
        }
    }
    return lifts;
}

/// W = sum_j e_j (x) dbar L_j.
template <Coefficient C>
KoszulForm<C> assemble_W(const std::vector<C>& lifts) {
    const int n = static_cast<int>(lifts.size());
    KoszulForm<C> w(n, 1, 1);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) w.add(ExteriorIndex::of({j}), ConjIndex::of({k}), dbar(lifts[static_cast<std::size_t>(j)], k));
    return w;
}

/// X = sum_j e_j (x) chi_supp conj(F_j) / sum |F_k|^2, so tau_F X = chi_supp.
inline GridForm build_X(const HolomorphicMap<GridField>& f, const GridField& chi_supp) {
    const auto& geo = chi_supp.grid();
    const int n = geo.n();
    std::vector<GridField> parts;
    for (int j = 0; j < n; ++j) parts.emplace_back(chi_supp.geometry());
    for (std::size_t i = 0; i < geo.size(); ++i) {
        const double c = chi_supp[i].real();
        if (c == 0.0) continue;
        double denom = 0.0;
        for (int k = 0; k < n; ++k) denom += std::norm(f[k][i]);
        if (denom < 1e-24) throw Error("build_X: F vanishes on the support of the cutoff");
        for (int j = 0; j < n; ++j) parts[static_cast<std::size_t>(j)][i] = c * std::conj(f[j][i]) / denom;
    }
    GridForm x(n, 1, 0);
    for (int j = 0; j < n; ++j) x.add(ExteriorIndex::of({j}), ConjIndex{}, parts[static_cast<std::size_t>(j)]);
    return x;
}

/// One recorded numerical contract.
struct Gate {
    std::string stage;
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;

    bool passed() const { return std::isfinite(measured) && measured <= tolerance; }
};

struct SolveRecord {
    int level = 0;
    std::string component;   // e-label of the component solved
    int s = 0;               // conj degree of the right-hand side
    double residual = 0.0;
    double beta_max = 0.0;
    double closedness = 0.0;
    int passes = 0;
};

struct DescentOptions {
    double rho = 0.9;
    /// A quantity that vanishes in the continuum passes when it stays within
    /// gate_factor times its truncation estimate (fourth- minus second-order
    /// stencils on the same data).
    double gate_factor = 10.0;
    CauchyMethod method = CauchyMethod::fft;
};

struct DescentTrace {
    std::vector<Gate> gates;
    std::vector<SolveRecord> solves;
    int depth = 0;

    bool passed() const {
        return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.passed(); });
    }
};

inline GridForm dbar_form(const GridForm& a, FdOrder order) {
    return dbar_form_with(a, [order](const GridField& w, int j) { return fd_dbar(w, j, order); });
}

namespace detail {

inline double scale_of(const GridForm& a, double rho) {
    return a.is_zero_form() ? 0.0 : form_interior_max(a, rho);
}

/// Truncation estimate for dbar_form(a).
inline double dbar_gap(const GridForm& a, double rho) {
    return scale_of(dbar_form(a, FdOrder::fourth) - dbar_form(a, FdOrder::second), rho);
}

inline void record(DescentTrace& trace, std::string stage, std::string name, double measured, double tolerance) {
    trace.gates.push_back({std::move(stage), std::move(name), measured, tolerance});
}

}  // namespace detail

/// Solves tau_F dbar Y = W for a (r,s)-form W with tau_F W = 0 and
/// dbar W = 0. X is a (1,0)-form with tau_F X = 1 on the support of W.
/// `w_low`, when given, is W rebuilt with second-order stencils and sets the
/// truncation scale for the tau W gate.
inline GridForm koszul_descent(const GridForm& w, const HolomorphicMap<GridField>& f, const GridForm& x,
                               const DescentOptions& options, DescentTrace& trace, const GridForm* w_low = nullptr,
                               int level = 1) {
    const int n = w.dim();
    const int r = w.exterior_degree(), s = w.conj_degree();
    if (r < 1 || r >= n || s < 1) throw DimensionMismatch("koszul_descent expects 1 <= r < n and s >= 1");
    trace.depth = std::max(trace.depth, level);
    GridForm y(n, r + 1, s - 1);
    if (w.is_zero_form()) return y;

    const std::string stage = "descent level " + std::to_string(level);
    const double rho = options.rho;
    const double k = options.gate_factor;
    const double floor = 1e-12 * detail::scale_of(w, rho);
    if (w_low)
        detail::record(trace, stage, "tau W = 0", detail::scale_of(tau(f, w), rho),
                       k * detail::scale_of(tau(f, w - *w_low), rho) + floor);
    if (s < n) detail::record(trace, stage, "dbar W = 0", detail::scale_of(dbar_form(w), rho), k * detail::dbar_gap(w, rho) + floor);

    GridForm y1 = wedge(x, w);
    GridForm y3(n, r + 1, s);
    if (r + 1 == n || s == n) {
        if (s < n)
            detail::record(trace, stage, "dbar(X ^ W) = 0", detail::scale_of(dbar_form(y1), rho),
                           k * detail::dbar_gap(y1, rho) + floor);
        y3 = std::move(y1);
    } else {
        const GridForm z = dbar_form(y1);
        const GridForm z_low = dbar_form(y1, FdOrder::second);
        const GridForm y2 = koszul_descent(z, f, x, options, trace, &z_low, level + 1);
        y3 = y1 - tau(f, y2);
    }

    // dbar Y = Y3, one e-component at a time
    std::map<ExteriorIndex, GridForm> rhs;
    for (const auto& [key, c] : y3.components()) {
        auto it = rhs.try_emplace(key.first, n, 0, s).first;
        it->second.add(ExteriorIndex{}, key.second, c);
    }
    for (const auto& [e, beta] : rhs) {
        const double gap = s < n ? detail::dbar_gap(beta, rho) : 0.0;
        DbarSolution sol =
            solve_dbar_polydisc({beta, std::numeric_limits<double>::infinity()}, DbarOptions{options.method, rho});
        trace.solves.push_back({level, exterior_label(e), s, sol.residual, sol.beta_max, sol.closedness, sol.passes});
        if (s < n) detail::record(trace, stage, "dbar closed, " + exterior_label(e), sol.closedness, k * gap + 1e-12 * sol.beta_max);
        for (const auto& [key, c] : sol.u.components()) y.add(e, key.second, c);
    }
    detail::record(trace, stage, "tau dbar Y = W", detail::scale_of(tau(f, dbar_form(y)) - w, rho),
                   k * detail::scale_of(tau(f, dbar_form(y) - dbar_form(y, FdOrder::second)), rho) + floor);
    return y;
}

struct DecompositionOptions {
    double rho = 0.0;          // <= 0: the grid's shrink factor
    double gate_factor = 10.0;
    CauchyMethod method = CauchyMethod::fft;
    double tol_id_rel = 5e-3;  // R_id tolerance relative to sup |g|
    double tol_hol_factor = 10.0;
    std::optional<double> tol_id;   // absolute overrides
    std::optional<double> tol_hol;
};

struct DecompositionReport {
    PolydiscSpec spec;
    CutoffSpec cutoff;
    std::string input;
    double rho = 0.9;
    double g_sup = 0.0;
    double r_id = 0.0;
    std::vector<double> r_hol;
    std::vector<double> sup_norms;
    std::vector<double> l2_norms;
    double fd_floor = 0.0;
    double tol_id = 0.0;
    double tol_hol = 0.0;
    double split_residual = 0.0;
    double quadrature_check = 0.0;
    double lift_identity = 0.0;
    int depth = 0;
    std::vector<Gate> gates;
    std::vector<SolveRecord> solves;

    bool passed() const {
        return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.passed(); });
    }
};

struct DecompositionResult {
    std::vector<GridField> g_components;
    DecompositionReport report;
};

/// max_k interior_max(fd_dbar(f, k)).
inline double holomorphy_defect(const GridField& f, double rho) {
    double best = 0.0;
    for (int k = 0; k < f.grid().n(); ++k) best = std::max(best, interior_max(fd_dbar(f, k), rho));
    return best;
}

/// Discretization floor of dbar on the lifts: the gap between the fourth-
/// and second-order stencils, which estimates the second-order truncation
/// error of the fields the descent differentiates.
inline double fd_floor(const std::vector<GridField>& lifts, double rho) {
    double best = 0.0;
    for (const auto& l : lifts)
        for (int k = 0; k < l.grid().n(); ++k)
            best = std::max(best, interior_max(fd_dbar(l, k, FdOrder::fourth) - fd_dbar(l, k, FdOrder::second), rho));
    return best;
}

inline DecompositionResult gleason_decompose(const HolomorphicInput& g, const GeometryPtr& geo, const CutoffSpec& cutoff,
                                             const DecompositionOptions& options = {}) {
    const int n = geo->n();
    if (n < 1 || n > 3) throw InvalidSpec("gleason_decompose supports n = 1, 2, 3");
    if (g.dim() != n) throw DimensionMismatch("input and grid dimensions differ");
    cutoff.validate(geo->spec());
    for (int k = 0; k < n; ++k)
        if (std::abs(cutoff.center[static_cast<std::size_t>(k)] - g.alpha[static_cast<std::size_t>(k)]) > 0)
            throw InvalidSpec("cutoff must be centered at the basepoint");

    DecompositionReport rep;
    rep.spec = geo->spec();
    rep.cutoff = cutoff;
    rep.input = g.name;
    rep.rho = options.rho > 0 ? options.rho : geo->spec().shrink;
    const double rho = rep.rho;

    const GridField gf = sample(g.value, geo);
    rep.g_sup = interior_max(gf, rho);
    const GridField chi = build_cutoff(cutoff, geo);
    const TaylorSplit split = taylor_split(g, geo, cutoff);
    rep.split_residual = split.split_residual;
    rep.quadrature_check = split.quadrature_check;
    const double split_tol = std::max(1e-10, 1e-10 * rep.g_sup);
    rep.gates.push_back({"taylor split", "quadrature 16 vs 24 nodes", split.quadrature_check, split_tol});
    rep.gates.push_back({"taylor split", "split identity", split.split_residual, split_tol});

    const HolomorphicMap<GridField> f = shifted_coordinates(geo, g.alpha);
    std::vector<GridField> lifts = build_lifts(gf, f, split, chi, cutoff);
    {
        GridField sum(geo);
        for (int j = 0; j < n; ++j) sum += f[j] * lifts[static_cast<std::size_t>(j)];
        rep.lift_identity = masked_max(sum - gf);
        rep.gates.push_back({"lifts", "sum (z_j - a_j) L_j = g", rep.lift_identity, split_tol});
    }
    rep.fd_floor = fd_floor(lifts, rho);

    std::vector<GridField> parts;
    if (n == 1) {
        parts = std::move(lifts);
    } else {
        const GridForm w = assemble_W(lifts);
        GridForm w_low(n, 1, 1);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                w_low.add(ExteriorIndex::of({j}), ConjIndex::of({k}), fd_dbar(lifts[static_cast<std::size_t>(j)], k, FdOrder::second));
        CutoffSpec inner = cutoff;
        inner.r_in = cutoff.r_in / 2;
        inner.r_out = cutoff.r_in;
        const GridField chi_supp = GridField(geo, cplx(1.0)) - build_cutoff(inner, geo);
        const GridForm x = build_X(f, chi_supp);

        DescentTrace trace;
        const GridForm y = koszul_descent(w, f, x, DescentOptions{rho, options.gate_factor, options.method}, trace, &w_low);
        rep.depth = trace.depth;
        rep.gates.insert(rep.gates.end(), trace.gates.begin(), trace.gates.end());
        rep.solves = std::move(trace.solves);

        const GridForm ty = tau(f, y);
        for (int j = 0; j < n; ++j) {
            GridField gj = lifts[static_cast<std::size_t>(j)];
            if (const GridField* c = ty.find(ExteriorIndex::of({j}), ConjIndex{})) gj -= *c;
            parts.push_back(std::move(gj));
        }
    }

    GridField sum(geo);
    for (int j = 0; j < n; ++j) sum += f[j] * parts[static_cast<std::size_t>(j)];
    rep.r_id = interior_max(gf - sum, rho);
    for (const auto& p : parts) {
        rep.r_hol.push_back(holomorphy_defect(p, rho));
        rep.sup_norms.push_back(interior_max(p, rho));
        rep.l2_norms.push_back(l2_norm(p));
    }
    rep.tol_id = options.tol_id ? *options.tol_id : options.tol_id_rel * rep.g_sup;
    rep.tol_hol = options.tol_hol ? *options.tol_hol : options.tol_hol_factor * rep.fd_floor;
    rep.gates.push_back({"result", "R_id", rep.r_id, rep.tol_id});
    for (int j = 0; j < n; ++j)
        rep.gates.push_back({"result", "R_hol g" + std::to_string(j + 1), rep.r_hol[static_cast<std::size_t>(j)], rep.tol_hol});
    return {std::move(parts), std::move(rep)};
}

}  // namespace koszul

#endif
