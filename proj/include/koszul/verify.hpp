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

// Residual checks that recompute everything from the inputs, grid-refinement
// studies, and the randomized exact check of the Koszul laws
//
//   tau tau = 0,   dbar dbar = 0,   tau dbar = dbar tau,
//   tau(A ^ B) = tau A ^ B + (-1)^r(A) A ^ tau B.

#ifndef KOSZUL_VERIFY_HPP
#define KOSZUL_VERIFY_HPP

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "koszul/exterior.hpp"
#include "koszul/gleason.hpp"
#include "koszul/grid.hpp"
#include "koszul/parallel.hpp"
#include "koszul/symbolic.hpp"

namespace koszul {

using json = nlohmann::ordered_json;

struct ResidualReport {
    PolydiscSpec spec;
    double rho = 0.9;
    double r_id = 0.0;
    std::vector<double> r_hol;
    std::vector<double> sup_norms;
    std::vector<double> l2_norms;
    double tol_id = 0.0;
    double tol_hol = 0.0;
    bool id_passed = false;
    std::vector<bool> hol_passed;

    bool passed() const {
        return id_passed && std::all_of(hol_passed.begin(), hol_passed.end(), [](bool b) { return b; });
    }
};

/// Recomputes the residuals of a candidate decomposition from g and the g_j
/// alone.
inline ResidualReport verify_decomposition(const HolomorphicInput& g, const std::vector<GridField>& parts, const GeometryPtr& geo,
                                           double rho, double tol_id, double tol_hol) {
    const int n = geo->n();
    if (static_cast<int>(parts.size()) != n || g.dim() != n) throw DimensionMismatch("verify: component count");
    for (const auto& p : parts)
        if (!(p.grid().spec() == geo->spec())) throw DimensionMismatch("verify: field lives on a different grid");
    ResidualReport rep;
    rep.spec = geo->spec();
    rep.rho = rho;
    rep.tol_id = tol_id;
    rep.tol_hol = tol_hol;

    GridField defect(geo);
    std::array<cplx, kMaxPolyVars> z{};
    for (std::size_t i = 0; i < geo->size(); ++i) {
        if (!geo->masked(i)) continue;
        const auto zs = std::span<cplx>(z.data(), static_cast<std::size_t>(n));
        geo->coordinates(i, zs);
        cplx acc = g.value(zs);
        for (int j = 0; j < n; ++j)
            acc -= (z[static_cast<std::size_t>(j)] - g.alpha[static_cast<std::size_t>(j)]) * parts[static_cast<std::size_t>(j)][i];
        defect[i] = acc;
    }
    rep.r_id = interior_max(defect, rho);
    rep.id_passed = rep.r_id <= tol_id;
    for (const auto& p : parts) {
        double hol = 0.0;
        for (int k = 0; k < n; ++k) hol = std::max(hol, interior_max(fd_dbar(p, k), rho));
        rep.r_hol.push_back(hol);
        rep.hol_passed.push_back(hol <= tol_hol);
        rep.sup_norms.push_back(interior_max(p, rho));
        rep.l2_norms.push_back(l2_norm(p));
    }
    return rep;
}

/// Residuals at or below this multiple of sup |g| count as round-off.
inline constexpr double kAtFloor = 1e-12;

/// Ratio fine/coarse of two residuals, or nullopt when both sit at the
/// round-off floor (no trend to measure).
inline std::optional<double> residual_ratio(double coarse, double fine, double scale) {
    const double floor = kAtFloor * std::max(scale, 1.0);
    if (coarse <= floor && fine <= floor) return std::nullopt;
    if (coarse == 0.0) return std::numeric_limits<double>::infinity();
    return fine / coarse;
}

struct ConvergenceRow {
    int M = 0;
    bool ok = false;
    std::string error;   // set when the level failed
    double g_sup = 0.0;
    double r_id = 0.0;
    std::vector<double> r_hol;
    std::vector<double> sup_norms;
    std::vector<double> l2_norms;
    DecompositionReport report;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    /// per consecutive pair: R_id ratio (nullopt = at floor)
    std::vector<std::optional<double>> id_ratio;
    /// per consecutive pair and component: log2(R_hol coarse / fine)
    std::vector<std::vector<double>> hol_order;

    /// Every consecutive R_id ratio is at most `limit` or at the floor.
    bool id_ratios_met(double limit = 0.5) const {
        for (std::size_t k = 0; k + 1 < rows.size(); ++k)
            if (!rows[k].ok || !rows[k + 1].ok) return false;
        return std::all_of(id_ratio.begin(), id_ratio.end(), [limit](const auto& r) { return !r || *r <= limit; });
    }
};

/// Runs the pipeline once per M (ascending); a failing level is recorded.
inline ConvergenceStudy convergence_study(const HolomorphicInput& g, const PolydiscSpec& base, const std::vector<int>& levels,
                                          const CutoffSpec& cutoff, const DecompositionOptions& options = {}) {
    if (levels.size() < 2) throw InvalidSpec("convergence study needs at least two grid levels");
    if (!std::is_sorted(levels.begin(), levels.end()) ||
        std::adjacent_find(levels.begin(), levels.end()) != levels.end())
        throw InvalidSpec("grid levels must be strictly ascending");
    ConvergenceStudy study;
    for (int M : levels) {
        PolydiscSpec spec = base;
        spec.M = M;
        ConvergenceRow row;
        row.M = M;
        try {
            const auto geo = make_geometry(spec);
            auto result = gleason_decompose(g, geo, cutoff, options);
            row.ok = true;
            row.report = result.report;
            row.g_sup = result.report.g_sup;
            row.r_id = result.report.r_id;
            row.r_hol = result.report.r_hol;
            row.sup_norms = result.report.sup_norms;
            row.l2_norms = result.report.l2_norms;
        } catch (const Error& e) {
            row.error = e.what();
        }
        study.rows.push_back(std::move(row));
    }
    for (std::size_t k = 0; k + 1 < study.rows.size(); ++k) {
        const auto& a = study.rows[k];
        const auto& b = study.rows[k + 1];
        if (!a.ok || !b.ok) {
            study.id_ratio.push_back(std::numeric_limits<double>::quiet_NaN());
            study.hol_order.emplace_back();
            continue;
        }
        study.id_ratio.push_back(residual_ratio(a.r_id, b.r_id, b.g_sup));
        std::vector<double> orders;
        for (std::size_t j = 0; j < a.r_hol.size(); ++j)
            orders.push_back(std::log2(a.r_hol[j] / b.r_hol[j]) / std::log2(static_cast<double>(b.M) / a.M));
        study.hol_order.push_back(std::move(orders));
    }
    return study;
}

// ---------------------------------------------------------------------------
// JSON

inline json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

/// NaN and infinities become null; everything else is emitted as is.
inline json number_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json ratio_json(const std::optional<double>& r) { return r ? number_json(*r) : json("at-floor"); }

inline json grid_json(const PolydiscSpec& spec, double rho) {
    json g;
    g["n"] = spec.n;
    g["M"] = spec.M;
    json centers = json::array();
    for (const auto& c : spec.centers) centers.push_back(complex_json(c));
    g["centers"] = centers;
    g["radii"] = spec.radii;
    g["shrink"] = spec.shrink;
    g["rho"] = rho;
    return g;
}

inline json gates_json(const std::vector<Gate>& gates) {
    json list = json::array();
    for (const auto& g : gates)
        list.push_back({{"stage", g.stage}, {"name", g.name}, {"measured", number_json(g.measured)},
                        {"tolerance", number_json(g.tolerance)}, {"passed", g.passed()}});
    return list;
}

/// Companion run at the next coarser grid, for order estimates.
inline json order_estimates_json(const DecompositionReport& coarse, const DecompositionReport& fine) {
    json o;
    o["M_coarse"] = coarse.spec.M;
    o["M_fine"] = fine.spec.M;
    o["R_id_coarse"] = number_json(coarse.r_id);
    o["R_id_ratio"] = ratio_json(residual_ratio(coarse.r_id, fine.r_id, fine.g_sup));
    json hol = json::array(), sup = json::array(), l2 = json::array(), hc = json::array();
    const double step = std::log2(static_cast<double>(fine.spec.M) / coarse.spec.M);
    for (std::size_t j = 0; j < fine.r_hol.size(); ++j) {
        hc.push_back(number_json(coarse.r_hol[j]));
        hol.push_back(number_json(std::log2(coarse.r_hol[j] / fine.r_hol[j]) / step));
        sup.push_back(number_json(std::abs(fine.sup_norms[j] - coarse.sup_norms[j]) / coarse.sup_norms[j]));
        l2.push_back(number_json(std::abs(fine.l2_norms[j] - coarse.l2_norms[j]) / coarse.l2_norms[j]));
    }
    o["R_hol_coarse"] = hc;
    o["R_hol_order"] = hol;
    o["sup_relative_change"] = sup;
    o["l2_relative_change"] = l2;
    return o;
}

inline json report_json(const DecompositionReport& rep, const json& order_estimates = nullptr) {
    json out;
    json grid = grid_json(rep.spec, rep.rho);
    grid["input"] = rep.input;
    json alpha = json::array();
    for (const auto& a : rep.cutoff.center) alpha.push_back(complex_json(a));
    grid["alpha"] = alpha;
    grid["r_in"] = rep.cutoff.r_in;
    grid["r_out"] = rep.cutoff.r_out;
    out["grid"] = grid;

    json res;
    res["R_id"] = number_json(rep.r_id);
    json hol = json::array();
    for (double v : rep.r_hol) hol.push_back(number_json(v));
    res["R_hol"] = hol;
    res["fd_floor"] = number_json(rep.fd_floor);
    res["split_residual"] = number_json(rep.split_residual);
    res["quadrature_check"] = number_json(rep.quadrature_check);
    res["lift_identity"] = number_json(rep.lift_identity);
    json solves = json::array();
    for (const auto& s : rep.solves)
        solves.push_back({{"level", s.level}, {"component", s.component}, {"s", s.s}, {"residual", number_json(s.residual)},
                          {"beta_max", number_json(s.beta_max)}, {"closedness", number_json(s.closedness)}, {"passes", s.passes}});
    res["solves"] = solves;
    out["residuals"] = res;

    json norms;
    norms["g_sup"] = number_json(rep.g_sup);
    json sup = json::array(), l2 = json::array();
    for (double v : rep.sup_norms) sup.push_back(number_json(v));
    for (double v : rep.l2_norms) l2.push_back(number_json(v));
    norms["sup"] = sup;
    norms["l2"] = l2;
    out["norms"] = norms;

    json gates;
    gates["passed"] = rep.passed();
    gates["tol_id"] = number_json(rep.tol_id);
    gates["tol_hol"] = number_json(rep.tol_hol);
    gates["depth"] = rep.depth;
    gates["checks"] = gates_json(rep.gates);
    out["gates"] = gates;
    out["order_estimates"] = order_estimates;
    return out;
}

// ---------------------------------------------------------------------------
// Law suite

using SymForm = KoszulForm<PolyExpr>;

struct LawViolation {
    int trial = 0;
    std::string law;
    json instance;
};

struct LawSuiteResult {
    int trials = 0;
    std::uint64_t seed = 0;
    std::map<std::string, int> checked;
    std::vector<LawViolation> violations;

    bool passed() const { return violations.empty(); }
};

struct LawSuiteOptions {
    int max_dim = 3;
    int max_degree = 4;
    int max_r = 2;
    int max_s = 2;
    int max_map_degree = 2;
    /// Self-test of the harness: flips the sign of the second term of the
    /// anti-derivation law.
    bool inject_sign_error = false;
};

namespace detail {

class FormSampler {
public:
    FormSampler(std::uint64_t seed, int trial) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(trial), 0x6b6f737au};
        rng_.seed(seq);
    }

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    PolyExpr poly(int n, int max_degree, bool holomorphic) {
        PolyExpr p(n);
        const int terms = uniform(1, 4);
        for (int t = 0; t < terms; ++t) {
            Monomial m;
            const int degree = uniform(0, max_degree);
            for (int d = 0; d < degree; ++d) {
                const int slot = holomorphic ? uniform(0, n - 1) : uniform(0, 2 * n - 1);
                const int at = slot < n ? slot : kMaxPolyVars + (slot - n);
                ++m.exps[static_cast<std::size_t>(at)];
            }
            int c = 0;
            while (c == 0) c = uniform(-3, 3);
            p.add_term(m, ComplexRational(c));
        }
        return p;
    }

    SymForm form(int n, int r, int s, int max_degree) {
        SymForm a(n, r, s);
        const auto er = subsets(n, r), es = subsets(n, s);
        const int count = uniform(1, 3);
        for (int c = 0; c < count; ++c) {
            const auto j = er[static_cast<std::size_t>(uniform(0, static_cast<int>(er.size()) - 1))];
            const auto k = es[static_cast<std::size_t>(uniform(0, static_cast<int>(es.size()) - 1))];
            a.add(ExteriorIndex::from_bits(j), ConjIndex::from_bits(k), poly(n, max_degree, false));
        }
        return a;
    }

    HolomorphicMap<PolyExpr> map(int n, int max_degree) {
        HolomorphicMap<PolyExpr> f;
        for (int j = 0; j < n; ++j) f.components.push_back(poly(n, max_degree, true));
        return f;
    }

private:
    static std::vector<std::uint32_t> subsets(int n, int size) {
        std::vector<std::uint32_t> out;
        for (std::uint32_t b = 0; b < (1u << n); ++b)
            if (std::popcount(b) == size) out.push_back(b);
        return out;
    }

    std::mt19937_64 rng_;
};

inline json form_json(const SymForm& a) {
    json out;
    out["r"] = a.exterior_degree();
    out["s"] = a.conj_degree();
    json terms = json::array();
    for (const auto& [key, c] : a.components())
        terms.push_back({{"e", exterior_label(key.first)}, {"dzb", conj_label(key.second)}, {"coeff", print(c)}});
    out["terms"] = terms;
    return out;
}

inline json map_json(const HolomorphicMap<PolyExpr>& f) {
    json out = json::array();
    for (const auto& c : f.components) out.push_back(print(c));
    return out;
}

}  // namespace detail

/// Checks the four laws on `trials` random instances; trial t draws from
/// its own generator seeded by (seed, t), so results do not depend on the
/// thread count.
inline LawSuiteResult run_law_suite(std::uint64_t seed, int trials, const LawSuiteOptions& options = {}) {
    if (trials < 0) throw InvalidSpec("trials must be non-negative");
    LawSuiteResult result;
    result.trials = trials;
    result.seed = seed;
    static const std::vector<std::string> kLaws{"tau tau = 0", "dbar dbar = 0", "tau dbar = dbar tau", "anti-derivation"};
    std::vector<std::vector<LawViolation>> found(static_cast<std::size_t>(trials));
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        detail::FormSampler rng(seed, static_cast<int>(t));
        const int n = rng.uniform(1, options.max_dim);
        const int r = rng.uniform(0, std::min(options.max_r, n));
        const int s = rng.uniform(0, std::min(options.max_s, n));
        const int r2 = rng.uniform(0, std::min(options.max_r, n));
        const int s2 = rng.uniform(0, std::min(options.max_s, n));
        const auto f = rng.map(n, options.max_map_degree);
        const SymForm a = rng.form(n, r, s, options.max_degree);
        const SymForm b = rng.form(n, r2, s2, options.max_degree);
        auto& out = found[t];
        auto report = [&](const std::string& law, const SymForm& defect, bool with_b) {
            if (defect.is_zero_form()) return;
            json inst;
            inst["n"] = n;
            inst["F"] = detail::map_json(f);
            inst["A"] = detail::form_json(a);
            if (with_b) inst["B"] = detail::form_json(b);
            inst["defect"] = detail::form_json(defect);
            out.push_back({static_cast<int>(t), law, inst});
        };
        report(kLaws[0], tau(f, tau(f, a)), false);
        report(kLaws[1], dbar_form(dbar_form(a)), false);
        report(kLaws[2], tau(f, dbar_form(a)) - dbar_form(tau(f, a)), false);
        const int ra = a.exterior_degree(), rb = b.exterior_degree();
        if (ra + rb >= 1 && ra + rb <= n) {
            const int sign = ((ra & 1) ? -1 : 1) * (options.inject_sign_error ? -1 : 1);
            SymForm defect = tau(f, wedge(a, b));
            // tau of a degree-0 block is zero; skip it rather than mix shapes
            if (ra > 0) defect -= wedge(tau(f, a), b);
            if (rb > 0) {
                const SymForm second = wedge(a, tau(f, b));
                if (sign > 0) defect -= second;
                else defect += second;
            }
            report(kLaws[3], defect, true);
        }
    });
    for (const auto& law : kLaws) result.checked[law] = 0;
    for (int t = 0; t < trials; ++t) {
        for (const auto& law : kLaws) ++result.checked[law];
        for (auto& v : found[static_cast<std::size_t>(t)]) result.violations.push_back(std::move(v));
    }
    return result;
}

inline json law_suite_json(const LawSuiteResult& r) {
    json out;
    out["seed"] = r.seed;
    out["trials"] = r.trials;
    out["passed"] = r.passed();
    json checked;
    for (const auto& [law, count] : r.checked) checked[law] = count;
    out["checked"] = checked;
    json v = json::array();
    for (const auto& x : r.violations) v.push_back({{"trial", x.trial}, {"law", x.law}, {"instance", x.instance}});
    out["violations"] = v;
    return out;
}

}  // namespace koszul

#endif
