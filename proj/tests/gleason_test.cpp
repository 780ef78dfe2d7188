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

#include <gtest/gtest.h>

#include "koszul/gleason.hpp"
#include "koszul/registry.hpp"
#include "koszul/symbolic.hpp"
#include "koszul/verify.hpp"

using namespace koszul;

namespace {

// lambda_j = int_0^1 (d_j g)(t z) dt, term by term: a degree-d monomial gets 1/(d+1).
PolyExpr lambda_oracle(const PolyExpr& g, int j) {
    PolyExpr out(g.dim());
    const PolyExpr d = dz(g, j);
    for (const auto& [m, c] : d.terms()) out.add_term(m, c * ComplexRational(mpq_class(1, m.degree() + 1)));
    return out;
}

CutoffSpec origin_cutoff(int n) { return CutoffSpec{std::vector<cplx>(static_cast<std::size_t>(n)), 0.2, 0.4}; }

}  // namespace

TEST(Gleason, TaylorSplitMatchesSymbolicOracle) {
    const PolyExpr g = parse_poly("z1 z2 + z2^2 - 3 z1^3 + (1+i) z1 z2^2", 2);
    const auto geo = make_geometry(PolydiscSpec::unit(2, 16));
    const auto in = HolomorphicInput::from_poly("g", g, {0.0, 0.0});
    const auto split = taylor_split(in, geo, origin_cutoff(2));
    std::array<cplx, 2> z{};
    double worst = 0.0;
    int checked = 0;
    for (std::size_t i = 0; i < geo->size(); ++i) {
        if (!geo->masked(i)) continue;
        geo->coordinates(i, z);
        if (scaled_distance(z, std::array<cplx, 2>{}, std::array<double, 2>{1.0, 1.0}) >= 0.4) continue;
        for (int j = 0; j < 2; ++j)
            worst = std::max(worst, std::abs(split.lambdas[static_cast<std::size_t>(j)][i] - evaluate(lambda_oracle(g, j), z)));
        ++checked;
    }
    EXPECT_GT(checked, 0);
    EXPECT_LT(worst, 1e-13);
    EXPECT_LT(split.split_residual, 1e-13);
}

TEST(Gleason, CutoffProfile) {
    const CutoffSpec c = origin_cutoff(2);
    EXPECT_EQ(cutoff_value(c, 0.0), 1.0);
    EXPECT_EQ(cutoff_value(c, 0.2), 1.0);
    EXPECT_EQ(cutoff_value(c, 0.4), 0.0);
    double prev = 1.0;
    for (double r = 0.2; r <= 0.4; r += 0.01) {
        const double v = cutoff_value(c, r);
        EXPECT_LE(v, prev + 1e-15);
        prev = v;
    }
    CutoffSpec bad = c;
    bad.r_in = 0.5;
    EXPECT_THROW(bad.validate(PolydiscSpec::unit(2, 16)), InvalidSpec);
}

TEST(Gleason, SurrogateLiftsGiveClosedKoszulCycle) {
    // any L with sum z_j L_j = g gives tau W = 0 and dbar W = 0 exactly
    const PolyExpr g = parse_poly("z1 z2 + z2^2", 2);
    const PolyExpr h = parse_poly("zb1 z2 - 2 zb2^2", 2);
    const PolyExpr z1 = PolyExpr::z(2, 0), z2 = PolyExpr::z(2, 1);
    const std::vector<PolyExpr> lifts{lambda_oracle(g, 0) + z2 * h, lambda_oracle(g, 1) - z1 * h};
    ASSERT_EQ(z1 * lifts[0] + z2 * lifts[1], g);
    const auto w = assemble_W(lifts);
    EXPECT_FALSE(w.is_zero_form());
    EXPECT_TRUE(tau(HolomorphicMap<PolyExpr>{{z1, z2}}, w).is_zero_form());
    EXPECT_TRUE(dbar_form(w).is_zero_form());
}

TEST(Gleason, NonVanishingInputIsRejected) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 12));
    const auto in = HolomorphicInput::from_poly("g", parse_poly("z1 + 1/10", 2), {0.0, 0.0});
    EXPECT_THROW(gleason_decompose(in, geo, origin_cutoff(2)), GateFailure);
    EXPECT_THROW(HolomorphicInput::from_poly("g", parse_poly("zb1", 2), {0.0, 0.0}), InvalidSpec);
}

TEST(Gleason, OneVariableIsDivision) {
    const auto geo = make_geometry(PolydiscSpec::unit(1, 32));
    const auto in = HolomorphicInput::from_poly("g", parse_poly("z1^2 + 2 z1", 1), {0.0});
    const auto res = gleason_decompose(in, geo, origin_cutoff(1));
    EXPECT_TRUE(res.report.passed());
    EXPECT_LT(interior_max(res.g_components[0] - sample(parse_poly("z1 + 2", 1), geo), 0.9), 1e-12);
}

TEST(Gleason, TwoVariablePipelinePassesGates) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 16));
    const auto g = registry_function("bilinear", 2);
    const auto res = gleason_decompose(g, geo, origin_cutoff(2));
    EXPECT_TRUE(res.report.passed());
    EXPECT_EQ(res.report.depth, 1);
    EXPECT_LE(res.report.r_id, 1e-12 * res.report.g_sup);
    for (double h : res.report.r_hol) EXPECT_LE(h, res.report.tol_hol);
    // every g_j is bounded on the interior
    for (double s : res.report.sup_norms) EXPECT_TRUE(std::isfinite(s));
}

TEST(Gleason, ShiftedBasepoint) {
    const std::vector<cplx> alpha{{0.1, -0.05}, {-0.1, 0.0}};
    const auto geo = make_geometry(PolydiscSpec::unit(2, 16));
    const auto g = registry_function("expsum", 2, alpha);
    const auto res = gleason_decompose(g, geo, CutoffSpec{alpha, 0.2, 0.4});
    EXPECT_TRUE(res.report.passed());
    const auto v = verify_decomposition(g, res.g_components, geo, 0.9, res.report.tol_id, res.report.tol_hol);
    EXPECT_NEAR(v.r_id, res.report.r_id, 1e-14);
    EXPECT_THROW(gleason_decompose(g, geo, origin_cutoff(2)), InvalidSpec);
}

TEST(Gleason, GaugeFreedomLeavesIdentityResidual) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 16));
    const auto g = registry_function("expsum", 2);
    const auto res = gleason_decompose(g, geo, origin_cutoff(2));
    const GridField h = sample(parse_poly("z1^2 - (2+i) z2 + 1/3", 2), geo);
    std::vector<GridField> moved = res.g_components;
    moved[0] += coordinate_field(geo, 1) * h;
    moved[1] -= coordinate_field(geo, 0) * h;
    const auto a = verify_decomposition(g, res.g_components, geo, 0.9, res.report.tol_id, res.report.tol_hol);
    const auto b = verify_decomposition(g, moved, geo, 0.9, res.report.tol_id, res.report.tol_hol);
    EXPECT_LE(std::abs(a.r_id - b.r_id), 1e-10);
    EXPECT_TRUE(b.id_passed);
}

TEST(Gleason, RegistryRules) {
    EXPECT_THROW(registry_function("bilinear", 1), InvalidSpec);
    EXPECT_THROW(registry_function("nope", 2), InvalidSpec);
    for (const auto& name : registry_names()) {
        const auto g = registry_function(name, 3);
        const std::array<cplx, 3> zero{};
        EXPECT_EQ(g(zero), cplx{}) << name;
    }
}
