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

#include "koszul/dbar.hpp"
#include "koszul/symbolic.hpp"

using namespace koszul;

namespace {

GridForm sampled(const KoszulForm<PolyExpr>& exact, const GeometryPtr& geo) {
    GridForm out(exact.dim(), exact.exterior_degree(), exact.conj_degree());
    for (const auto& [key, p] : exact.components()) out.add(key.first, key.second, sample(p, geo));
    return out;
}

KoszulForm<PolyExpr> dbar_of(const char* potential, int n) {
    KoszulForm<PolyExpr> phi(n, 0, 0);
    phi.add(ExteriorIndex{}, ConjIndex{}, parse_poly(potential, n));
    return dbar_form(phi);
}

}  // namespace

TEST(Solver, ClosedOneFormResidualShrinks) {
    double prev = 0.0;
    for (int M : {16, 24}) {
        const auto geo = make_geometry(PolydiscSpec::unit(2, M));
        const GridForm beta = sampled(dbar_of("zb1 zb2", 2), geo);
        const auto sol = solve_dbar_polydisc({beta, 1e-8});
        EXPECT_LE(sol.residual, 5e-2 * sol.beta_max) << M;
        // the residual is recomputed here, not taken from the solver
        EXPECT_NEAR(form_interior_max(dbar_form(sol.u) - beta, 0.9), sol.residual, 1e-15);
        if (prev > 0) {
            EXPECT_LT(sol.residual, 0.5 * prev);
        }
        prev = sol.residual;
    }
}

TEST(Solver, TopDegreeForm) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 16));
    KoszulForm<PolyExpr> b(2, 0, 2);
    b.add(ExteriorIndex{}, ConjIndex::of({0, 1}), parse_poly("1", 2));
    const auto sol = solve_dbar_polydisc({sampled(b, geo), 0.0});
    EXPECT_EQ(sol.passes, 1);  // dzb1^dzb2 needs a single transform along axis 2
    EXPECT_LE(sol.residual, 5e-2 * sol.beta_max);
}

TEST(Solver, ThreeVariables) {
    const auto geo = make_geometry(PolydiscSpec::unit(3, 10));
    const auto sol = solve_dbar_polydisc({sampled(dbar_of("zb1 zb2 + zb3^2", 3), geo), 1e-8}, {CauchyMethod::fft, 0.8});
    EXPECT_LE(sol.residual, 0.1 * sol.beta_max);
}

TEST(Solver, RejectsNonClosedData) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 12));
    KoszulForm<PolyExpr> b(2, 0, 1);
    b.add(ExteriorIndex{}, ConjIndex::of({0}), parse_poly("zb2", 2));
    try {
        solve_dbar_polydisc({sampled(b, geo), 1e-6});
        FAIL() << "no throw";
    } catch (const GateFailure& e) {
        EXPECT_NEAR(e.measured(), 1.0, 1e-9);
    }
}

TEST(Solver, ZeroDataGivesZeroSolution) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 12));
    const auto sol = solve_dbar_polydisc({GridForm(2, 0, 1), 0.0});
    EXPECT_TRUE(sol.u.is_zero_form());
    EXPECT_EQ(sol.residual, 0.0);
}

TEST(Solver, RejectsBadShapes) {
    EXPECT_THROW(solve_dbar_polydisc({GridForm(2, 1, 1), 0.0}), DimensionMismatch);
    EXPECT_THROW(solve_dbar_polydisc({GridForm(2, 0, 0), 0.0}), DimensionMismatch);
}
