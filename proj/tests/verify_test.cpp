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

#include <cstdlib>

#include "koszul/registry.hpp"
#include "koszul/verify.hpp"

using namespace koszul;

namespace {

struct ThreadsEnv {
    explicit ThreadsEnv(const char* v) { setenv("KOSZUL_THREADS", v, 1); }
    ~ThreadsEnv() { unsetenv("KOSZUL_THREADS"); }
};

}  // namespace

TEST(Verify, LawSuiteIsClean) {
    const auto r = run_law_suite(1, 200);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.checked.at("tau tau = 0"), 200);
}

TEST(Verify, LawSuiteCatchesInjectedSignError) {
    LawSuiteOptions o;
    o.inject_sign_error = true;
    const auto r = run_law_suite(1, 50, o);
    ASSERT_FALSE(r.passed());
    for (const auto& v : r.violations) EXPECT_EQ(v.law, "anti-derivation");
    EXPECT_TRUE(r.violations.front().instance.contains("defect"));
}

TEST(Verify, LawSuiteIndependentOfThreadCount) {
    json a, b;
    {
        ThreadsEnv t("1");
        a = law_suite_json(run_law_suite(9, 40, {.inject_sign_error = true}));
    }
    {
        ThreadsEnv t("4");
        b = law_suite_json(run_law_suite(9, 40, {.inject_sign_error = true}));
    }
    EXPECT_EQ(a.dump(), b.dump());
}

TEST(Verify, EmptySuiteIsVacuous) {
    const auto r = run_law_suite(1, 0);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(law_suite_json(r)["trials"], 0);
    EXPECT_THROW(run_law_suite(1, -1), InvalidSpec);
}

TEST(Verify, RatioFloorMarker) {
    EXPECT_FALSE(residual_ratio(1e-16, 2e-16, 1.0).has_value());
    EXPECT_NEAR(*residual_ratio(1e-3, 2.5e-4, 1.0), 0.25, 1e-15);
    EXPECT_EQ(ratio_json(std::nullopt), "at-floor");
    EXPECT_TRUE(number_json(std::nan("")).is_null());
}

TEST(Verify, DetectsWrongDecomposition) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 12));
    const auto g = registry_function("bilinear", 2);
    // g = z1 z2 + z2^2 = z1 * z2 + z2 * z2, but swap the parts
    const GridField z1 = coordinate_field(geo, 0), z2 = coordinate_field(geo, 1);
    const auto good = verify_decomposition(g, {z2, z2}, geo, 0.9, 1e-10, 1.0);
    const auto bad = verify_decomposition(g, {z2, z1}, geo, 0.9, 1e-10, 1.0);
    EXPECT_TRUE(good.passed());
    EXPECT_LT(good.r_id, 1e-14);
    EXPECT_FALSE(bad.passed());
    EXPECT_THROW(verify_decomposition(g, {z1}, geo, 0.9, 1, 1), DimensionMismatch);
}

TEST(Verify, ReportSchema) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 12));
    const auto g = registry_function("z1", 2);
    const auto res = gleason_decompose(g, geo, CutoffSpec{{0.0, 0.0}, 0.2, 0.4});
    const json j = report_json(res.report);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"grid", "residuals", "norms", "gates", "order_estimates"}));
    EXPECT_EQ(j["residuals"]["R_hol"].size(), 2u);
    EXPECT_TRUE(j["gates"]["passed"].get<bool>());
}

TEST(Verify, ConvergenceStudyRecordsLevels) {
    const auto g = registry_function("z1", 2);
    const CutoffSpec c{{0.0, 0.0}, 0.2, 0.4};
    EXPECT_THROW(convergence_study(g, PolydiscSpec::unit(2, 12), {12}, c), InvalidSpec);
    EXPECT_THROW(convergence_study(g, PolydiscSpec::unit(2, 12), {16, 12}, c), InvalidSpec);
    const auto s = convergence_study(g, PolydiscSpec::unit(2, 12), {2, 12, 16}, c);
    ASSERT_EQ(s.rows.size(), 3u);
    EXPECT_FALSE(s.rows[0].ok);
    EXPECT_FALSE(s.rows[0].error.empty());
    EXPECT_TRUE(s.rows[2].ok);
    EXPECT_FALSE(s.id_ratio[1].has_value());  // both at round-off
    EXPECT_FALSE(s.id_ratios_met());          // a failed level is not a pass
}
