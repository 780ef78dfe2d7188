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

#include "koszul/exterior.hpp"
#include "koszul/symbolic.hpp"

using namespace koszul;

namespace {

using Form = KoszulForm<PolyExpr>;

PolyExpr P(const char* s, int n = 2) { return parse_poly(s, n); }

HolomorphicMap<PolyExpr> coords(int n) {
    HolomorphicMap<PolyExpr> f;
    for (int j = 0; j < n; ++j) f.components.push_back(PolyExpr::z(n, j));
    return f;
}

}  // namespace

TEST(Exterior, IndexLabels) {
    EXPECT_EQ(exterior_label(ExteriorIndex::of({0, 2})), "e1^e3");
    EXPECT_EQ(conj_label(ConjIndex::of({1})), "dzb2");
    EXPECT_EQ(conj_label(ConjIndex{}), "1");
}

TEST(Exterior, WedgeSigns) {
    // e1 (x) dzb2  ^  e2 (x) dzb1  =  (+1)(-1) e1^e2 (x) dzb1^dzb2
    Form a(2, 1, 1), b(2, 1, 1);
    a.add(ExteriorIndex::of({0}), ConjIndex::of({1}), P("1"));
    b.add(ExteriorIndex::of({1}), ConjIndex::of({0}), P("1"));
    const Form w = wedge(a, b);
    const PolyExpr* c = w.find(ExteriorIndex::of({0, 1}), ConjIndex::of({0, 1}));
    ASSERT_NE(c, nullptr);
    EXPECT_EQ(*c, P("-1"));
    EXPECT_TRUE(wedge(a, a).is_zero_form());
}

TEST(Exterior, TauContractsWithAlternatingSigns) {
    Form y(2, 2, 0);
    y.add(ExteriorIndex::of({0, 1}), ConjIndex{}, P("zb1"));
    const Form t = tau(coords(2), y);
    // tau(e1^e2) = z1 e2 - z2 e1
    EXPECT_EQ(*t.find(ExteriorIndex::of({1}), ConjIndex{}), P("z1 zb1"));
    EXPECT_EQ(*t.find(ExteriorIndex::of({0}), ConjIndex{}), P("-z2 zb1"));
    EXPECT_TRUE(tau(coords(2), t).is_zero_form());
}

TEST(Exterior, DbarSquaredVanishes) {
    Form a(3, 1, 1);
    a.add(ExteriorIndex::of({2}), ConjIndex::of({0}), parse_poly("z1 zb2^2 zb3 + zb1 zb3", 3));
    a.add(ExteriorIndex::of({0}), ConjIndex::of({2}), parse_poly("zb1^2 zb2", 3));
    EXPECT_FALSE(dbar_form(a).is_zero_form());
    EXPECT_TRUE(dbar_form(dbar_form(a)).is_zero_form());
}

TEST(Exterior, DescentWitnessIsExact) {
    // W = e1 (x) (-z2 dzb1) + e2 (x) (z1 dzb1) has Y = e1^e2 (x) zb1 with tau dbar Y = W
    Form w(2, 1, 1);
    w.add(ExteriorIndex::of({0}), ConjIndex::of({0}), P("-z2"));
    w.add(ExteriorIndex::of({1}), ConjIndex::of({0}), P("z1"));
    Form y(2, 2, 0);
    y.add(ExteriorIndex::of({0, 1}), ConjIndex{}, P("zb1"));
    const Form d = tau(coords(2), dbar_form(y)) - w;
    EXPECT_TRUE(d.is_zero_form());
    EXPECT_TRUE(tau(coords(2), w).is_zero_form());
    EXPECT_TRUE(dbar_form(w).is_zero_form());
}

TEST(Exterior, ShapeMismatchThrows) {
    Form a(2, 1, 0), b(2, 0, 1);
    EXPECT_THROW(a + b, DimensionMismatch);
    EXPECT_THROW(Form(0, 0, 0), DimensionMismatch);
}
