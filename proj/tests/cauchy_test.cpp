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

#include <cmath>

#include "koszul/dbar.hpp"
#include "koszul/symbolic.hpp"

using namespace koszul;

namespace {

double interior_error(const GridField& a, const GridField& b, double rho = 0.9) { return interior_max(a - b, rho); }

}  // namespace

// On the unit disc T(1) = conj(z) and T(conj(z)) = conj(z)^2 / 2: the boundary
// term of Cauchy-Pompeiu vanishes for both.
TEST(Cauchy, ConstantMapsToConjugate) {
    double prev = 0.0;
    for (int M : {32, 64}) {
        const auto geo = make_geometry(PolydiscSpec::unit(1, M));
        const GridField t = cauchy_transform_fft(GridField(geo, 1.0));
        const double err = interior_error(t, sample(parse_poly("zb1", 1), geo));
        EXPECT_LT(err, 5e-3) << M;
        if (prev > 0) {
            EXPECT_LT(err, 0.5 * prev);
        }
        prev = err;
    }
}

TEST(Cauchy, ConjugateMapsToHalfSquare) {
    const auto geo = make_geometry(PolydiscSpec::unit(1, 64));
    const GridField t = cauchy_transform_fft(sample(parse_poly("zb1", 1), geo));
    EXPECT_LT(interior_error(t, sample(parse_poly("1/2 zb1^2", 1), geo)), 2e-3);
}

TEST(Cauchy, FftAgreesWithDirect) {
    const auto geo = make_geometry(PolydiscSpec::unit(1, 32));
    const GridField f = sample(parse_poly("z1^2 zb1 - (1+2i) zb1^3 + 1/2", 1), geo);
    const GridField a = cauchy_transform_direct(f), b = cauchy_transform_fft(f);
    EXPECT_LE(masked_max(a - b), 1e-9 * masked_max(a));
}

TEST(Cauchy, DbarInvertsTransform) {
    const auto geo = make_geometry(PolydiscSpec::unit(1, 48));
    const GridField f = sample(parse_poly("z1 zb1 + 2 zb1^2", 1), geo);
    const GridField u = cauchy_transform_fft(f);
    EXPECT_LT(interior_error(fd_dbar(u, 0), f, 0.8), 2e-2 * masked_max(f));
}

TEST(Cauchy, WorksAlongEitherAxis) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 16));
    const GridField one(geo, 1.0);
    for (int axis = 0; axis < 2; ++axis) {
        const GridField t = cauchy_transform(one, axis);
        EXPECT_LT(interior_error(t, coordinate_field(geo, axis).conj(), 0.8), 3e-2) << axis;
    }
    EXPECT_THROW(cauchy_transform(one, 2), DimensionMismatch);
}
