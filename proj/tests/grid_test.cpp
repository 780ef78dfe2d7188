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
#include <numbers>
#include <sstream>

#include "koszul/grid.hpp"
#include "koszul/symbolic.hpp"

using namespace koszul;

namespace {

bool in_piece(cplx w, double x0, double x1, double y0, double y1, double r) {
    return w.real() >= x0 && w.real() <= x1 && w.imag() >= y0 && w.imag() <= y1 && std::abs(w) <= r;
}

// Polar brute force around z: the piece is convex, so each ray meets it in
// one interval [t0, t1] and the kernel integral is -int exp(-i t) (t1 - t0) dt.
cplx polar_kernel(double x0, double x1, double y0, double y1, double r, cplx z) {
    const int rays = 20000, probes = 4000;
    const double reach = 4.0;
    cplx acc{};
    for (int k = 0; k < rays; ++k) {
        const double t = 2.0 * std::numbers::pi * (k + 0.5) / rays;
        const cplx dir = std::polar(1.0, t);
        auto inside = [&](double s) { return in_piece(z + s * dir, x0, x1, y0, y1, r); };
        double hit = -1.0;
        if (inside(0.0)) hit = 0.0;
        for (int p = 1; p <= probes && hit < 0; ++p)
            if (inside(reach * p / probes)) hit = reach * p / probes;
        if (hit < 0) continue;
        double t0 = 0.0, t1 = hit;
        if (hit > 0) {
            double lo = hit - reach / probes, hi = hit;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (inside(mid) ? hi : lo) = mid;
            }
            t0 = hi;
        }
        double lo = hit, hi = reach;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (inside(mid) ? lo : hi) = mid;
        }
        t1 = lo;
        acc -= std::conj(dir) * (t1 - t0);
    }
    return acc * (2.0 * std::numbers::pi / rays);
}

}  // namespace

TEST(Grid, ClippedAreaMatchesSubsampling) {
    const double r = 1.0;
    struct Box { double x0, x1, y0, y1; };
    for (const Box b : {Box{0.6, 0.8, 0.5, 0.7}, Box{0.9, 1.1, -0.1, 0.1}, Box{-0.2, 0.0, 0.95, 1.15}, Box{0.0, 0.1, 0.0, 0.1}}) {
        const int k = 2000;
        long hits = 0;
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                const cplx w(b.x0 + (i + 0.5) * (b.x1 - b.x0) / k, b.y0 + (j + 0.5) * (b.y1 - b.y0) / k);
                hits += std::abs(w) < r;
            }
        const double sampled = hits * (b.x1 - b.x0) * (b.y1 - b.y0) / (double(k) * k);
        EXPECT_NEAR(detail::disc_rect_area(b.x0, b.x1, b.y0, b.y1, r), sampled, 2e-5);
    }
}

TEST(Grid, KernelIntegralMatchesPolarOracle) {
    const double x0 = 0.55, x1 = 0.8, y0 = 0.5, y1 = 0.75, r = 1.0;
    for (const cplx z : {cplx(0.6, 0.6), cplx(0.7, 0.55), cplx(0.5, 0.5), cplx(0.3, 0.62)}) {
        const cplx got = detail::disc_rect_kernel(x0, x1, y0, y1, r, z);
        const cplx want = polar_kernel(x0, x1, y0, y1, r, z);
        EXPECT_LT(std::abs(got - want), 1e-5) << "z = " << z;
    }
}

TEST(Grid, DiscWeightsSumToArea) {
    for (int M : {16, 32, 64}) {
        const DiscGrid d({0.0, 0.0}, 1.0, M);
        double total = 0.0;
        for (double w : d.weights) total += w;
        EXPECT_NEAR(total, std::numbers::pi, 1e-9) << M;
    }
}

TEST(Grid, GeometryMaskAndCoordinates) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 8));
    EXPECT_EQ(geo->size(), 8u * 8u * 8u * 8u);
    std::size_t masked = 0;
    std::array<cplx, 2> z{};
    for (std::size_t i = 0; i < geo->size(); ++i) {
        if (!geo->masked(i)) continue;
        ++masked;
        geo->coordinates(i, z);
        EXPECT_LT(std::abs(z[0]), 1.0);
        EXPECT_LT(std::abs(z[1]), 1.0);
    }
    EXPECT_GT(masked, 0u);
    EXPECT_THROW(PolydiscSpec::unit(2, 2).validate(), InvalidSpec);
}

TEST(Grid, FourthOrderDbarIsExactOnLowDegree) {
    const auto geo = make_geometry(PolydiscSpec::unit(2, 16));
    const PolyExpr p = parse_poly("z1 zb1^2 zb2 + 3 zb2^3 - z2", 2);
    for (int axis = 0; axis < 2; ++axis) {
        const GridField got = fd_dbar(sample(p, geo), axis);
        const GridField want = sample(dbar(p, axis), geo);
        EXPECT_LT(masked_max(got - want), 1e-10) << axis;
    }
    // z is holomorphic: every stencil sees zero
    EXPECT_LT(masked_max(fd_dbar(coordinate_field(geo, 0), 0, FdOrder::second)), 1e-12);
}

TEST(Grid, NormsAndCsvRoundTrip) {
    const auto geo = make_geometry(PolydiscSpec::unit(1, 16));
    const GridField f = sample(parse_poly("z1 + 2 zb1", 1), geo);
    EXPECT_LE(interior_max(f, 0.5), 1.5 + 1e-12);
    EXPECT_GT(l2_norm(f), 0.0);
    std::stringstream ss;
    write_fields_csv(ss, {{"f", &f}});
    const auto back = read_fields_csv(ss, geo);
    ASSERT_EQ(back.count("f"), 1u);
    EXPECT_EQ(masked_max(back.at("f") - f), 0.0);
}
