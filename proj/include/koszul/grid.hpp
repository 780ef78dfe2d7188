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

// Polydisc discretization. Each complex variable z_k gets an M x M Cartesian
// grid on the bounding square of its disc:
//
//   x_i = Re c_k - R_k + i h,  y_j = Im c_k - R_k + j h,  h = 2 R_k / M,
//
// so the disc center is the node (M/2, M/2) and the masked nodes (strictly
// inside the open disc) are symmetric about it. A field over the polydisc
// stores one complex value per node of the M^(2n) tensor grid; variable 0 is
// the slowest-varying index.

#ifndef KOSZUL_GRID_HPP
#define KOSZUL_GRID_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "koszul/errors.hpp"
#include "koszul/parallel.hpp"
#include "koszul/symbolic.hpp"

namespace koszul {

using cplx = std::complex<double>;

struct PolydiscSpec {
    int n = 2;
    std::vector<cplx> centers;
    std::vector<double> radii;
    int M = 16;
    double shrink = 0.9;

    static PolydiscSpec unit(int n, int M, double shrink = 0.9) {
        PolydiscSpec s;
        s.n = n;
        s.centers.assign(static_cast<std::size_t>(n), cplx{});
        s.radii.assign(static_cast<std::size_t>(n), 1.0);
        s.M = M;
        s.shrink = shrink;
        return s;
    }

    void validate() const {
        if (n < 1 || n > kMaxPolyVars) throw InvalidSpec("polydisc dimension must be 1..3");
        if (static_cast<int>(centers.size()) != n || static_cast<int>(radii.size()) != n)
            throw InvalidSpec("need exactly n centers and n radii");
        for (double r : radii)
            if (!(r > 0) || !std::isfinite(r)) throw InvalidSpec("radii must be positive");
        for (const auto& c : centers)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw InvalidSpec("centers must be finite");
        if (M < 8 || M % 2 != 0) throw InvalidSpec("M must be even and at least 8");
        if (!(shrink > 0 && shrink < 1)) throw InvalidSpec("shrink factor must lie in (0,1)");
    }

    double step(int axis) const { return 2.0 * radii[static_cast<std::size_t>(axis)] / M; }

    double min_radius() const { return *std::min_element(radii.begin(), radii.end()); }

    friend bool operator==(const PolydiscSpec&, const PolydiscSpec&) = default;
};

namespace detail {

struct PieceMoments {
    double area = 0.0;
    double mx = 0.0;  // integral of x
    double my = 0.0;  // integral of y
};

/// Area and first moments of [x0,x1] x [y0,y1] intersected with the disc of
/// radius r centered at the origin, in closed form.
inline PieceMoments disc_rect_moments(double x0, double x1, double y0, double y1, double r) {
    PieceMoments out;
    x0 = std::max(x0, -r);
    x1 = std::min(x1, r);
    if (x0 >= x1 || y0 >= y1) return out;
    auto half = [r](double x) { return std::sqrt(std::max(0.0, r * r - x * x)); };
    // antiderivatives of half(x), x half(x) and half(x)^2
    auto prim = [r](double x) {
        const double t = std::clamp(x / r, -1.0, 1.0);
        return 0.5 * (x * std::sqrt(std::max(0.0, r * r - x * x)) + r * r * std::asin(t));
    };
    auto prim_x = [r](double x) { return -std::pow(std::max(0.0, r * r - x * x), 1.5) / 3.0; };
    auto prim_sq = [r](double x) { return r * r * x - x * x * x / 3.0; };
    std::vector<double> cuts{x0, x1};
    for (double y : {y0, y1}) {
        if (std::abs(y) < r) {
            const double b = std::sqrt(r * r - y * y);
            for (double c : {-b, b})
                if (c > x0 && c < x1) cuts.push_back(c);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k], b = cuts[k + 1];
        if (b <= a) continue;
        const double s = half(0.5 * (a + b));
        const bool top_curve = s < y1;
        const bool bottom_curve = -s > y0;
        if ((top_curve ? s : y1) <= (bottom_curve ? -s : y0)) continue;
        const double len = b - a;
        const double curve = prim(b) - prim(a);
        const double curve_x = prim_x(b) - prim_x(a);
        const double curve_sq = prim_sq(b) - prim_sq(a);
        const double lin_x = 0.5 * (b * b - a * a);
        // top - bottom, x (top - bottom), (top^2 - bottom^2) / 2
        out.area += (top_curve ? curve : y1 * len) - (bottom_curve ? -curve : y0 * len);
        out.mx += (top_curve ? curve_x : y1 * lin_x) - (bottom_curve ? -curve_x : y0 * lin_x);
        out.my += 0.5 * ((top_curve ? curve_sq : y1 * y1 * len) - (bottom_curve ? curve_sq : y0 * y0 * len));
    }
    return out;
}

inline double disc_rect_area(double x0, double x1, double y0, double y1, double r) {
    return disc_rect_moments(x0, x1, y0, y1, r).area;
}

/// Adaptive Gauss-Legendre integral of a bounded complex function on [a, b],
/// bisecting until halving changes the result by less than `tol`.
template <class F>
cplx adaptive_gauss(const F& f, double a, double b, double tol, int depth = 40) {
    using rule = boost::math::quadrature::gauss<double, 20>;
    auto once = [&](double lo, double hi) {
        const double c = 0.5 * (lo + hi), s = 0.5 * (hi - lo);
        const auto& x = rule::abscissa();
        const auto& w = rule::weights();
        cplx acc{};
        for (std::size_t k = 0; k < x.size(); ++k) acc += w[k] * (f(c - s * x[k]) + f(c + s * x[k]));
        return acc * s;
    };
    auto rec = [&](auto&& self, double lo, double hi, cplx whole, int left) -> cplx {
        const double mid = 0.5 * (lo + hi);
        const cplx l = once(lo, mid), r = once(mid, hi);
        if (left == 0 || std::abs(l + r - whole) <= tol) return l + r;
        return self(self, lo, mid, l, left - 1) + self(self, mid, hi, r, left - 1);
    };
    return rec(rec, a, b, once(a, b), depth);
}

/// Integrates g(w) dw counterclockwise around the boundary of
/// [x0,x1] x [y0,y1] intersected with the disc of radius r at the origin.
template <class G>
cplx disc_rect_loop(double x0, double x1, double y0, double y1, double r, const G& g) {
    const double tol = 1e-15 * std::max(x1 - x0, y1 - y0);
    auto integrate = [&](auto&& path, double a, double b) {
        // path(t) -> (w, dw/dt)
        auto fn = [&](double t) {
            const auto [w, dw] = path(t);
            return g(w) * dw;
        };
        return adaptive_gauss(fn, a, b, tol);
    };
    cplx loop{};
    const std::array<cplx, 5> corner{cplx(x0, y0), cplx(x1, y0), cplx(x1, y1), cplx(x0, y1), cplx(x0, y0)};
    for (int e = 0; e < 4; ++e) {
        const cplx a = corner[static_cast<std::size_t>(e)], d = corner[static_cast<std::size_t>(e) + 1] - a;
        // |a + t d|^2 < r^2 on an interval of t
        const double qa = std::norm(d), qb = 2.0 * (a.real() * d.real() + a.imag() * d.imag()), qc = std::norm(a) - r * r;
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc <= 0.0) continue;
        const double s = std::sqrt(disc);
        const double t0 = std::max(0.0, (-qb - s) / (2.0 * qa)), t1 = std::min(1.0, (-qb + s) / (2.0 * qa));
        if (t1 <= t0) continue;
        loop += integrate([&](double t) { return std::pair<cplx, cplx>{a + t * d, d}; }, t0, t1);
    }
    // arcs of the circle that lie in the rectangle
    std::vector<double> cuts{0.0, 2.0 * std::numbers::pi};
    auto add = [&](double th) {
        th = std::fmod(th, 2.0 * std::numbers::pi);
        if (th < 0) th += 2.0 * std::numbers::pi;
        cuts.push_back(th);
    };
    for (double x : {x0, x1})
        if (std::abs(x) < r) {
            add(std::acos(x / r));
            add(-std::acos(x / r));
        }
    for (double y : {y0, y1})
        if (std::abs(y) < r) {
            add(std::asin(y / r));
            add(std::numbers::pi - std::asin(y / r));
        }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k], b = cuts[k + 1];
        if (b - a <= 1e-15) continue;
        const double m = 0.5 * (a + b);
        const double px = r * std::cos(m), py = r * std::sin(m);
        if (px <= x0 || px >= x1 || py <= y0 || py >= y1) continue;
        loop += integrate(
            [&](double t) {
                const cplx w = std::polar(r, t);
                return std::pair<cplx, cplx>{w, cplx(0, 1) * w};
            },
            a, b);
    }
    return loop;
}

/// Integral of 1/(z - w) dA(w) over the rectangle-disc piece. Since
/// 1/(w - z) is the w-bar derivative of the bounded conj(w - z)/(w - z),
/// Green's theorem turns it into a loop integral, and z may sit inside.
inline cplx disc_rect_kernel(double x0, double x1, double y0, double y1, double r, cplx z) {
    const cplx loop = disc_rect_loop(x0, x1, y0, y1, r, [z](cplx w) {
        const cplx d = w - z;
        return d == cplx{} ? cplx{} : std::conj(d) / d;
    });
    return -loop / cplx(0.0, 2.0);
}

/// Integral of (w - c)^k dA(w) over the rectangle-disc piece.
inline cplx disc_rect_moment(double x0, double x1, double y0, double y1, double r, cplx c, int k) {
    const cplx loop = disc_rect_loop(x0, x1, y0, y1, r, [c, k](cplx w) { return std::conj(w - c) * std::pow(w - c, k); });
    return loop / cplx(0.0, 2.0);
}

}  // namespace detail

/// Grid data for one complex variable: node coordinates, disc mask, masked
/// runs along rows/columns, and quadrature weights.
struct DiscGrid {
    cplx center;
    double radius = 1.0;
    int M = 0;
    double h = 0.0;
    std::vector<double> x, y;
    std::vector<std::uint8_t> mask;               // ix * M + iy
    std::vector<double> weights;                  // ix * M + iy
    std::vector<std::pair<int, int>> row_span;    // per iy: masked ix in [first, second]
    std::vector<std::pair<int, int>> col_span;    // per ix: masked iy in [first, second]

    DiscGrid() = default;

    DiscGrid(cplx c, double r, int m) : center(c), radius(r), M(m), h(2.0 * r / m) {
        x.resize(static_cast<std::size_t>(M));
        y.resize(static_cast<std::size_t>(M));
        for (int i = 0; i < M; ++i) {
            x[static_cast<std::size_t>(i)] = c.real() - r + i * h;
            y[static_cast<std::size_t>(i)] = c.imag() - r + i * h;
        }
        mask.assign(static_cast<std::size_t>(M * M), 0);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) mask[idx(i, j)] = std::abs(offset(i, j)) < r ? 1 : 0;
        row_span.assign(static_cast<std::size_t>(M), {0, -1});
        col_span.assign(static_cast<std::size_t>(M), {0, -1});
        for (int j = 0; j < M; ++j) {
            int first = M, last = -1;
            for (int i = 0; i < M; ++i)
                if (mask[idx(i, j)]) {
                    first = std::min(first, i);
                    last = std::max(last, i);
                }
            if (last >= 0) row_span[static_cast<std::size_t>(j)] = {first, last};
        }
        for (int i = 0; i < M; ++i) {
            int first = M, last = -1;
            for (int j = 0; j < M; ++j)
                if (mask[idx(i, j)]) {
                    first = std::min(first, j);
                    last = std::max(last, j);
                }
            if (last >= 0) col_span[static_cast<std::size_t>(i)] = {first, last};
        }
        build_weights();
    }

    std::size_t idx(int ix, int iy) const { return static_cast<std::size_t>(ix) * M + iy; }
    bool masked(int ix, int iy) const { return mask[idx(ix, iy)] != 0; }
    /// Node position relative to the disc center.
    cplx offset(int ix, int iy) const { return {(ix - M / 2) * h, (iy - M / 2) * h}; }
    cplx node(int ix, int iy) const {
        return {x[static_cast<std::size_t>(ix)], y[static_cast<std::size_t>(iy)]};
    }

    /// Near-field term: u[target] gains coeff * f[source] / pi on top of the
    /// discrete convolution.
    struct NearTerm {
        int target;
        int source;
        cplx coeff;
    };
    std::vector<NearTerm> near;

    /// Radius, in cells, inside which pieces are integrated exactly.
    static constexpr double kNearCells = 4.0;
    /// Radius, relative to the disc radius, out to which boundary pieces are
    /// corrected by their multipole expansion. Past it the nearest-node rule
    /// stands, and its dipole error sets the O(h^2) far field.
    static constexpr double kFarReach = 0.5;

private:
    struct Piece {
        int i, j;    // cell index, may be -1 or M
        int owner;   // masked node carrying the area
        double area;
    };

    // Each node owns its cell [x-h/2, x+h/2] x [y-h/2, y+h/2] clipped to the
    // disc. Masked nodes keep their clipped area; the cells of unmasked (or
    // virtual, just past the grid) nodes hand theirs to the nearest masked node.
    void build_weights() {
        weights.assign(static_cast<std::size_t>(M * M), 0.0);
        std::vector<Piece> pieces;  // (i + 1) * (M + 2) + (j + 1)
        pieces.reserve(static_cast<std::size_t>(M + 2) * (M + 2));
        for (int i = -1; i <= M; ++i) {
            for (int j = -1; j <= M; ++j) {
                const double cx = (i - M / 2) * h, cy = (j - M / 2) * h;
                const double area = detail::disc_rect_area(cx - h / 2, cx + h / 2, cy - h / 2, cy + h / 2, radius);
                int owner = -1;
                if (area > 0.0) {
                    owner = inside(i, j) ? static_cast<int>(idx(i, j)) : nearest_masked(i, j);
                    weights[static_cast<std::size_t>(owner)] += area;
                }
                pieces.push_back({i, j, owner, area});
            }
        }
        build_near(pieces);
    }

    bool inside(int i, int j) const { return i >= 0 && j >= 0 && i < M && j < M && masked(i, j); }

    int nearest_masked(int i, int j) const {
        int best = -1;
        double best_d = 0, best_c = 0;
        for (int reach = 1; reach <= 3 && best < 0; ++reach) {
            for (int di = -reach; di <= reach; ++di) {
                for (int dj = -reach; dj <= reach; ++dj) {
                    const int p = i + di, q = j + dj;
                    if (!inside(p, q)) continue;
                    const double d = std::hypot(double(di), double(dj));
                    const double c = std::abs(offset(p, q));
                    if (best < 0 || d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && c < best_c - 1e-12)) {
                        best = static_cast<int>(idx(p, q));
                        best_d = d;
                        best_c = c;
                    }
                }
            }
        }
        if (best < 0) throw InvalidSpec("grid too coarse to resolve the disc boundary");
        return best;
    }

    // Boundary pieces (clipped cells and cells handed to a neighbour) swap the
    // midpoint kernel for their exact integral within kNearCells, and for a
    // multipole expansion out to kFarReach. Targets that see a boundary piece
    // within kNearCells also get exact integrals for the full cells there;
    // elsewhere full cells form complete rings whose errors cancel.
    void build_near(const std::vector<Piece>& pieces) {
        const double full = h * h * (1.0 - 1e-12);
        const double close = kNearCells * h;
        const double reach = kFarReach * radius;
        struct Far {
            const Piece* piece;
            cplx centroid;
            std::array<cplx, 5> moments;  // integral of (w - centroid)^k, k = 0..4
        };
        std::vector<Far> edge;
        for (const auto& p : pieces) {
            if (p.area <= 0.0 || (p.area >= full && p.owner == static_cast<int>(idx(p.i, p.j)))) continue;
            const double cx = (p.i - M / 2) * h, cy = (p.j - M / 2) * h;
            Far f{&p, {}, {}};
            const cplx first = detail::disc_rect_moment(cx - h / 2, cx + h / 2, cy - h / 2, cy + h / 2, radius, cplx{}, 1);
            f.centroid = first / p.area;
            for (int k = 0; k < 5; ++k)
                f.moments[static_cast<std::size_t>(k)] =
                    detail::disc_rect_moment(cx - h / 2, cx + h / 2, cy - h / 2, cy + h / 2, radius, f.centroid, k);
            edge.push_back(f);
        }
        std::map<std::pair<int, int>, cplx> acc;
        auto add = [&](int t, cplx zt, const Piece& p, cplx exact) {
            const cplx mid = p.owner == t ? cplx{} : p.area / (zt - offset(p.owner / M, p.owner % M));
            acc[{t, p.owner}] += exact - mid;
        };
        const int k = static_cast<int>(kNearCells);
        for (int tx = 0; tx < M; ++tx) {
            for (int ty = 0; ty < M; ++ty) {
                if (!masked(tx, ty)) continue;
                const cplx zt = offset(tx, ty);
                if (radius - std::abs(zt) > reach + h) continue;
                const int t = static_cast<int>(idx(tx, ty));
                bool rim = false;
                for (const auto& f : edge)
                    if (std::abs(cplx((f.piece->i - M / 2) * h, (f.piece->j - M / 2) * h) - zt) <= close) rim = true;
                for (const auto& f : edge) {
                    const Piece& p = *f.piece;
                    const double cx = (p.i - M / 2) * h, cy = (p.j - M / 2) * h;
                    const double d = std::abs(cplx(cx, cy) - zt);
                    if (d <= close || d > reach) continue;
                    const cplx q = 1.0 / (zt - f.centroid);
                    cplx exact{}, qk = q;
                    for (const cplx& m : f.moments) {
                        exact += m * qk;
                        qk *= q;
                    }
                    add(t, zt, p, exact);
                }
                if (!rim) continue;
                for (int pi = std::max(-1, tx - k); pi <= std::min(M, tx + k); ++pi)
                for (int pj = std::max(-1, ty - k); pj <= std::min(M, ty + k); ++pj) {
                    const auto& p = pieces[static_cast<std::size_t>(pi + 1) * (M + 2) + static_cast<std::size_t>(pj + 1)];
                    if (p.area <= 0.0) continue;
                    const double cx = (p.i - M / 2) * h, cy = (p.j - M / 2) * h;
                    if (std::abs(cplx(cx, cy) - zt) > close) continue;
                    add(t, zt, p,
                        detail::disc_rect_kernel(cx - h / 2, cx + h / 2, cy - h / 2, cy + h / 2, radius, zt));
                }
            }
        }
        near.clear();
        near.reserve(acc.size());
        for (const auto& [key, c] : acc) near.push_back({key.first, key.second, c});
    }
};

class GridGeometry {
public:
    explicit GridGeometry(PolydiscSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        const int n = spec_.n, M = spec_.M;
        for (int k = 0; k < n; ++k)
            discs_.emplace_back(spec_.centers[static_cast<std::size_t>(k)], spec_.radii[static_cast<std::size_t>(k)], M);
        size_ = 1;
        for (int k = 0; k < 2 * n; ++k) size_ *= static_cast<std::size_t>(M);
        strides_.assign(static_cast<std::size_t>(n), 1);
        for (int k = n - 2; k >= 0; --k)
            strides_[static_cast<std::size_t>(k)] =
                strides_[static_cast<std::size_t>(k + 1)] * static_cast<std::size_t>(M) * M;
        mask_.assign(size_, 0);
        for (std::size_t i = 0; i < size_; ++i) {
            bool in = true;
            for (int k = 0; k < n && in; ++k) in = discs_[static_cast<std::size_t>(k)].masked(ix(i, k), iy(i, k));
            mask_[i] = in ? 1 : 0;
        }
    }

    const PolydiscSpec& spec() const noexcept { return spec_; }
    int n() const noexcept { return spec_.n; }
    int M() const noexcept { return spec_.M; }
    std::size_t size() const noexcept { return size_; }
    const DiscGrid& disc(int axis) const { return discs_.at(static_cast<std::size_t>(axis)); }

    /// Index stride of iy for variable `axis`; ix has stride M times larger.
    std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }
    int ix(std::size_t node, int axis) const {
        return static_cast<int>((node / (stride(axis) * static_cast<std::size_t>(spec_.M))) % static_cast<std::size_t>(spec_.M));
    }
    int iy(std::size_t node, int axis) const {
        return static_cast<int>((node / stride(axis)) % static_cast<std::size_t>(spec_.M));
    }

    cplx coordinate(std::size_t node, int axis) const { return disc(axis).node(ix(node, axis), iy(node, axis)); }

    void coordinates(std::size_t node, std::span<cplx> out) const {
        for (int k = 0; k < n(); ++k) out[static_cast<std::size_t>(k)] = coordinate(node, k);
    }

    bool masked(std::size_t node) const { return mask_[node] != 0; }

    /// Masked and within shrink * radius of the center in every variable.
    bool interior(std::size_t node, double rho) const {
        if (!masked(node)) return false;
        for (int k = 0; k < n(); ++k) {
            const auto& d = disc(k);
            if (std::abs(d.offset(ix(node, k), iy(node, k))) > rho * d.radius * (1 + 1e-12)) return false;
        }
        return true;
    }

    /// Product of the per-variable cell areas h_k^2.
    double cell_volume() const {
        double v = 1.0;
        for (const auto& d : discs_) v *= d.h * d.h;
        return v;
    }

private:
    PolydiscSpec spec_;
    std::vector<DiscGrid> discs_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
    std::vector<std::uint8_t> mask_;
};

using GeometryPtr = std::shared_ptr<const GridGeometry>;

inline GeometryPtr make_geometry(const PolydiscSpec& spec) { return std::make_shared<const GridGeometry>(spec); }

/// Complex field sampled on a polydisc grid. Values at unmasked nodes are
/// kept but every reduction and stencil ignores them.
class GridField {
public:
    GridField() = default;
    explicit GridField(GeometryPtr geo, cplx fill = {}) : geo_(std::move(geo)), values_(geo_->size(), fill) {}
    GridField(GeometryPtr geo, std::vector<cplx> values) : geo_(std::move(geo)), values_(std::move(values)) {
        if (values_.size() != geo_->size()) throw DimensionMismatch("field size does not match grid");
    }

    const GeometryPtr& geometry() const noexcept { return geo_; }
    const GridGeometry& grid() const { return *geo_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const cplx> values() const noexcept { return values_; }
    std::span<cplx> values() noexcept { return values_; }
    cplx operator[](std::size_t i) const { return values_[i]; }
    cplx& operator[](std::size_t i) { return values_[i]; }

    template <class Fn>
    GridField pointwise(Fn&& fn) const {
        GridField out(geo_);
        for (std::size_t i = 0; i < values_.size(); ++i) out.values_[i] = fn(values_[i]);
        return out;
    }

    template <class Fn>
    friend GridField combine(const GridField& a, const GridField& b, Fn&& fn) {
        check_compatible(a, b);
        GridField out(a.geo_);
        for (std::size_t i = 0; i < a.values_.size(); ++i) out.values_[i] = fn(a.values_[i], b.values_[i]);
        return out;
    }

    friend GridField operator+(const GridField& a, const GridField& b) {
        return combine(a, b, [](cplx u, cplx v) { return u + v; });
    }
    friend GridField operator-(const GridField& a, const GridField& b) {
        return combine(a, b, [](cplx u, cplx v) { return u - v; });
    }
    friend GridField operator*(const GridField& a, const GridField& b) {
        return combine(a, b, [](cplx u, cplx v) { return u * v; });
    }
    friend GridField operator-(const GridField& a) {
        return a.pointwise([](cplx u) { return -u; });
    }
    GridField& operator+=(const GridField& b) {
        check_compatible(*this, b);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += b.values_[i];
        return *this;
    }
    GridField& operator-=(const GridField& b) {
        check_compatible(*this, b);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= b.values_[i];
        return *this;
    }
    friend GridField operator*(cplx c, const GridField& a) {
        return a.pointwise([c](cplx u) { return c * u; });
    }
    GridField conj() const {
        return pointwise([](cplx u) { return std::conj(u); });
    }

    friend bool is_zero(const GridField& f) {
        return std::all_of(f.values_.begin(), f.values_.end(), [](cplx v) { return v == cplx{}; });
    }

    static void check_compatible(const GridField& a, const GridField& b) {
        if (a.geo_ != b.geo_ && (!a.geo_ || !b.geo_ || !(a.geo_->spec() == b.geo_->spec())))
            throw DimensionMismatch("fields live on different grids");
    }

private:
    GeometryPtr geo_;
    std::vector<cplx> values_;
};

using Evaluator = std::function<cplx(std::span<const cplx>)>;

/// Samples fn at every node. Non-finite values are an error on masked nodes
/// and are replaced by zero elsewhere.
inline GridField sample(const Evaluator& fn, const GeometryPtr& geo) {
    GridField out(geo);
    const int n = geo->n();
    auto values = out.values();
    parallel_chunks(geo->size(), [&](std::size_t begin, std::size_t end, int) {
        std::array<cplx, kMaxPolyVars> z{};
        for (std::size_t i = begin; i < end; ++i) {
            geo->coordinates(i, std::span<cplx>(z.data(), static_cast<std::size_t>(n)));
            const cplx v = fn(std::span<const cplx>(z.data(), static_cast<std::size_t>(n)));
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
                if (geo->masked(i)) throw Error("sample: non-finite value at a masked node");
                values[i] = {};
            } else {
                values[i] = v;
            }
        }
    });
    return out;
}

inline GridField sample(const PolyExpr& p, const GeometryPtr& geo) {
    if (p.dim() != geo->n()) throw DimensionMismatch("polynomial and grid dimensions differ");
    CompiledPoly compiled(p);
    return sample([&](std::span<const cplx> z) { return compiled(z); }, geo);
}

/// z_{axis+1} - shift sampled on the grid.
inline GridField coordinate_field(const GeometryPtr& geo, int axis, cplx shift = {}) {
    GridField out(geo);
    for (std::size_t i = 0; i < geo->size(); ++i) out[i] = geo->coordinate(i, axis) - shift;
    return out;
}

enum class FdOrder { second, fourth };

namespace detail {

/// Weights of the first derivative at x0 from nodes xs (derivative of the
/// Lagrange interpolant).
inline std::vector<double> first_derivative_weights(double x0, std::span<const double> xs) {
    const std::size_t n = xs.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < n; ++m) {
            if (m == i) continue;
            double term = 1.0 / (xs[i] - xs[m]);
            for (std::size_t l = 0; l < n; ++l) {
                if (l == i || l == m) continue;
                term *= (x0 - xs[l]) / (xs[i] - xs[l]);
            }
            w[i] += term;
        }
    }
    return w;
}

/// Unit-spacing stencils: table[len][pos] = weights using `len` consecutive
/// nodes with the evaluation node at offset `pos` in the run.
struct StencilTable {
    std::array<std::array<std::vector<double>, 5>, 6> w;

    StencilTable() {
        for (int len = 2; len <= 5; ++len) {
            std::vector<double> xs(static_cast<std::size_t>(len));
            for (int i = 0; i < len; ++i) xs[static_cast<std::size_t>(i)] = i;
            for (int pos = 0; pos < len; ++pos)
                w[static_cast<std::size_t>(len)][static_cast<std::size_t>(pos)] = first_derivative_weights(pos, xs);
        }
    }

    static const StencilTable& get() {
        static const StencilTable table;
        return table;
    }
};

/// Derivative along one real direction at node `pos` of a masked run
/// [first, last]. `at(i)` returns the field at run coordinate i.
template <class At>
cplx run_derivative(int pos, int first, int last, double h, FdOrder order, At&& at) {
    const int width = order == FdOrder::fourth ? 5 : 3;
    const int len = last - first + 1;
    if (len < 2) return {};
    const int use = std::min(width, len);
    const int half = use / 2;
    const int start = std::clamp(pos - half, first, last - use + 1);
    const auto& weights = StencilTable::get().w[static_cast<std::size_t>(use)][static_cast<std::size_t>(pos - start)];
    cplx acc{};
    for (int k = 0; k < use; ++k) acc += weights[static_cast<std::size_t>(k)] * at(start + k);
    return acc / h;
}

}  // namespace detail

/// Wirtinger derivative d/dzbar_{axis+1} = (d/dx + i d/dy) / 2 with
/// mask-aware finite differences: centered where the masked run allows it,
/// one-sided stencils of the same width near the disc edge. Unmasked nodes
/// get zero.
inline GridField fd_dbar(const GridField& f, int axis, FdOrder order = FdOrder::fourth) {
    const auto& geo = f.grid();
    if (axis < 0 || axis >= geo.n()) throw DimensionMismatch("fd_dbar: axis out of range");
    const auto& disc = geo.disc(axis);
    const std::size_t sy = geo.stride(axis);
    const std::size_t sx = sy * static_cast<std::size_t>(geo.M());
    GridField out(f.geometry());
    auto src = f.values();
    auto dst = out.values();
    parallel_chunks(geo.size(), [&](std::size_t begin, std::size_t end, int) {
        for (std::size_t i = begin; i < end; ++i) {
            if (!geo.masked(i)) continue;
            const int ix = geo.ix(i, axis), iy = geo.iy(i, axis);
            const std::size_t base = i - static_cast<std::size_t>(ix) * sx - static_cast<std::size_t>(iy) * sy;
            const auto [rx0, rx1] = disc.row_span[static_cast<std::size_t>(iy)];
            const auto [cy0, cy1] = disc.col_span[static_cast<std::size_t>(ix)];
            const cplx dx = detail::run_derivative(ix, rx0, rx1, disc.h, order, [&](int p) {
                return src[base + static_cast<std::size_t>(p) * sx + static_cast<std::size_t>(iy) * sy];
            });
            const cplx dy = detail::run_derivative(iy, cy0, cy1, disc.h, order, [&](int q) {
                return src[base + static_cast<std::size_t>(ix) * sx + static_cast<std::size_t>(q) * sy];
            });
            dst[i] = 0.5 * (dx + cplx(0, 1) * dy);
        }
    });
    return out;
}

inline GridField dbar(const GridField& f, int axis) { return fd_dbar(f, axis); }

/// max |f| over masked nodes within rho * radius of the center in every
/// variable.
inline double interior_max(const GridField& f, double rho) {
    if (!(rho > 0 && rho <= 1)) throw InvalidSpec("interior_max: rho must lie in (0,1]");
    const auto& geo = f.grid();
    double best = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < geo.size(); ++i) {
        if (!geo.interior(i, rho)) continue;
        any = true;
        best = std::max(best, std::abs(f[i]));
    }
    if (!any) throw InvalidSpec("interior_max: no grid node inside the shrunken region");
    return best;
}

/// max |f| over all masked nodes.
inline double masked_max(const GridField& f) {
    const auto& geo = f.grid();
    double best = 0.0;
    for (std::size_t i = 0; i < geo.size(); ++i)
        if (geo.masked(i)) best = std::max(best, std::abs(f[i]));
    return best;
}

/// (sum over masked nodes of |f|^2 times the cell volume)^(1/2); summed in
/// node order so repeated runs agree bitwise.
inline double l2_norm(const GridField& f) {
    const auto& geo = f.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < geo.size(); ++i)
        if (geo.masked(i)) sum += std::norm(f[i]);
    return std::sqrt(sum * geo.cell_volume());
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// CSV snapshot of masked nodes: x1,y1,...,xn,yn then re:<label>,im:<label>
/// per field.
inline void write_fields_csv(std::ostream& os, const std::vector<std::pair<std::string, const GridField*>>& fields) {
    if (fields.empty()) return;
    const auto& geo = fields.front().second->grid();
    const int n = geo.n();
    for (int k = 0; k < n; ++k) os << (k ? "," : "") << "x" << k + 1 << ",y" << k + 1;
    for (const auto& [label, f] : fields) {
        GridField::check_compatible(*fields.front().second, *f);
        os << ",re:" << label << ",im:" << label;
    }
    os << "\n";
    for (std::size_t i = 0; i < geo.size(); ++i) {
        if (!geo.masked(i)) continue;
        for (int k = 0; k < n; ++k) {
            const cplx z = geo.coordinate(i, k);
            os << (k ? "," : "") << format_double(z.real()) << "," << format_double(z.imag());
        }
        for (const auto& [label, f] : fields) os << "," << format_double((*f)[i].real()) << "," << format_double((*f)[i].imag());
        os << "\n";
    }
}

/// Reads a CSV written by write_fields_csv back onto `geo`. Nodes missing
/// from the file are zero. Rows are matched to nodes by rounding coordinates.
inline std::map<std::string, GridField> read_fields_csv(std::istream& is, const GeometryPtr& geo) {
    std::string header;
    if (!std::getline(is, header)) throw ParseError("empty CSV", 1, 1);
    std::vector<std::string> cols;
    {
        std::stringstream ss(header);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    const int n = geo->n();
    if (static_cast<int>(cols.size()) < 2 * n + 2 || (cols.size() - 2 * static_cast<std::size_t>(n)) % 2 != 0)
        throw ParseError("CSV header does not match grid dimension", 1, 1);
    for (int k = 0; k < n; ++k)
        if (cols[static_cast<std::size_t>(2 * k)] != "x" + std::to_string(k + 1) ||
            cols[static_cast<std::size_t>(2 * k + 1)] != "y" + std::to_string(k + 1))
            throw ParseError("CSV coordinate columns must be x1,y1,...", 1, 1);
    std::vector<std::string> labels;
    for (std::size_t c = static_cast<std::size_t>(2 * n); c < cols.size(); c += 2) {
        if (cols[c].rfind("re:", 0) != 0 || cols[c + 1] != "im:" + cols[c].substr(3))
            throw ParseError("CSV value columns must come in re:<label>,im:<label> pairs", 1, static_cast<int>(c + 1));
        labels.push_back(cols[c].substr(3));
    }
    std::map<std::string, GridField> out;
    for (const auto& l : labels) out.emplace(l, GridField(geo));
    std::string line;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("not a number: '" + cell + "'", line_no, 1);
            }
        }
        if (v.size() != cols.size()) throw ParseError("wrong number of columns", line_no, 1);
        std::size_t node = 0;
        for (int k = 0; k < n; ++k) {
            const auto& d = geo->disc(k);
            const int ix = static_cast<int>(std::lround((v[static_cast<std::size_t>(2 * k)] - d.x[0]) / d.h));
            const int iy = static_cast<int>(std::lround((v[static_cast<std::size_t>(2 * k + 1)] - d.y[0]) / d.h));
            if (ix < 0 || iy < 0 || ix >= d.M || iy >= d.M) throw ParseError("coordinates off the grid", line_no, 1);
            node += static_cast<std::size_t>(ix) * geo->stride(k) * static_cast<std::size_t>(d.M) +
                    static_cast<std::size_t>(iy) * geo->stride(k);
        }
        for (std::size_t l = 0; l < labels.size(); ++l)
            out.at(labels[l])[node] = {v[2 * static_cast<std::size_t>(n) + 2 * l], v[2 * static_cast<std::size_t>(n) + 2 * l + 1]};
    }
    return out;
}

}  // namespace koszul

#endif
