#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace oracle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double t) {
    t = std::fmod(t, kTwoPi);
    return t < 0.0 ? t + kTwoPi : t;
}

struct Residual {
    const Closure& c;
    double r2, r3;
    std::array<double, 2> operator()(double t, double a) const {
        const Vec2 l = c.legs(t, a);
        return {l.x * l.x - r2 * r2, l.y * l.y - r3 * r3};
    }
};

/// True when the zero set of f inside the cell carries a sign change of g. The zero set is
/// approximated by the linear crossings of f on the cell edges.
bool cell_has_root(const Residual& r, double t0, double a0, double h) {
    const std::array<Vec2, 4> corner{Vec2{t0, a0}, Vec2{t0 + h, a0}, Vec2{t0 + h, a0 + h}, Vec2{t0, a0 + h}};
    std::array<std::array<double, 2>, 4> v;
    for (int i = 0; i < 4; ++i) v[i] = r(corner[i].x, corner[i].y);
    std::vector<double> g_at_crossings;
    for (int i = 0; i < 4; ++i) {
        const int j = (i + 1) % 4;
        const double fa = v[i][0], fb = v[j][0];
        if ((fa > 0.0) == (fb > 0.0)) continue;
        const double s = fa / (fa - fb);
        const Vec2 p = corner[i] + s * (corner[j] - corner[i]);
        g_at_crossings.push_back(r(p.x, p.y)[1]);
    }
    if (g_at_crossings.size() < 2) return false;
    const auto [lo, hi] = std::minmax_element(g_at_crossings.begin(), g_at_crossings.end());
    return *lo <= 0.0 && *hi >= 0.0;
}

void quadrisect(const Residual& r, double t0, double a0, double h, double resolution, std::vector<Vec2>& out) {
    if (!cell_has_root(r, t0, a0, h)) return;
    if (h <= resolution) {
        out.push_back({wrap(t0 + h / 2), wrap(a0 + h / 2)});
        return;
    }
    const double k = h / 2;
    quadrisect(r, t0, a0, k, resolution, out);
    quadrisect(r, t0 + k, a0, k, resolution, out);
    quadrisect(r, t0, a0 + k, k, resolution, out);
    quadrisect(r, t0 + k, a0 + k, k, resolution, out);
}

}  // namespace

Closure::Closure(const rpr::ManipulatorGeometry& geometry, double r1) : g(geometry), rho1(r1) {
    // d1 = |B1B2|, d2 = |B2B3|, d3 = |B3B1|, counter-clockwise.
    const double x = (g.d1 * g.d1 + g.d3 * g.d3 - g.d2 * g.d2) / (2.0 * g.d1);
    p2 = {g.d1, 0.0};
    p3 = {x, std::sqrt(g.d3 * g.d3 - x * x)};
}

void Closure::platform(double theta1, double alpha, Vec2& b1, Vec2& b2, Vec2& b3) const {
    const double c = std::cos(alpha), s = std::sin(alpha);
    b1 = {g.a1.x + rho1 * std::cos(theta1), g.a1.y + rho1 * std::sin(theta1)};
    b2 = {b1.x + c * p2.x - s * p2.y, b1.y + s * p2.x + c * p2.y};
    b3 = {b1.x + c * p3.x - s * p3.y, b1.y + s * p3.x + c * p3.y};
}

Vec2 Closure::legs(double theta1, double alpha) const {
    Vec2 b1, b2, b3;
    platform(theta1, alpha, b1, b2, b3);
    return {std::hypot(b2.x - g.a2.x, b2.y - g.a2.y), std::hypot(b3.x - g.a3.x, b3.y - g.a3.y)};
}

std::vector<Vec2> brute_force_fk(const Closure& c, double rho2, double rho3, int n, double resolution) {
    const Residual r{c, rho2, rho3};
    const double h = kTwoPi / n;
    std::vector<double> f(static_cast<std::size_t>(n) * n), g(f.size());
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const auto v = r(i * h, j * h);
            f[static_cast<std::size_t>(j) * n + i] = v[0];
            g[static_cast<std::size_t>(j) * n + i] = v[1];
        }
    }
    std::vector<Vec2> raw;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int i1 = (i + 1) % n, j1 = (j + 1) % n;
            const std::array<std::size_t, 4> idx{static_cast<std::size_t>(j) * n + i,
                                                 static_cast<std::size_t>(j) * n + i1,
                                                 static_cast<std::size_t>(j1) * n + i1,
                                                 static_cast<std::size_t>(j1) * n + i};
            bool fpos = false, fneg = false;
            for (auto k : idx) (f[k] > 0.0 ? fpos : fneg) = true;
            if (!(fpos && fneg)) continue;
            quadrisect(r, i * h, j * h, h, resolution, raw);
        }
    }
    // Roots on shared cell edges are reported by both neighbours.
    std::vector<Vec2> roots;
    for (const Vec2 p : raw) {
        const bool dup = std::any_of(roots.begin(), roots.end(),
                                     [&](Vec2 q) { return torus_gap(p, q) < 1e-7; });
        if (!dup) roots.push_back(p);
    }
    return roots;
}

double torus_gap(Vec2 a, Vec2 b) {
    auto d = [](double x) {
        x = std::fmod(std::abs(x), kTwoPi);
        return std::min(x, kTwoPi - x);
    };
    return std::hypot(d(a.x - b.x), d(a.y - b.y));
}

Vec2 gradient(const std::function<double(Vec2)>& f, Vec2 x, double h) {
    return {(f({x.x + h, x.y}) - f({x.x - h, x.y})) / (2 * h), (f({x.x, x.y + h}) - f({x.x, x.y - h})) / (2 * h)};
}

double concurrency_determinant(const Closure& c, double theta1, double alpha) {
    Vec2 b[3];
    c.platform(theta1, alpha, b[0], b[1], b[2]);
    const Vec2 a[3] = {c.g.a1, c.g.a2, c.g.a3};
    double m[3][3];
    for (int i = 0; i < 3; ++i) {
        const double len = std::hypot(b[i].x - a[i].x, b[i].y - a[i].y);
        const double ux = (b[i].x - a[i].x) / len, uy = (b[i].y - a[i].y) / len;
        const double moment = a[i].x * uy - a[i].y * ux;
        const double row = std::sqrt(1.0 + moment * moment);
        m[i][0] = ux / row;
        m[i][1] = uy / row;
        m[i][2] = moment / row;
    }
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

}  // namespace oracle
