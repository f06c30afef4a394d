#pragma once

#include <cmath>
#include <numbers>

namespace rpr {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
/// Counter-clockwise quarter turn.
constexpr Vec2 perp(Vec2 a) { return {-a.y, a.x}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 normalized(Vec2 a) {
    const double n = norm(a);
    return n > 0.0 ? a / n : Vec2{};
}
inline Vec2 rotated(Vec2 a, double c, double s) { return {c * a.x - s * a.y, s * a.x + c * a.y}; }

/// Unoriented angle between two directions, in [0, pi/2].
inline double line_angle(Vec2 a, Vec2 b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return std::numbers::pi / 2;
    return std::atan2(std::abs(cross(a, b)), std::abs(dot(a, b)));
}

/// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    constexpr double det() const { return a * d - b * c; }
    constexpr Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    double frobenius() const { return std::sqrt(a * a + b * b + c * c + d * d); }
    constexpr Vec2 row0() const { return {a, b}; }
    constexpr Vec2 row1() const { return {c, d}; }
};

/// Angle mapped into [0, 2pi).
inline double wrap_angle(double t) {
    double r = std::fmod(t, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

/// Signed angular difference mapped into [-pi, pi).
inline double wrap_delta(double d) {
    return wrap_angle(d + std::numbers::pi) - std::numbers::pi;
}

/// Euclidean distance on the flat (2pi x 2pi) torus.
inline double torus_distance(Vec2 a, Vec2 b) {
    return std::hypot(wrap_delta(a.x - b.x), wrap_delta(a.y - b.y));
}

/// Shortest torus displacement from a to b.
inline Vec2 torus_delta(Vec2 a, Vec2 b) {
    return {wrap_delta(b.x - a.x), wrap_delta(b.y - a.y)};
}

}  // namespace rpr
