#pragma once
#include <cmath>

namespace fieldsim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

// Wrap a coordinate into [0, L).
inline double wrap_coord(double x, double L) {
    double r = std::fmod(x, L);
    if (r < 0.0) r += L;
    if (r >= L) r = 0.0;  // fmod can return L for tiny negative x
    return r;
}

// Signed minimal displacement a->b on a circle of circumference L, in [-L/2, L/2).
inline double torus_delta(double a, double b, double L) {
    double d = b - a;
    d -= L * std::floor(d / L + 0.5);
    return d;
}

inline double torus_dist2(Vec2 a, Vec2 b, double L) {
    double dx = torus_delta(a.x, b.x, L);
    double dy = torus_delta(a.y, b.y, L);
    return dx * dx + dy * dy;
}

inline double torus_dist(Vec2 a, Vec2 b, double L) { return std::sqrt(torus_dist2(a, b, L)); }

inline double dist2(Vec2 a, Vec2 b) {
    double dx = b.x - a.x, dy = b.y - a.y;
    return dx * dx + dy * dy;
}

// Wrap an angle into [0, 2*pi).
inline double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0.0) a += kTwoPi;
    if (a >= kTwoPi) a = 0.0;
    return a;
}

// Signed angular difference b-a wrapped into [-pi, pi).
inline double angle_diff(double a, double b) {
    double d = std::fmod(b - a, kTwoPi);
    if (d < -kPi) d += kTwoPi;
    if (d >= kPi) d -= kTwoPi;
    return d;
}

// Circular distance between ticks on a cycle of length T, in [0, T/2].
inline int cycle_dist(int a, int b, int T) {
    int d = (a - b) % T;
    if (d < 0) d += T;
    return d <= T - d ? d : T - d;
}

}  // namespace fieldsim
