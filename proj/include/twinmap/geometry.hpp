#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace twinmap {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double k) const { return {x * k, y * k}; }
    Vec2 operator/(double k) const { return {x / k, y / k}; }
    bool operator==(const Vec2&) const = default;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Vec3&) const = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double squared_norm(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

// Counter-clockwise perpendicular.
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

inline Vec2 rotate(Vec2 p, double angle)
{
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a)
{
    const double two_pi = 2.0 * M_PI;
    a = std::fmod(a, two_pi);
    if (a <= -M_PI) {
        a += two_pi;
    } else if (a > M_PI) {
        a -= two_pi;
    }
    return a;
}

inline double polyline_length(std::span<const Vec2> points)
{
    double total = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        total += distance(points[i - 1], points[i]);
    }
    return total;
}

// Distance from p to segment [a, b].
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b)
{
    const Vec2 ab = b - a;
    const double len2 = squared_norm(ab);
    if (len2 <= 0.0) {
        return distance(p, a);
    }
    double t = dot(p - a, ab) / len2;
    t = std::max(0.0, std::min(1.0, t));
    return distance(p, a + ab * t);
}

struct SegmentIntersection {
    Vec2 point;
    double t_a = 0.0; // parameter along [a0, a1]
    double t_b = 0.0; // parameter along [b0, b1]
};

// Proper intersection of two segments; parallel/collinear pairs yield nothing.
inline std::optional<SegmentIntersection> segment_intersection(Vec2 a0, Vec2 a1, Vec2 b0, Vec2 b1)
{
    const Vec2 r = a1 - a0;
    const Vec2 s = b1 - b0;
    const double denom = cross(r, s);
    if (std::abs(denom) < 1e-12) {
        return std::nullopt;
    }
    const Vec2 qp = b0 - a0;
    const double t = cross(qp, s) / denom;
    const double u = cross(qp, r) / denom;
    if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) {
        return std::nullopt;
    }
    return SegmentIntersection{a0 + r * t, t, u};
}

} // namespace twinmap
