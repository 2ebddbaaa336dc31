// Vector and quaternion primitives for 6-DoF tracking data.
//
// Conventions: right-handed coordinates, +y up (Unity default). Quaternions
// are Hamilton (x, y, z, w); the product a * b applies b first, then a, so
// rotation matrices compose as R(a * b) = R(a) R(b).
#pragma once

#include <algorithm>
#include <cmath>

#include "xrid/error.hpp"

namespace xrid {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }

    Vec3 normalized() const {
        const double n = norm();
        if (n < 1e-12) throw DegenerateRotationError("cannot normalize zero vector");
        return {x / n, y / n, z / n};
    }

    bool is_finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

struct Quaternion {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double w = 1.0;

    static Quaternion identity() { return {0.0, 0.0, 0.0, 1.0}; }

    static Quaternion from_axis_angle(const Vec3& axis, double angle_rad) {
        const Vec3 a = axis.normalized();
        const double h = 0.5 * angle_rad;
        const double s = std::sin(h);
        return {a.x * s, a.y * s, a.z * s, std::cos(h)};
    }

    double norm() const { return std::sqrt(x * x + y * y + z * z + w * w); }

    Quaternion normalized() const {
        const double n = norm();
        if (n < 1e-12) throw DegenerateRotationError("cannot normalize zero quaternion");
        return {x / n, y / n, z / n, w / n};
    }

    Quaternion conjugate() const { return {-x, -y, -z, w}; }

    double dot(const Quaternion& o) const { return x * o.x + y * o.y + z * o.z + w * o.w; }

    Quaternion operator-() const { return {-x, -y, -z, -w}; }

    bool operator==(const Quaternion& o) const {
        return x == o.x && y == o.y && z == o.z && w == o.w;
    }

    // Hamilton product; o is applied first.
    Quaternion operator*(const Quaternion& o) const {
        return {
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w,
            w * o.w - x * o.x - y * o.y - z * o.z,
        };
    }

    // Rotate a vector: q v q*. Assumes *this is unit norm.
    Vec3 rotate(const Vec3& v) const {
        const Vec3 u{x, y, z};
        const Vec3 t = 2.0 * u.cross(v);
        return v + w * t + u.cross(t);
    }

    Vec3 vector_part() const { return {x, y, z}; }

    bool is_finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z) && std::isfinite(w);
    }
};

struct Pose {
    Vec3 position;       // centimeters
    Quaternion rotation; // unit norm
};

// Shortest-arc spherical interpolation. Exact at the endpoints so that
// resampling on a grid that hits the original knots is the identity.
inline Quaternion slerp(const Quaternion& a, const Quaternion& b, double t) {
    if (t == 0.0) return a;
    Quaternion end = b;
    double cos_angle = a.dot(b);
    if (cos_angle < 0.0) {
        end = -end;
        cos_angle = -cos_angle;
    }
    if (t == 1.0) return end;
    if (cos_angle > 1.0 - 1e-10) {
        // Nearly parallel: linear blend, renormalized.
        Quaternion out{
            a.x + t * (end.x - a.x),
            a.y + t * (end.y - a.y),
            a.z + t * (end.z - a.z),
            a.w + t * (end.w - a.w),
        };
        return out.normalized();
    }
    const double angle = std::acos(std::clamp(cos_angle, -1.0, 1.0));
    const double sin_angle = std::sin(angle);
    const double wa = std::sin((1.0 - t) * angle) / sin_angle;
    const double wb = std::sin(t * angle) / sin_angle;
    return Quaternion{
        wa * a.x + wb * end.x,
        wa * a.y + wb * end.y,
        wa * a.z + wb * end.z,
        wa * a.w + wb * end.w,
    };
}

inline Vec3 lerp(const Vec3& a, const Vec3& b, double t) {
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)};
}

} // namespace xrid
