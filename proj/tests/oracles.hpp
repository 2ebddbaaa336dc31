// Test-only brute-force oracles. These deliberately avoid the library's
// quaternion algebra: rotations are checked through plain 3x3 matrices.
#pragma once

#include <array>
#include <cmath>

#include "xrid/geometry.hpp"
#include "xrid/rng.hpp"

namespace oracle {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Rotation matrix from a unit quaternion, written out long-hand.
inline Mat3 to_matrix(const xrid::Quaternion& q) {
    const double x = q.x, y = q.y, z = q.z, w = q.w;
    return Mat3{{
        {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
        {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
        {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)},
    }};
}

inline Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
            c[i][j] = s;
        }
    return c;
}

inline Mat3 transpose(const Mat3& a) {
    Mat3 t{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
    return t;
}

inline xrid::Vec3 apply(const Mat3& m, const xrid::Vec3& v) {
    return {
        m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
        m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
        m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
    };
}

inline double max_abs_diff(const Mat3& a, const Mat3& b) {
    double m = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
    return m;
}

inline xrid::Quaternion random_unit_quaternion(xrid::Rng& rng) {
    // Gaussian components, normalized: uniform on the 3-sphere.
    while (true) {
        xrid::Quaternion q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        const double n = q.norm();
        if (n > 1e-6) return {q.x / n, q.y / n, q.z / n, q.w / n};
    }
}

inline xrid::Vec3 random_unit_vector(xrid::Rng& rng) {
    while (true) {
        xrid::Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        const double n = v.norm();
        if (n > 1e-6) return {v.x / n, v.y / n, v.z / n};
    }
}

} // namespace oracle
