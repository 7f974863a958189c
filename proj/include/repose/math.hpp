#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace repose {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;
using Affine3 = Eigen::Affine3d;
using Isometry3 = Eigen::Isometry3d;

using Rng = std::mt19937_64;

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

inline Vec3 clamp01(const Vec3& v) {
    return Vec3(clamp01(v.x()), clamp01(v.y()), clamp01(v.z()));
}

// logistic(x) = 1 / (1 + e^{-x}), evaluated without overflow for large |x|
inline double logistic(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline bool finite(const Vec3& v) {
    return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

// Unit vector or fallback when the norm is (near) zero.
inline Vec3 normalized_or(const Vec3& v, const Vec3& fallback) {
    const double n = v.norm();
    if (n < 1e-30) return fallback;
    return v / n;
}

[[noreturn]] inline void fail(const std::string& msg) { throw std::runtime_error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace repose
