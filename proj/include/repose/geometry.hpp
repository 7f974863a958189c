#pragma once

#include "repose/math.hpp"

namespace repose {

// Closest feature of a triangle relative to a query point.
enum class TriRegion { VertexA, VertexB, VertexC, EdgeAB, EdgeBC, EdgeCA, Face };

struct TriClosest {
    Vec3 point;        // closest point on the triangle
    Vec3 barycentric;  // weights of (a, b, c), convex
    TriRegion region = TriRegion::Face;
    double dist2 = 0.0;
};

// Exact closest point on triangle abc (Ericson, "Real-Time Collision Detection").
// The Voronoi-region classification is returned so callers can pick the right
// pseudonormal for sign tests.
inline TriClosest closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                         const Vec3& c) {
    TriClosest out;
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) {
        out.point = a;
        out.barycentric = Vec3(1, 0, 0);
        out.region = TriRegion::VertexA;
        out.dist2 = (p - a).squaredNorm();
        return out;
    }
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) {
        out.point = b;
        out.barycentric = Vec3(0, 1, 0);
        out.region = TriRegion::VertexB;
        out.dist2 = (p - b).squaredNorm();
        return out;
    }
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double t = d1 / (d1 - d3);
        out.point = a + t * ab;
        out.barycentric = Vec3(1.0 - t, t, 0);
        out.region = TriRegion::EdgeAB;
        out.dist2 = (p - out.point).squaredNorm();
        return out;
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) {
        out.point = c;
        out.barycentric = Vec3(0, 0, 1);
        out.region = TriRegion::VertexC;
        out.dist2 = (p - c).squaredNorm();
        return out;
    }
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double t = d2 / (d2 - d6);
        out.point = a + t * ac;
        out.barycentric = Vec3(1.0 - t, 0, t);
        out.region = TriRegion::EdgeCA;
        out.dist2 = (p - out.point).squaredNorm();
        return out;
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        out.point = b + t * (c - b);
        out.barycentric = Vec3(0, 1.0 - t, t);
        out.region = TriRegion::EdgeBC;
        out.dist2 = (p - out.point).squaredNorm();
        return out;
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    out.point = a + ab * v + ac * w;
    out.barycentric = Vec3(1.0 - v - w, v, w);
    out.region = TriRegion::Face;
    out.dist2 = (p - out.point).squaredNorm();
    return out;
}

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

inline Vec3 triangle_normal(const Vec3& a, const Vec3& b, const Vec3& c) {
    return normalized_or((b - a).cross(c - a), Vec3(0, 0, 1));
}

// Moller-Trumbore. Returns t >= 0 along dir, or nullopt.
inline bool ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b,
                         const Vec3& c, double* t_out) {
    const Vec3 ab = b - a, ac = c - a;
    const Vec3 pvec = dir.cross(ac);
    const double det = ab.dot(pvec);
    if (std::abs(det) < 1e-14) return false;
    const double inv = 1.0 / det;
    const Vec3 tvec = origin - a;
    const double u = tvec.dot(pvec) * inv;
    if (u < 0.0 || u > 1.0) return false;
    const Vec3 qvec = tvec.cross(ab);
    const double v = dir.dot(qvec) * inv;
    if (v < 0.0 || u + v > 1.0) return false;
    const double t = ac.dot(qvec) * inv;
    if (t < 0.0) return false;
    if (t_out) *t_out = t;
    return true;
}

}  // namespace repose
