#pragma once

#include "repose/geometry.hpp"
#include "repose/mesh.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <vector>

namespace repose {

// Binary AABB tree over mesh triangles, median split on the longest axis.
// Degenerate (zero-area) triangles are excluded from the tree; their count is
// reported so callers can warn.
class TriangleBvh {
public:
    TriangleBvh() = default;

    explicit TriangleBvh(const TriMesh& mesh) : mesh_(&mesh) {
        std::vector<std::int32_t> tris;
        tris.reserve(mesh.face_count());
        for (std::size_t f = 0; f < mesh.face_count(); ++f) {
            if (mesh.face_area(f) > 0.0)
                tris.push_back(static_cast<std::int32_t>(f));
            else
                ++degenerate_count_;
        }
        require(!tris.empty(), "TriangleBvh: mesh has no non-degenerate triangles");
        nodes_.reserve(2 * tris.size());
        build(std::move(tris));
    }

    std::size_t degenerate_count() const { return degenerate_count_; }

    struct Hit {
        std::int32_t triangle = -1;
        TriClosest closest;
    };

    // Exact closest point on the mesh surface.
    Hit closest_point(const Vec3& p) const {
        Hit best;
        double best_d2 = std::numeric_limits<double>::max();
        descend_closest(0, p, best, best_d2);
        return best;
    }

    // Counts ray-triangle intersections with t > 0 (used by parity tests).
    int count_ray_hits(const Vec3& origin, const Vec3& dir) const {
        int hits = 0;
        count_hits(0, origin, dir, hits);
        return hits;
    }

private:
    struct Node {
        Vec3 lo, hi;
        std::int32_t left = -1;   // child index, or -1 for leaf
        std::int32_t right = -1;
        std::int32_t first = 0;   // leaf: range into tri_order_
        std::int32_t count = 0;
    };

    static constexpr int kLeafSize = 4;

    const TriMesh* mesh_ = nullptr;
    std::vector<Node> nodes_;
    std::vector<std::int32_t> tri_order_;
    std::size_t degenerate_count_ = 0;

    Vec3 centroid(std::int32_t f) const {
        const auto& t = mesh_->faces[static_cast<std::size_t>(f)];
        return (mesh_->vert(t[0]) + mesh_->vert(t[1]) + mesh_->vert(t[2])) / 3.0;
    }

    void grow(Node& n, std::int32_t f) const {
        const auto& t = mesh_->faces[static_cast<std::size_t>(f)];
        for (int k = 0; k < 3; ++k) {
            n.lo = n.lo.cwiseMin(mesh_->vert(t[k]));
            n.hi = n.hi.cwiseMax(mesh_->vert(t[k]));
        }
    }

    void build(std::vector<std::int32_t> tris) {
        tri_order_ = std::move(tris);
        nodes_.emplace_back();
        build_node(0, 0, static_cast<std::int32_t>(tri_order_.size()));
    }

    void build_node(std::size_t node, std::int32_t first, std::int32_t count) {
        Node& n = nodes_[node];
        n.lo = Vec3::Constant(std::numeric_limits<double>::max());
        n.hi = Vec3::Constant(std::numeric_limits<double>::lowest());
        for (std::int32_t i = first; i < first + count; ++i) grow(n, tri_order_[static_cast<std::size_t>(i)]);
        if (count <= kLeafSize) {
            n.first = first;
            n.count = count;
            return;
        }
        int axis = 0;
        const Vec3 ext = n.hi - n.lo;
        if (ext.y() > ext.x()) axis = 1;
        if (ext.z() > ext[axis]) axis = 2;
        const std::int32_t mid = first + count / 2;
        std::nth_element(tri_order_.begin() + first, tri_order_.begin() + mid,
                         tri_order_.begin() + first + count,
                         [&](std::int32_t a, std::int32_t b) {
                             const double ca = centroid(a)[axis], cb = centroid(b)[axis];
                             if (ca != cb) return ca < cb;
                             return a < b;  // deterministic tie-break
                         });
        const std::int32_t left = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        nodes_.emplace_back();
        nodes_[node].left = left;
        nodes_[node].right = left + 1;
        build_node(static_cast<std::size_t>(left), first, mid - first);
        build_node(static_cast<std::size_t>(left) + 1, mid, first + count - mid);
    }

    static double box_dist2(const Node& n, const Vec3& p) {
        const Vec3 d = (n.lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - n.hi);
        return d.squaredNorm();
    }

    void descend_closest(std::size_t node, const Vec3& p, Hit& best, double& best_d2) const {
        const Node& n = nodes_[node];
        if (n.left < 0) {
            for (std::int32_t i = n.first; i < n.first + n.count; ++i) {
                const std::int32_t f = tri_order_[static_cast<std::size_t>(i)];
                const auto& t = mesh_->faces[static_cast<std::size_t>(f)];
                const TriClosest c =
                    closest_point_triangle(p, mesh_->vert(t[0]), mesh_->vert(t[1]), mesh_->vert(t[2]));
                if (c.dist2 < best_d2) {
                    best_d2 = c.dist2;
                    best.triangle = f;
                    best.closest = c;
                }
            }
            return;
        }
        const double dl = box_dist2(nodes_[static_cast<std::size_t>(n.left)], p);
        const double dr = box_dist2(nodes_[static_cast<std::size_t>(n.right)], p);
        const std::size_t near = dl <= dr ? static_cast<std::size_t>(n.left) : static_cast<std::size_t>(n.right);
        const std::size_t far = dl <= dr ? static_cast<std::size_t>(n.right) : static_cast<std::size_t>(n.left);
        const double dnear = std::min(dl, dr), dfar = std::max(dl, dr);
        if (dnear < best_d2) descend_closest(near, p, best, best_d2);
        if (dfar < best_d2) descend_closest(far, p, best, best_d2);
    }

    static bool box_hit(const Node& n, const Vec3& o, const Vec3& inv_dir) {
        double tmin = 0.0, tmax = std::numeric_limits<double>::max();
        for (int a = 0; a < 3; ++a) {
            double t0 = (n.lo[a] - o[a]) * inv_dir[a];
            double t1 = (n.hi[a] - o[a]) * inv_dir[a];
            if (t0 > t1) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            if (tmin > tmax) return false;
        }
        return true;
    }

    void count_hits(std::size_t node, const Vec3& o, const Vec3& dir, int& hits) const {
        const Node& n = nodes_[node];
        const Vec3 inv_dir(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
        if (!box_hit(n, o, inv_dir)) return;
        if (n.left < 0) {
            for (std::int32_t i = n.first; i < n.first + n.count; ++i) {
                const std::int32_t f = tri_order_[static_cast<std::size_t>(i)];
                const auto& t = mesh_->faces[static_cast<std::size_t>(f)];
                double tt;
                if (ray_triangle(o, dir, mesh_->vert(t[0]), mesh_->vert(t[1]), mesh_->vert(t[2]), &tt) &&
                    tt > 1e-12)
                    ++hits;
            }
            return;
        }
        count_hits(static_cast<std::size_t>(n.left), o, dir, hits);
        count_hits(static_cast<std::size_t>(n.right), o, dir, hits);
    }
};

// Closest-point oracle over a mesh with the pseudonormal tables needed for
// inside/outside classification (Baerentzen & Aanaes). The sign at a query is
// taken from the angle-weighted pseudonormal of the closest feature, which is
// exact for closed, consistently oriented meshes. Build once, query from any
// number of threads.
class MeshQuery {
public:
    MeshQuery() = default;

    explicit MeshQuery(const TriMesh& mesh) : mesh_(&mesh), bvh_(mesh) {
        face_normals_.resize(mesh.face_count());
        vertex_normals_.assign(mesh.vertex_count(), Vec3::Zero());
        for (std::size_t f = 0; f < mesh.face_count(); ++f) {
            const auto& t = mesh.faces[f];
            face_normals_[f] = mesh.face_normal(f);
            // angle-weighted accumulation
            for (int k = 0; k < 3; ++k) {
                const Vec3& p = mesh.vert(t[k]);
                const Vec3 e0 = (mesh.vert(t[(k + 1) % 3]) - p).normalized();
                const Vec3 e1 = (mesh.vert(t[(k + 2) % 3]) - p).normalized();
                const double angle = std::acos(std::clamp(e0.dot(e1), -1.0, 1.0));
                vertex_normals_[static_cast<std::size_t>(t[k])] += angle * face_normals_[f];
            }
            // try_emplace: Eigen's default constructor does not zero-initialize
            for (int k = 0; k < 3; ++k) {
                const std::uint64_t key = detail::undirected_edge_key(t[k], t[(k + 1) % 3]);
                edge_normals_.try_emplace(key, Vec3::Zero()).first->second += face_normals_[f];
            }
        }
    }

    const TriMesh& mesh() const { return *mesh_; }
    const TriangleBvh& bvh() const { return bvh_; }
    std::size_t degenerate_count() const { return bvh_.degenerate_count(); }

    struct Result {
        Vec3 point;          // closest surface point
        Vec3 barycentric;    // within the closest triangle
        std::int32_t triangle = -1;
        double distance = 0.0;  // unsigned
        Vec3 pseudonormal;   // of the closest feature, unit
    };

    Result closest(const Vec3& p) const {
        const TriangleBvh::Hit hit = bvh_.closest_point(p);
        Result r;
        r.point = hit.closest.point;
        r.barycentric = hit.closest.barycentric;
        r.triangle = hit.triangle;
        r.distance = std::sqrt(hit.closest.dist2);
        r.pseudonormal = feature_normal(hit);
        return r;
    }

    // Negative inside. Ties (point on the surface) report 0.
    double signed_distance(const Vec3& p) const {
        const Result r = closest(p);
        const double s = (p - r.point).dot(r.pseudonormal);
        return s < 0.0 ? -r.distance : r.distance;
    }

    // 1 inside (surface counts as inside), 0 outside.
    double occupancy(const Vec3& p) const {
        const Result r = closest(p);
        if (r.distance == 0.0) return 1.0;
        return (p - r.point).dot(r.pseudonormal) <= 0.0 ? 1.0 : 0.0;
    }

    // Barycentric interpolation of per-vertex attributes at the closest point.
    Vec3 interpolate(const Result& r, const std::vector<Vec3>& attr) const {
        const auto& t = mesh_->faces[static_cast<std::size_t>(r.triangle)];
        return r.barycentric.x() * attr[static_cast<std::size_t>(t[0])] +
               r.barycentric.y() * attr[static_cast<std::size_t>(t[1])] +
               r.barycentric.z() * attr[static_cast<std::size_t>(t[2])];
    }

private:
    const TriMesh* mesh_ = nullptr;
    TriangleBvh bvh_;
    std::vector<Vec3> face_normals_;
    std::vector<Vec3> vertex_normals_;
    std::unordered_map<std::uint64_t, Vec3> edge_normals_;

    Vec3 feature_normal(const TriangleBvh::Hit& hit) const {
        const auto& t = mesh_->faces[static_cast<std::size_t>(hit.triangle)];
        switch (hit.closest.region) {
            case TriRegion::Face:
                return face_normals_[static_cast<std::size_t>(hit.triangle)];
            case TriRegion::VertexA:
                return normalized_or(vertex_normals_[static_cast<std::size_t>(t[0])], face_normals_[static_cast<std::size_t>(hit.triangle)]);
            case TriRegion::VertexB:
                return normalized_or(vertex_normals_[static_cast<std::size_t>(t[1])], face_normals_[static_cast<std::size_t>(hit.triangle)]);
            case TriRegion::VertexC:
                return normalized_or(vertex_normals_[static_cast<std::size_t>(t[2])], face_normals_[static_cast<std::size_t>(hit.triangle)]);
            case TriRegion::EdgeAB:
                return edge_normal(t[0], t[1], hit.triangle);
            case TriRegion::EdgeBC:
                return edge_normal(t[1], t[2], hit.triangle);
            case TriRegion::EdgeCA:
                return edge_normal(t[2], t[0], hit.triangle);
        }
        return face_normals_[static_cast<std::size_t>(hit.triangle)];
    }

    Vec3 edge_normal(std::int32_t a, std::int32_t b, std::int32_t tri) const {
        const auto it = edge_normals_.find(detail::undirected_edge_key(a, b));
        if (it == edge_normals_.end())
            return face_normals_[static_cast<std::size_t>(tri)];
        return normalized_or(it->second, face_normals_[static_cast<std::size_t>(tri)]);
    }
};

}  // namespace repose
