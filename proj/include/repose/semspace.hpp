#pragma once

#include "repose/bvh.hpp"
#include "repose/mesh.hpp"
#include "repose/rig.hpp"

#include <map>
#include <vector>

namespace repose {

// A 3D point carrying skinning weights over body parts. Points farther than
// the assignment cutoff from the template stay unassigned and keep their
// input position.
struct SemanticPoint {
    Vec3 position = Vec3::Zero();
    SkinWeightMatrix::Row weights;
    bool assigned = false;
};

struct LandmarkSet {
    std::vector<Vec3> positions;  // canonical space, meters

    std::size_t size() const { return positions.size(); }

    void validate() const {
        require(!positions.empty(), "LandmarkSet: needs at least one landmark");
        for (std::size_t i = 0; i < positions.size(); ++i)
            require(finite(positions[i]), "LandmarkSet: non-finite landmark " + std::to_string(i));
    }
};

enum class SpatialFeatureKind { XYZ, L2, RBF, RBFPerAxis };

// Feature dim: XYZ = 3, L2 = N_L, RBF = N_L, RBFPerAxis = 3*N_L.
struct SpatialFeature {
    SpatialFeatureKind kind = SpatialFeatureKind::RBFPerAxis;
    std::vector<double> values;
};

inline std::size_t spatial_feature_dim(SpatialFeatureKind kind, std::size_t landmark_count) {
    switch (kind) {
        case SpatialFeatureKind::XYZ: return 3;
        case SpatialFeatureKind::L2: return landmark_count;
        case SpatialFeatureKind::RBF: return landmark_count;
        case SpatialFeatureKind::RBFPerAxis: return 3 * landmark_count;
    }
    return 0;
}

namespace detail {

inline SkinWeightMatrix::Row interpolate_weight_rows(const SkinWeightMatrix& weights,
                                                     const std::array<std::int32_t, 3>& tri,
                                                     const Vec3& bary) {
    std::map<int, double> acc;  // ordered so the output row is deterministic
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto& row = weights.rows[static_cast<std::size_t>(tri[static_cast<std::size_t>(k)])];
        if (row.empty()) continue;  // unassigned template vertex, renormalize over the rest
        for (const auto& e : row) {
            acc[e.part] += bary[k] * e.weight;
            total += bary[k] * e.weight;
        }
    }
    SkinWeightMatrix::Row out;
    if (total <= 0.0) return out;
    out.reserve(acc.size());
    for (const auto& [part, w] : acc)
        if (w > 0.0) out.push_back({part, w / total});
    return out;
}

}  // namespace detail

// Weight assignment for arbitrary points: exact closest point on the template
// surface, barycentric interpolation of the triangle's vertex weight rows.
// Points beyond `cutoff` are returned unassigned.
inline std::vector<SemanticPoint> assign_skin_weights(const std::vector<Vec3>& points,
                                                      const MeshQuery& template_query,
                                                      const SkinWeightMatrix& template_weights,
                                                      double cutoff = 0.10) {
    require(cutoff > 0.0, "assign_skin_weights: cutoff must be > 0");
    require(template_weights.row_count() == template_query.mesh().vertex_count(),
            "assign_skin_weights: weight rows do not align with template vertices");
    std::vector<SemanticPoint> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        SemanticPoint& sp = out[i];
        sp.position = points[i];
        const MeshQuery::Result r = template_query.closest(points[i]);
        if (r.distance > cutoff) continue;
        const auto& tri = template_query.mesh().faces[static_cast<std::size_t>(r.triangle)];
        sp.weights = detail::interpolate_weight_rows(template_weights, tri, r.barycentric);
        sp.assigned = !sp.weights.empty();
    }
    return out;
}

inline std::vector<SemanticPoint> assign_skin_weights(const std::vector<Vec3>& points,
                                                      const TriMesh& template_mesh,
                                                      const SkinWeightMatrix& template_weights,
                                                      double cutoff = 0.10) {
    require(!template_mesh.empty(), "assign_skin_weights: empty template mesh");
    const MeshQuery query(template_mesh);
    return assign_skin_weights(points, query, template_weights, cutoff);
}

// The deformation field taking posed space to canonical space: weights are
// assigned against the posed template, then the per-point blended transform is
// inverted. Unassigned points pass through flagged.
inline std::vector<SemanticPoint> semdf_to_canonical(const std::vector<Vec3>& points,
                                                     const TriMesh& posed_template,
                                                     const SkinWeightMatrix& template_weights,
                                                     const Rig& rig, const Pose& pose,
                                                     double cutoff = 0.10) {
    std::vector<SemanticPoint> semantic =
        assign_skin_weights(points, posed_template, template_weights, cutoff);
    const BoneTransforms transforms = forward_kinematics(rig, pose);

    std::vector<Vec3> assigned_points;
    std::vector<std::size_t> assigned_idx;
    SkinWeightMatrix assigned_weights;
    assigned_weights.num_parts = template_weights.num_parts;
    for (std::size_t i = 0; i < semantic.size(); ++i) {
        if (!semantic[i].assigned) continue;
        assigned_points.push_back(semantic[i].position);
        assigned_weights.rows.push_back(semantic[i].weights);
        assigned_idx.push_back(i);
    }
    const LbsInverseResult inv = lbs_invert(assigned_points, assigned_weights, transforms);
    for (std::size_t k = 0; k < assigned_idx.size(); ++k) {
        SemanticPoint& sp = semantic[assigned_idx[k]];
        if (inv.valid[k]) {
            sp.position = inv.positions[k];
        } else {
            sp.assigned = false;  // singular blend, keep the input position
        }
    }
    return semantic;
}

// Spatial encodings of a point relative to the landmark set. Distances are in
// meters divided by `length_scale`, so RBF values depend on the unit choice.
inline SpatialFeature spatial_feature(const Vec3& p, const LandmarkSet& landmarks,
                                      SpatialFeatureKind kind, double length_scale = 1.0) {
    landmarks.validate();
    require(length_scale > 0.0, "spatial_feature: length_scale must be > 0");
    SpatialFeature f;
    f.kind = kind;
    f.values.reserve(spatial_feature_dim(kind, landmarks.size()));
    switch (kind) {
        case SpatialFeatureKind::XYZ:
            f.values = {p.x(), p.y(), p.z()};
            break;
        case SpatialFeatureKind::L2:
            for (const Vec3& l : landmarks.positions) f.values.push_back((p - l).norm());
            break;
        case SpatialFeatureKind::RBF:
            for (const Vec3& l : landmarks.positions)
                f.values.push_back(std::exp(-(p - l).norm() / length_scale));
            break;
        case SpatialFeatureKind::RBFPerAxis:
            // landmark-major layout: values[3*i + a] for landmark i, axis a
            for (const Vec3& l : landmarks.positions)
                for (int a = 0; a < 3; ++a)
                    f.values.push_back(std::exp(-std::abs(p[a] - l[a]) / length_scale));
            break;
    }
    return f;
}

}  // namespace repose
