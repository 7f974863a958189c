#pragma once

#include "repose/math.hpp"
#include "repose/mesh.hpp"

#include <Eigen/SVD>

#include <optional>
#include <string>
#include <vector>

namespace repose {

// Kinematic tree. Joints carry rest-pose world positions; orientation at rest
// is the identity for every joint.
struct Joint {
    std::string name;
    int parent = -1;  // -1 for the root
    Vec3 rest_position = Vec3::Zero();
};

struct Rig {
    std::vector<Joint> joints;

    std::size_t joint_count() const { return joints.size(); }

    // Throws if the parent links do not form a tree with a single root or a
    // rest position is not finite.
    void validate() const {
        require(!joints.empty(), "Rig: needs at least one joint");
        int roots = 0;
        for (std::size_t i = 0; i < joints.size(); ++i) {
            const Joint& j = joints[i];
            require(finite(j.rest_position), "Rig: non-finite rest position at joint " + std::to_string(i));
            if (j.parent < 0) {
                ++roots;
            } else {
                require(static_cast<std::size_t>(j.parent) < joints.size(),
                        "Rig: parent index out of range at joint " + std::to_string(i));
                // walk up; a cycle would loop more than joint_count times
                int p = j.parent;
                std::size_t steps = 0;
                while (p >= 0) {
                    p = joints[static_cast<std::size_t>(p)].parent;
                    require(++steps <= joints.size(), "Rig: cycle in parent links at joint " + std::to_string(i));
                }
            }
        }
        require(roots == 1, "Rig: expected exactly one root, found " + std::to_string(roots));
    }
};

// Relative joint rotations plus a root translation.
struct Pose {
    std::vector<Quat> rotations;  // one per joint, relative to the parent
    Vec3 root_translation = Vec3::Zero();

    static Pose identity(std::size_t joint_count) {
        Pose p;
        p.rotations.assign(joint_count, Quat::Identity());
        return p;
    }

    void validate(std::size_t joint_count) const {
        require(rotations.size() == joint_count,
                "Pose: rotation count " + std::to_string(rotations.size()) + " != joint count " +
                    std::to_string(joint_count));
        for (std::size_t i = 0; i < rotations.size(); ++i)
            require(std::abs(rotations[i].norm() - 1.0) <= 1e-6,
                    "Pose: non-unit quaternion at joint " + std::to_string(i));
        require(finite(root_translation), "Pose: non-finite root translation");
    }
};

// Rest-pose-corrected world transforms, one per body part. Applying the
// transform of part k to a rest-space point moves it to posed space.
struct BoneTransforms {
    std::vector<Affine3> transforms;
    std::size_t size() const { return transforms.size(); }
    const Affine3& operator[](std::size_t k) const { return transforms[k]; }
};

// Convex per-point weights over body parts, stored as sparse rows.
// An empty row marks the point "unassigned"; such rows are rejected by the
// skinning operations.
struct SkinWeightMatrix {
    struct Entry {
        int part = 0;
        double weight = 0.0;
    };
    using Row = std::vector<Entry>;

    int num_parts = 0;
    std::vector<Row> rows;

    std::size_t row_count() const { return rows.size(); }
    bool assigned(std::size_t i) const { return !rows[i].empty(); }

    void validate() const {
        require(num_parts >= 1, "SkinWeightMatrix: num_parts must be >= 1");
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].empty()) continue;  // unassigned row
            double sum = 0.0;
            for (const Entry& e : rows[i]) {
                require(e.part >= 0 && e.part < num_parts,
                        "SkinWeightMatrix: part index out of range in row " + std::to_string(i));
                require(e.weight >= -1e-9 && e.weight <= 1.0 + 1e-9,
                        "SkinWeightMatrix: weight outside [0,1] in row " + std::to_string(i));
                sum += e.weight;
            }
            require(std::abs(sum - 1.0) <= 1e-5,
                    "SkinWeightMatrix: row " + std::to_string(i) + " sums to " + std::to_string(sum));
        }
    }

    static SkinWeightMatrix single_part(std::size_t points, int part, int num_parts) {
        SkinWeightMatrix w;
        w.num_parts = num_parts;
        w.rows.assign(points, Row{Entry{part, 1.0}});
        return w;
    }
};

// World transform of each joint under the pose: translations along the tree
// composed with the relative rotations, root translation applied first.
inline std::vector<Affine3> pose_world_transforms(const Rig& rig, const Pose& pose) {
    std::vector<Affine3> world(rig.joint_count());
    for (std::size_t i = 0; i < rig.joint_count(); ++i) {
        const Joint& j = rig.joints[i];
        Affine3 local = Affine3::Identity();
        if (j.parent < 0) {
            local.translate(pose.root_translation + j.rest_position);
            local.rotate(pose.rotations[i]);
            world[i] = local;
        } else {
            const Vec3 offset = j.rest_position - rig.joints[static_cast<std::size_t>(j.parent)].rest_position;
            local.translate(offset);
            local.rotate(pose.rotations[i]);
            world[i] = world[static_cast<std::size_t>(j.parent)] * local;
        }
    }
    return world;
}

// G_k = World_k(pose) * World_k(rest)^-1. The rest correction makes the
// identity pose a fixed point: every G_k is then the identity transform.
inline BoneTransforms forward_kinematics(const Rig& rig, const Pose& pose) {
    rig.validate();
    pose.validate(rig.joint_count());
    const std::vector<Affine3> world = pose_world_transforms(rig, pose);
    BoneTransforms out;
    out.transforms.resize(rig.joint_count());
    for (std::size_t i = 0; i < rig.joint_count(); ++i) {
        Affine3 rest_inv = Affine3::Identity();
        rest_inv.translate(-rig.joints[i].rest_position);
        out.transforms[i] = world[i] * rest_inv;
    }
    return out;
}

namespace detail {

// Blended affine M_p = sum_k w_k G_k for one weight row.
inline Eigen::Matrix<double, 3, 4> blend_transforms(const SkinWeightMatrix::Row& row,
                                                    const BoneTransforms& transforms) {
    Eigen::Matrix<double, 3, 4> m = Eigen::Matrix<double, 3, 4>::Zero();
    for (const auto& e : row) m += e.weight * transforms[static_cast<std::size_t>(e.part)].matrix().topRows<3>();
    return m;
}

}  // namespace detail

inline void check_skinning_inputs(std::size_t point_count, const SkinWeightMatrix& weights,
                                  const BoneTransforms& transforms) {
    require(weights.row_count() == point_count,
            "skinning: weight rows (" + std::to_string(weights.row_count()) + ") != point count (" +
                std::to_string(point_count) + ")");
    for (const auto& row : weights.rows)
        for (const auto& e : row)
            require(e.part >= 0 && static_cast<std::size_t>(e.part) < transforms.size(),
                    "skinning: part index out of range");
}

// Linear blend skinning: v' = sum_k w_k G_k v.
inline std::vector<Vec3> lbs_apply(const std::vector<Vec3>& points, const SkinWeightMatrix& weights,
                                   const BoneTransforms& transforms) {
    check_skinning_inputs(points.size(), weights, transforms);
    std::vector<Vec3> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        require(weights.assigned(i), "lbs_apply: unassigned weight row " + std::to_string(i));
        const auto m = detail::blend_transforms(weights.rows[i], transforms);
        out[i] = m.leftCols<3>() * points[i] + m.col(3);
    }
    return out;
}

struct LbsInverseResult {
    std::vector<Vec3> positions;
    std::vector<char> valid;              // 0 where the blend was singular or the row unassigned
    std::vector<double> condition;        // condition number of the blended linear part
    std::size_t flagged = 0;

    bool all_valid() const { return flagged == 0; }
};

// Exact inverse of lbs_apply: applies M_p^{-1} per point, where M_p is the
// blended affine of that point's weight row. Blends whose linear part has a
// condition number above `max_condition` are flagged instead of inverted.
inline LbsInverseResult lbs_invert(const std::vector<Vec3>& points, const SkinWeightMatrix& weights,
                                   const BoneTransforms& transforms, double max_condition = 1e8) {
    check_skinning_inputs(points.size(), weights, transforms);
    LbsInverseResult res;
    res.positions.resize(points.size());
    res.valid.assign(points.size(), 1);
    res.condition.assign(points.size(), 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!weights.assigned(i)) {
            res.positions[i] = points[i];
            res.valid[i] = 0;
            ++res.flagged;
            continue;
        }
        const auto m = detail::blend_transforms(weights.rows[i], transforms);
        const Mat3 a = m.leftCols<3>();
        const Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const double smin = svd.singularValues().minCoeff();
        const double smax = svd.singularValues().maxCoeff();
        const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
        res.condition[i] = cond;
        if (!(cond < max_condition)) {
            res.positions[i] = points[i];
            res.valid[i] = 0;
            ++res.flagged;
            continue;
        }
        res.positions[i] = svd.solve(points[i] - m.col(3));
    }
    return res;
}

// Skins the vertices, keeps the connectivity, and recomputes normals from the
// deformed geometry. Per-vertex colors pass through unchanged.
inline TriMesh repose_mesh(const TriMesh& mesh, const SkinWeightMatrix& weights, const Rig& rig,
                           const Pose& pose) {
    const BoneTransforms transforms = forward_kinematics(rig, pose);
    TriMesh out = mesh;
    out.positions = lbs_apply(mesh.positions, weights, transforms);
    if (!out.faces.empty()) compute_vertex_normals(out);
    return out;
}

}  // namespace repose
