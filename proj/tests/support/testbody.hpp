#pragma once

// Synthetic geometry and rigs shared by the unit and acceptance tests.

#include "repose/field.hpp"
#include "repose/marching_cubes.hpp"
#include "repose/mesh.hpp"
#include "repose/rig.hpp"

#include <cmath>
#include <map>
#include <random>
#include <vector>

namespace repose::testsupport {

// Icosphere: exactly closed, independent of the marching-cubes path.
inline TriMesh make_icosphere(double radius = 1.0, int subdivisions = 3,
                              const Vec3& center = Vec3::Zero()) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (Vec3& v : verts) v.normalize();
    std::vector<std::array<std::int32_t, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::uint64_t, std::int32_t> midpoint;
        auto mid = [&](std::int32_t a, std::int32_t b) {
            const std::uint64_t key = detail::undirected_edge_key(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const Vec3 m = (verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)]).normalized();
            verts.push_back(m);
            const std::int32_t id = static_cast<std::int32_t>(verts.size() - 1);
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<std::int32_t, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const std::int32_t ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }
    TriMesh mesh;
    mesh.faces = std::move(faces);
    mesh.positions.reserve(verts.size());
    for (const Vec3& v : verts) mesh.positions.push_back(center + radius * v);
    compute_vertex_normals(mesh);
    return mesh;
}

// Axis-aligned cube as 12 triangles, outward orientation.
inline TriMesh make_cube(const Vec3& center = Vec3::Zero(), double edge = 1.0) {
    TriMesh mesh;
    const double h = edge / 2.0;
    for (int i = 0; i < 8; ++i)
        mesh.positions.push_back(center + Vec3(i & 1 ? h : -h, i & 2 ? h : -h, i & 4 ? h : -h));
    const std::array<std::array<std::int32_t, 4>, 6> quads = {{
        {0, 4, 6, 2},  // -x
        {1, 3, 7, 5},  // +x
        {0, 1, 5, 4},  // -y
        {2, 6, 7, 3},  // +y
        {0, 2, 3, 1},  // -z
        {4, 5, 7, 6},  // +z
    }};
    for (const auto& q : quads) {
        mesh.faces.push_back({q[0], q[1], q[2]});
        mesh.faces.push_back({q[0], q[2], q[3]});
    }
    compute_vertex_normals(mesh);
    return mesh;
}

// Single quad in the z=z0 plane spanning [0,1]^2, split into two triangles.
inline TriMesh make_square(double z0) {
    TriMesh mesh;
    mesh.positions = {Vec3(0, 0, z0), Vec3(1, 0, z0), Vec3(1, 1, z0), Vec3(0, 1, z0)};
    mesh.faces = {{0, 1, 2}, {0, 2, 3}};
    compute_vertex_normals(mesh);
    return mesh;
}

// --------------------------------------------------------------------------
// A synthetic articulated body: capsule skeleton, template surface from the
// union occupancy field, and skinning weights from per-part capsule
// distances. Everything is consistent, so repose_mesh of the template is an
// exact LBS deformation.

struct CapsulePart {
    Vec3 a, b;      // segment in canonical space
    double radius;
};

struct SyntheticBody {
    Rig rig;
    std::vector<CapsulePart> parts;  // one per joint
    TriMesh template_mesh;           // canonical surface, closed
    SkinWeightMatrix weights;        // per template vertex
};

inline double capsule_sdf(const Vec3& p, const CapsulePart& c) {
    const Vec3 ab = c.b - c.a;
    const double t = std::clamp((p - c.a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    return (p - (c.a + t * ab)).norm() - c.radius;
}

class CapsuleUnionField final : public CanonicalField {
public:
    CapsuleUnionField(const std::vector<CapsulePart>& parts, double sharpness = 0.01)
        : parts_(parts), sharpness_(sharpness) {}

    FieldSample sample(const Vec3& p) const override {
        double sd = std::numeric_limits<double>::max();
        for (const auto& c : parts_) sd = std::min(sd, capsule_sdf(p, c));
        FieldSample s;
        s.occupancy = logistic(-sd / sharpness_);
        s.color = Vec3(0.7, 0.6, 0.5);
        return s;
    }

private:
    std::vector<CapsulePart> parts_;
    double sharpness_;
};

inline SkinWeightMatrix capsule_weights(const std::vector<Vec3>& points,
                                        const std::vector<CapsulePart>& parts,
                                        double blend = 0.05) {
    SkinWeightMatrix w;
    w.num_parts = static_cast<int>(parts.size());
    w.rows.reserve(points.size());
    for (const Vec3& p : points) {
        // soft-min over the part distances; sharp enough that mid-limb points
        // are effectively single-part
        std::vector<double> d(parts.size());
        double dmin = std::numeric_limits<double>::max();
        for (std::size_t k = 0; k < parts.size(); ++k) {
            d[k] = std::max(capsule_sdf(p, parts[k]) + parts[k].radius, 0.0);  // distance to the axis
            dmin = std::min(dmin, d[k]);
        }
        SkinWeightMatrix::Row row;
        double sum = 0.0;
        for (std::size_t k = 0; k < parts.size(); ++k) {
            const double e = std::exp(-(d[k] - dmin) / blend);
            if (e > 1e-6) {
                row.push_back({static_cast<int>(k), e});
                sum += e;
            }
        }
        for (auto& e : row) e.weight /= sum;
        w.rows.push_back(std::move(row));
    }
    return w;
}

inline SyntheticBody make_synthetic_body(int grid_resolution = 96) {
    SyntheticBody body;
    auto add_joint = [&](const char* name, int parent, const Vec3& pos) {
        body.rig.joints.push_back({name, parent, pos});
    };
    add_joint("pelvis", -1, {0.0, 0.0, 0.0});
    add_joint("chest", 0, {0.0, 0.35, 0.0});
    add_joint("head", 1, {0.0, 0.60, 0.0});
    add_joint("l_shoulder", 1, {0.14, 0.50, 0.0});
    add_joint("l_elbow", 3, {0.40, 0.50, 0.0});
    add_joint("r_shoulder", 1, {-0.14, 0.50, 0.0});
    add_joint("r_elbow", 5, {-0.40, 0.50, 0.0});

    body.parts = {
        {{0.0, -0.15, 0.0}, {0.0, 0.35, 0.0}, 0.13},    // pelvis: lower torso
        {{0.0, 0.35, 0.0}, {0.0, 0.55, 0.0}, 0.12},     // chest
        {{0.0, 0.62, 0.0}, {0.0, 0.72, 0.0}, 0.09},     // head
        {{0.14, 0.50, 0.0}, {0.40, 0.50, 0.0}, 0.055},  // l upper arm
        {{0.40, 0.50, 0.0}, {0.62, 0.50, 0.0}, 0.050},  // l forearm
        {{-0.14, 0.50, 0.0}, {-0.40, 0.50, 0.0}, 0.055},
        {{-0.40, 0.50, 0.0}, {-0.62, 0.50, 0.0}, 0.050},
    };

    const CapsuleUnionField field(body.parts, 0.01);
    const GridSpec spec = GridSpec::centered(Vec3(-0.9, -0.45, -0.45), Vec3(0.9, 1.35, 1.35),
                                             grid_resolution);
    body.template_mesh = extract_isosurface(evaluate_on_grid(field, spec), 0.5);
    body.template_mesh.colors.resize(body.template_mesh.vertex_count());
    for (std::size_t i = 0; i < body.template_mesh.vertex_count(); ++i) {
        const Vec3& p = body.template_mesh.positions[i];
        body.template_mesh.colors[i] = clamp01(Vec3(0.5 + 0.4 * p.x(), 0.4 + 0.5 * p.y(), 0.6));
    }
    body.weights = capsule_weights(body.template_mesh.positions, body.parts);
    return body;
}

// A moderate test pose: both arms bent, a slight torso twist and a small
// root offset. `scale` shrinks every angle and the translation together.
inline Pose make_test_pose(const Rig& rig, double scale = 1.0) {
    Pose pose = Pose::identity(rig.joint_count());
    pose.root_translation = scale * Vec3(0.05, 0.02, -0.03);
    pose.rotations[0] = Quat(Eigen::AngleAxisd(0.15 * scale, Vec3::UnitY()));
    pose.rotations[3] = Quat(Eigen::AngleAxisd(-0.6 * scale, Vec3::UnitZ()));  // left arm down
    pose.rotations[4] = Quat(Eigen::AngleAxisd(0.5 * scale, Vec3::UnitY()));   // left forearm forward
    pose.rotations[5] = Quat(Eigen::AngleAxisd(0.4 * scale, Vec3::UnitZ()));   // right arm down
    return pose;
}

// --------------------------------------------------------------------------
// Random rigs, poses and weights for property tests.

inline Rig make_random_rig(std::size_t joints, Rng& rng) {
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    Rig rig;
    for (std::size_t i = 0; i < joints; ++i) {
        Joint j;
        j.name = "j" + std::to_string(i);
        if (i == 0) {
            j.parent = -1;
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            j.parent = static_cast<int>(pick(rng));
        }
        j.rest_position = Vec3(uni(rng), uni(rng), uni(rng));
        rig.joints.push_back(j);
    }
    return rig;
}

inline Quat random_unit_quat(Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Quat q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
    q.normalize();
    return q;
}

inline Pose make_random_pose(std::size_t joints, Rng& rng) {
    Pose pose;
    std::uniform_real_distribution<double> uni(-0.3, 0.3);
    for (std::size_t i = 0; i < joints; ++i) pose.rotations.push_back(random_unit_quat(rng));
    pose.root_translation = Vec3(uni(rng), uni(rng), uni(rng));
    return pose;
}

// Convex rows over up to `max_parts` randomly chosen parts.
inline SkinWeightMatrix make_random_weights(std::size_t points, int num_parts, Rng& rng,
                                            int max_parts = 4) {
    SkinWeightMatrix w;
    w.num_parts = num_parts;
    std::uniform_int_distribution<int> count(1, max_parts);
    std::uniform_int_distribution<int> part(0, num_parts - 1);
    std::uniform_real_distribution<double> uni(0.05, 1.0);
    w.rows.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        const int n = count(rng);
        std::map<int, double> acc;
        for (int k = 0; k < n; ++k) acc[part(rng)] += uni(rng);
        double sum = 0.0;
        for (const auto& [idx, v] : acc) sum += v;
        SkinWeightMatrix::Row row;
        for (const auto& [idx, v] : acc) row.push_back({idx, v / sum});
        w.rows.push_back(std::move(row));
    }
    return w;
}

inline std::vector<Vec3> random_points(std::size_t count, Rng& rng, double lo = -1.0,
                                       double hi = 1.0) {
    std::uniform_real_distribution<double> uni(lo, hi);
    std::vector<Vec3> pts;
    pts.reserve(count);
    for (std::size_t i = 0; i < count; ++i) pts.emplace_back(uni(rng), uni(rng), uni(rng));
    return pts;
}

}  // namespace repose::testsupport
