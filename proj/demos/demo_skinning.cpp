// Skins a cylinder along a two-bone chain, bends the elbow, and checks that
// the inverse deformation restores the rest shape. Writes rest/posed OBJs.

#include "repose/marching_cubes.hpp"
#include "repose/mesh_io.hpp"
#include "repose/rig.hpp"

#include <iostream>

using namespace repose;

namespace {

// capsule occupancy along the y axis from 0 to `length`
class CapsuleField final : public CanonicalField {
public:
    CapsuleField(double length, double radius) : length_(length), radius_(radius) {}
    FieldSample sample(const Vec3& p) const override {
        const double t = std::clamp(p.y(), 0.0, length_);
        const double sd = (p - Vec3(0, t, 0)).norm() - radius_;
        FieldSample s;
        s.occupancy = logistic(-sd / 0.01);
        return s;
    }

private:
    double length_, radius_;
};

}  // namespace

int main() {
    // rest shape: a capsule from y=0 to y=0.6
    const CapsuleField field(0.6, 0.08);
    const GridSpec spec = GridSpec::centered(Vec3(-0.3, -0.2, -0.3), Vec3(0.3, 1.0, 0.9), 64);
    TriMesh mesh = extract_isosurface(evaluate_on_grid(field, spec), 0.5);

    Rig rig;
    rig.joints.push_back({"base", -1, Vec3(0, 0, 0)});
    rig.joints.push_back({"elbow", 0, Vec3(0, 0.3, 0)});

    // weights: lower half on the base, upper half on the elbow, blended in between
    SkinWeightMatrix weights;
    weights.num_parts = 2;
    for (const Vec3& p : mesh.positions) {
        const double t = std::clamp((p.y() - 0.25) / 0.1, 0.0, 1.0);
        SkinWeightMatrix::Row row;
        if (t < 1.0) row.push_back({0, 1.0 - t});
        if (t > 0.0) row.push_back({1, t});
        weights.rows.push_back(row);
    }

    Pose pose = Pose::identity(2);
    pose.rotations[1] = Quat(Eigen::AngleAxisd(M_PI / 3.0, Vec3::UnitX()));  // bend 60 degrees

    const TriMesh posed = repose_mesh(mesh, weights, rig, pose);
    write_obj(mesh, "arm_rest.obj");
    write_obj(posed, "arm_posed.obj");

    // the inverse deformation restores the rest geometry
    const BoneTransforms g = forward_kinematics(rig, pose);
    const LbsInverseResult inv = lbs_invert(posed.positions, weights, g);
    double max_err = 0.0;
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
        max_err = std::max(max_err, (inv.positions[i] - mesh.positions[i]).norm());
    std::cout << "wrote arm_rest.obj, arm_posed.obj; inverse round-trip error " << max_err << " m\n";
    return max_err < 1e-9 ? 0 : 1;
}
