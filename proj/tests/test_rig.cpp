#include "repose/rig.hpp"

#include "support/testbody.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace repose;
using namespace repose::testsupport;

namespace {

Rig two_joint_chain() {
    Rig rig;
    rig.joints.push_back({"root", -1, Vec3(0, 0, 0)});
    rig.joints.push_back({"child", 0, Vec3(0, 1, 0)});
    return rig;
}

}  // namespace

TEST_CASE("forward kinematics of the identity pose is the identity transform") {
    Rng rng(11);
    const Rig rig = make_random_rig(8, rng);
    const BoneTransforms g = forward_kinematics(rig, Pose::identity(8));
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK((g[k].matrix() - Mat4::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("rotating the root of a two-joint chain moves the child joint") {
    const Rig rig = two_joint_chain();
    Pose pose = Pose::identity(2);
    pose.rotations[0] = Quat(Eigen::AngleAxisd(M_PI / 2.0, Vec3::UnitZ()));
    const BoneTransforms g = forward_kinematics(rig, pose);
    // child rest position (0,1,0) lands at (-1,0,0)
    const Vec3 moved = g[1] * rig.joints[1].rest_position;
    CHECK((moved - Vec3(-1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("identity rotations with a root translation give pure translations") {
    Rng rng(12);
    const Rig rig = make_random_rig(6, rng);
    Pose pose = Pose::identity(6);
    pose.root_translation = Vec3(0.2, -0.1, 0.7);
    const BoneTransforms g = forward_kinematics(rig, pose);
    for (std::size_t k = 0; k < g.size(); ++k) {
        CHECK((g[k].linear() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((g[k].translation() - pose.root_translation).norm() < 1e-12);
    }
}

TEST_CASE("forward kinematics rejects bad poses") {
    const Rig rig = two_joint_chain();
    Pose short_pose = Pose::identity(1);
    CHECK_THROWS_AS(forward_kinematics(rig, short_pose), std::invalid_argument);
    Pose bad_quat = Pose::identity(2);
    bad_quat.rotations[1] = Quat(1.1, 0, 0, 0);  // not unit
    CHECK_THROWS_AS(forward_kinematics(rig, bad_quat), std::invalid_argument);
}

TEST_CASE("rig validation catches malformed trees") {
    Rig two_roots;
    two_roots.joints.push_back({"a", -1, Vec3::Zero()});
    two_roots.joints.push_back({"b", -1, Vec3::Zero()});
    CHECK_THROWS_AS(two_roots.validate(), std::invalid_argument);

    Rig cycle;
    cycle.joints.push_back({"a", 1, Vec3::Zero()});
    cycle.joints.push_back({"b", 0, Vec3::Zero()});
    CHECK_THROWS_AS(cycle.validate(), std::invalid_argument);
}

TEST_CASE("lbs_apply special cases") {
    Rng rng(13);
    const std::vector<Vec3> pts = random_points(64, rng);

    SECTION("identity transforms reproduce the input exactly") {
        BoneTransforms g;
        g.transforms.assign(3, Affine3::Identity());
        const SkinWeightMatrix one_hot = SkinWeightMatrix::single_part(pts.size(), 2, 3);
        const std::vector<Vec3> exact = lbs_apply(pts, one_hot, g);
        for (std::size_t i = 0; i < pts.size(); ++i) CHECK((exact[i] - pts[i]).norm() == 0.0);
        // convex rows sum to 1 only within floating point
        const SkinWeightMatrix w = make_random_weights(pts.size(), 3, rng);
        const std::vector<Vec3> blended = lbs_apply(pts, w, g);
        for (std::size_t i = 0; i < pts.size(); ++i) CHECK((blended[i] - pts[i]).norm() < 1e-12);
    }

    SECTION("full weight on one translated part shifts every point") {
        BoneTransforms g;
        g.transforms.assign(2, Affine3::Identity());
        g.transforms[1].translate(Vec3(0.3, 0, 0));
        const SkinWeightMatrix w = SkinWeightMatrix::single_part(pts.size(), 1, 2);
        const std::vector<Vec3> out = lbs_apply(pts, w, g);
        for (std::size_t i = 0; i < pts.size(); ++i)
            CHECK((out[i] - (pts[i] + Vec3(0.3, 0, 0))).norm() < 1e-15);
    }

    SECTION("a half/half blend of identity and translation gives half the shift") {
        BoneTransforms g;
        g.transforms.assign(2, Affine3::Identity());
        const Vec3 t(0.4, -0.2, 0.6);
        g.transforms[1].translate(t);
        SkinWeightMatrix w;
        w.num_parts = 2;
        w.rows.assign(pts.size(), {{0, 0.5}, {1, 0.5}});
        const std::vector<Vec3> out = lbs_apply(pts, w, g);
        for (std::size_t i = 0; i < pts.size(); ++i)
            CHECK((out[i] - (pts[i] + 0.5 * t)).norm() < 1e-15);
    }

    SECTION("row count mismatch and unassigned rows are rejected") {
        BoneTransforms g;
        g.transforms.assign(2, Affine3::Identity());
        SkinWeightMatrix w = SkinWeightMatrix::single_part(pts.size() - 1, 0, 2);
        CHECK_THROWS_AS(lbs_apply(pts, w, g), std::invalid_argument);
        w = SkinWeightMatrix::single_part(pts.size(), 0, 2);
        w.rows[3].clear();
        CHECK_THROWS_AS(lbs_apply(pts, w, g), std::invalid_argument);
    }
}

TEST_CASE("lbs_invert inverts a single rigid bone") {
    BoneTransforms g;
    Affine3 m = Affine3::Identity();
    m.translate(Vec3(1, 0, 0));          // applied after the rotation
    m.rotate(Eigen::AngleAxisd(M_PI / 2.0, Vec3::UnitZ()));
    g.transforms = {m};
    // forward: (0,0,0) -> rotate (0,0,0) -> translate -> (1,0,0)
    const SkinWeightMatrix w = SkinWeightMatrix::single_part(1, 0, 1);
    const LbsInverseResult inv = lbs_invert({Vec3(1, 0, 0)}, w, g);
    REQUIRE(inv.all_valid());
    CHECK((inv.positions[0] - Vec3(0, 0, 0)).norm() < 1e-12);
}

TEST_CASE("lbs_invert round-trips through lbs_apply") {
    Rng rng(14);
    const Rig rig = make_random_rig(10, rng);
    const Pose pose = make_random_pose(10, rng);
    const BoneTransforms g = forward_kinematics(rig, pose);
    const std::vector<Vec3> pts = random_points(1000, rng);
    const SkinWeightMatrix w = make_random_weights(pts.size(), 10, rng);

    const std::vector<Vec3> posed = lbs_apply(pts, w, g);
    const LbsInverseResult inv = lbs_invert(posed, w, g);
    REQUIRE(inv.all_valid());
    double max_err = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        max_err = std::max(max_err, (inv.positions[i] - pts[i]).norm());
    CHECK(max_err < 1e-6);
}

TEST_CASE("lbs_invert flags singular blends instead of inverting them") {
    // two rotations that average to a rank-deficient linear part:
    // diag(1,1,1) and diag(-1,-1,1) (180 degrees about z) blend to diag(0,0,1)
    BoneTransforms g;
    g.transforms.assign(2, Affine3::Identity());
    g.transforms[1].rotate(Eigen::AngleAxisd(M_PI, Vec3::UnitZ()));
    SkinWeightMatrix w;
    w.num_parts = 2;
    w.rows = {{{0, 0.5}, {1, 0.5}}};
    const LbsInverseResult inv = lbs_invert({Vec3(0.1, 0.2, 0.3)}, w, g);
    CHECK(inv.flagged == 1);
    CHECK(!inv.valid[0]);
    CHECK(inv.condition[0] > 1e8);
    // the identity round trip still holds for points the inversion skipped
    CHECK((inv.positions[0] - Vec3(0.1, 0.2, 0.3)).norm() == 0.0);
}

TEST_CASE("single-bone skinning is an exact rigid motion") {
    Rng rng(15);
    BoneTransforms g;
    Affine3 m = Affine3::Identity();
    m.translate(Vec3(0.1, 0.2, 0.3));
    m.rotate(random_unit_quat(rng));
    g.transforms = {m};
    const std::vector<Vec3> pts = random_points(128, rng);
    const SkinWeightMatrix w = SkinWeightMatrix::single_part(pts.size(), 0, 1);
    const std::vector<Vec3> out = lbs_apply(pts, w, g);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double before = (pts[i] - pts[i - 1]).norm();
        const double after = (out[i] - out[i - 1]).norm();
        CHECK(std::abs(before - after) < 1e-6);
    }
}

TEST_CASE("rotations stay orthonormal through a 20-deep chain") {
    Rng rng(16);
    Rig rig;
    for (int i = 0; i < 20; ++i) {
        Joint j;
        j.name = "c" + std::to_string(i);
        j.parent = i - 1;
        j.rest_position = Vec3(0, 0.1 * i, 0);
        rig.joints.push_back(j);
    }
    Pose pose;
    for (int i = 0; i < 20; ++i) pose.rotations.push_back(random_unit_quat(rng));
    const BoneTransforms g = forward_kinematics(rig, pose);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const Mat3 r = g[k].linear();
        CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-5);
        CHECK(r.determinant() > 0.0);
    }
}

TEST_CASE("repose_mesh keeps connectivity and recomputes normals") {
    const TriMesh mesh = make_icosphere(0.5, 2);
    const SkinWeightMatrix w = SkinWeightMatrix::single_part(mesh.vertex_count(), 0, 1);
    Rig rig;
    rig.joints.push_back({"root", -1, Vec3::Zero()});

    SECTION("identity pose leaves the mesh unchanged") {
        const TriMesh out = repose_mesh(mesh, w, rig, Pose::identity(1));
        REQUIRE(out.faces == mesh.faces);
        for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
            CHECK((out.positions[i] - mesh.positions[i]).norm() < 1e-7);
    }

    SECTION("a rigid whole-mesh rotation preserves edge lengths") {
        Pose pose = Pose::identity(1);
        pose.rotations[0] = Quat(Eigen::AngleAxisd(0.8, Vec3(1, 2, 3).normalized()));
        pose.root_translation = Vec3(0.3, 0, -0.2);
        const TriMesh out = repose_mesh(mesh, w, rig, pose);
        for (const auto& t : mesh.faces) {
            const double a = (mesh.vert(t[0]) - mesh.vert(t[1])).norm();
            const double b = (out.vert(t[0]) - out.vert(t[1])).norm();
            CHECK(std::abs(a - b) < 1e-6);
        }
    }

    SECTION("an animation track produces one mesh per frame with identical topology") {
        Rng rng(17);
        for (int frame = 0; frame < 10; ++frame) {
            Pose pose = Pose::identity(1);
            pose.rotations[0] = random_unit_quat(rng);
            pose.root_translation = Vec3(0.01 * frame, 0, 0);
            const TriMesh out = repose_mesh(mesh, w, rig, pose);
            CHECK(out.faces == mesh.faces);
            CHECK(out.vertex_count() == mesh.vertex_count());
            CHECK(out.has_normals());
        }
    }
}

TEST_CASE("skinning an articulated body bends the arm where the weights say so") {
    const SyntheticBody body = make_synthetic_body(48);
    REQUIRE(is_watertight(body.template_mesh));
    const Pose pose = make_test_pose(body.rig);
    const TriMesh posed = repose_mesh(body.template_mesh, body.weights, body.rig, pose);
    // the left hand tip moves, the pelvis barely does
    Vec3 lo, hi;
    posed.bounds(&lo, &hi);
    CHECK((hi - lo).norm() > 0.5);
    double moved = 0.0;
    for (std::size_t i = 0; i < posed.vertex_count(); ++i)
        moved = std::max(moved, (posed.positions[i] - body.template_mesh.positions[i]).norm());
    CHECK(moved > 0.15);
}
