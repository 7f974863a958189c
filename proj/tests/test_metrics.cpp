#include "repose/metrics.hpp"

#include "support/testbody.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace repose;
using namespace repose::testsupport;

namespace {

// Brute-force point-to-surface over every triangle, no spatial index.
double brute_p2s_cm(const TriMesh& from, const TriMesh& to, std::size_t samples, std::uint64_t seed) {
    const FieldSampleSet set = sample_surface(from, samples, seed);
    double sum = 0.0;
    for (const Vec3& p : set.positions) {
        double best = std::numeric_limits<double>::max();
        for (const auto& t : to.faces)
            best = std::min(best, closest_point_triangle(p, to.vert(t[0]), to.vert(t[1]), to.vert(t[2])).dist2);
        sum += std::sqrt(best);
    }
    return 100.0 * sum / static_cast<double>(samples);
}

TriMesh translated(const TriMesh& mesh, const Vec3& t) {
    TriMesh out = mesh;
    for (Vec3& p : out.positions) p += t;
    return out;
}

}  // namespace

TEST_CASE("point-to-surface distance") {
    const TriMesh cube = make_cube();

    SECTION("identical meshes report zero") {
        CHECK(p2s(cube, cube, 2000, 5) < 1e-6);
    }

    SECTION("a 1 cm translation costs about a third of a centimeter") {
        // Only the two x-faces (1/3 of the area) sit a full centimeter from
        // the shifted cube; the rest lies on it. Dense brute-force sampling
        // puts the mean at 0.332 cm.
        const TriMesh shifted = translated(cube, Vec3(0.01, 0, 0));
        const double value = p2s(cube, shifted, 20000, 6);
        CHECK(value <= 1.0);
        CHECK(value == Catch::Approx(0.332).epsilon(0.05));
    }

    SECTION("the estimate is stable across seeds") {
        // near-constant distance field: the sampling noise is tiny
        const TriMesh inner = make_icosphere(0.50, 3);
        const TriMesh outer = make_icosphere(0.52, 3);
        const double a = p2s(inner, outer, 10000, 1);
        const double b = p2s(inner, outer, 10000, 2);
        CHECK(std::abs(a - b) / a < 0.02);
        // the bimodal cube distances carry more variance; same-seed sampling
        // against the brute-force oracle pins that case instead
        const TriMesh shifted = translated(cube, Vec3(0.01, 0, 0));
        const double c = p2s(cube, shifted, 10000, 1);
        const double d = p2s(cube, shifted, 40000, 2);
        CHECK(std::abs(c - d) / d < 0.05);
    }

    SECTION("translation covariance: moving both meshes together changes nothing") {
        const TriMesh shifted = translated(cube, Vec3(0.01, 0, 0));
        const double base = p2s(cube, shifted, 5000, 3);
        const Vec3 offset(1.7, -2.3, 0.9);
        const double moved = p2s(translated(cube, offset), translated(shifted, offset), 5000, 3);
        CHECK(std::abs(base - moved) < 1e-9);
    }

    SECTION("doubling the sample count moves the estimate by under 2%") {
        const TriMesh shifted = translated(cube, Vec3(0.01, 0, 0));
        const double a = p2s(cube, shifted, 10000, 4);
        const double b = p2s(cube, shifted, 20000, 4);
        CHECK(std::abs(a - b) / a < 0.02);
    }
}

TEST_CASE("chamfer distance") {
    SECTION("self-distance is zero, symmetry is exact") {
        const TriMesh sphere = make_icosphere(0.5, 3);
        CHECK(chamfer(sphere, sphere, 2000, 9) < 1e-6);
        const TriMesh other = translated(sphere, Vec3(0.02, 0.01, 0.0));
        CHECK(chamfer(sphere, other, 3000, 9) == chamfer(other, sphere, 3000, 9));
    }

    SECTION("concentric spheres 2 cm apart measure 2 cm") {
        const TriMesh a = make_icosphere(0.50, 4);
        const TriMesh b = make_icosphere(0.52, 4);
        CHECK(chamfer(a, b, 10000, 10) == Catch::Approx(2.0).epsilon(0.05));
    }
}

TEST_CASE("chamfer and p2s agree with the brute-force oracle") {
    // small meshes so the all-pairs reference stays cheap
    const TriMesh a = make_icosphere(0.3, 2);               // 320 faces
    const TriMesh b = translated(make_cube(Vec3::Zero(), 0.5), Vec3(0.05, 0.02, 0.0));
    REQUIRE(a.face_count() <= 400);
    const double fast = p2s(a, b, 10000, 12);
    const double slow = brute_p2s_cm(a, b, 10000, 12);
    CHECK(fast == Catch::Approx(slow).epsilon(1e-9));  // same samples, exact same distances
}

TEST_CASE("normal re-projection error") {
    const OrthoCamera cam = OrthoCamera::look_at(Vec3(0, 0, 2), Vec3::Zero(), Vec3(0, 1, 0), 128, 128,
                                                 0.01, 0.0, 4.0);

    SECTION("identical meshes give zero error") {
        const TriMesh sphere = make_icosphere(0.4, 3);
        CHECK(normal_reprojection_error(sphere, sphere, cam) == 0.0);
    }

    SECTION("planes whose normals are 90 degrees apart differ by sqrt(2)") {
        // both planes tilted 45 degrees about y, in opposite directions, so
        // both stay visible from the front: normals (-1,0,1)/sqrt(2) and
        // (1,0,1)/sqrt(2), which are orthogonal
        const double s = 0.4;
        TriMesh a, b;
        a.positions = {Vec3(-s, -s, -s), Vec3(s, -s, s), Vec3(s, s, s), Vec3(-s, s, -s)};
        a.faces = {{0, 1, 2}, {0, 2, 3}};
        b.positions = {Vec3(-s, -s, s), Vec3(s, -s, -s), Vec3(s, s, -s), Vec3(-s, s, s)};
        b.faces = {{0, 1, 2}, {0, 2, 3}};
        const double err = normal_reprojection_error(a, b, cam);
        CHECK(err == Catch::Approx(std::sqrt(2.0)).margin(1e-9));
    }

    SECTION("the hard rasterizer matches a naive per-pixel reference") {
        Rng rng(61);
        std::uniform_real_distribution<double> uni(-0.4, 0.4);
        TriMesh mesh;
        for (int i = 0; i < 30; ++i) mesh.positions.emplace_back(uni(rng), uni(rng), uni(rng));
        for (int i = 0; i < 10; ++i) mesh.faces.push_back({3 * i, 3 * i + 1, 3 * i + 2});

        const NormalRaster fast = rasterize_normals(mesh, cam);

        // reference: for every pixel, loop all triangles and solve the 2x2
        // barycentric system directly
        Image ref_normals = Image::zeros(cam.width, cam.height, 3);
        Image ref_mask = Image::zeros(cam.width, cam.height, 1);
        Image ref_depth = Image::zeros(cam.width, cam.height, 1);
        for (double& z : ref_depth.data) z = -std::numeric_limits<double>::max();
        for (int y = 0; y < cam.height; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                const Vec2 q(x + 0.5, y + 0.5);
                for (std::size_t f = 0; f < mesh.face_count(); ++f) {
                    const auto& t = mesh.faces[f];
                    const Vec2 p0 = cam.to_pixel(mesh.vert(t[0]));
                    const Vec2 p1 = cam.to_pixel(mesh.vert(t[1]));
                    const Vec2 p2 = cam.to_pixel(mesh.vert(t[2]));
                    const Eigen::Matrix2d m = (Eigen::Matrix2d() << (p1 - p0).x(), (p2 - p0).x(),
                                               (p1 - p0).y(), (p2 - p0).y()).finished();
                    if (std::abs(m.determinant()) < 1e-12) continue;
                    const Vec2 uv = m.inverse() * (q - p0);
                    if (uv.x() < 0 || uv.y() < 0 || uv.x() + uv.y() > 1) continue;
                    const double z0 = (cam.far_depth - cam.depth_of(mesh.vert(t[0]))) / (cam.far_depth - cam.near_depth);
                    const double z1 = (cam.far_depth - cam.depth_of(mesh.vert(t[1]))) / (cam.far_depth - cam.near_depth);
                    const double z2 = (cam.far_depth - cam.depth_of(mesh.vert(t[2]))) / (cam.far_depth - cam.near_depth);
                    const double z = z0 + uv.x() * (z1 - z0) + uv.y() * (z2 - z0);
                    if (z <= ref_depth.at(x, y, 0)) continue;
                    ref_depth.at(x, y, 0) = z;
                    ref_normals.set_pixel3(x, y, mesh.face_normal(f));
                    ref_mask.at(x, y, 0) = 1.0f;
                }
            }
        }

        std::size_t mask_diff = 0;
        double max_diff = 0.0;
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x) {
                if (fast.mask.at(x, y, 0) != ref_mask.at(x, y, 0)) {
                    ++mask_diff;
                    continue;
                }
                if (fast.mask.at(x, y, 0) < 0.5f) continue;
                max_diff = std::max(max_diff, (fast.normals.pixel3(x, y) - ref_normals.pixel3(x, y)).norm());
            }
        CHECK(mask_diff == 0);
        CHECK(max_diff < 1e-6);
    }
}

TEST_CASE("metric report bundles the directional components") {
    const TriMesh a = make_icosphere(0.5, 3);
    const TriMesh b = translated(a, Vec3(0.01, 0, 0));
    const OrthoCamera cam = OrthoCamera::look_at(Vec3(0, 0, 2), Vec3::Zero(), Vec3(0, 1, 0), 64, 64,
                                                 0.02, 0.0, 4.0);
    const MetricReport r = evaluate_reconstruction(a, b, &cam, 2000, 3);
    CHECK(r.chamfer_cm == Catch::Approx(0.5 * (r.p2s_ab_cm + r.p2s_ba_cm)));
    CHECK(r.p2s_cm == r.p2s_ab_cm);
    CHECK(r.p2s_cm > 0.0);
    CHECK(r.normal_error >= 0.0);
    CHECK(r.samples == 2000);
}
