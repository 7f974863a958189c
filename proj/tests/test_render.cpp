#include "repose/render.hpp"

#include "repose/refine.hpp"
#include "support/testbody.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace repose;
using namespace repose::testsupport;

namespace {

OrthoCamera front_camera(int size = 64, double scale = 0.01) {
    return OrthoCamera::look_at(Vec3(0, 0, 1.5), Vec3::Zero(), Vec3(0, 1, 0), size, size, scale, 0.0, 3.0);
}

SphereCloud random_cloud(std::size_t n, Rng& rng, double radius = 0.03) {
    std::uniform_real_distribution<double> pos(-0.25, 0.25);
    std::uniform_real_distribution<double> col(0.0, 1.0);
    std::uniform_real_distribution<double> alpha(0.05, 1.0);
    SphereCloud cloud;
    cloud.radius = radius;
    for (std::size_t i = 0; i < n; ++i) {
        cloud.centers.emplace_back(pos(rng), pos(rng), pos(rng));
        cloud.colors.emplace_back(col(rng), col(rng), col(rng));
        cloud.normals.push_back(Vec3(col(rng) - 0.5, col(rng) - 0.5, col(rng) + 0.5).normalized());
        cloud.opacities.push_back(alpha(rng));
    }
    return cloud;
}

Image random_image(int w, int h, int c, Rng& rng) {
    Image img = Image::zeros(w, h, c);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (double& v : img.data) v = uni(rng);
    return img;
}

double image_l1(const SphereCloud& cloud, const OrthoCamera& cam, const RenderSettings& settings,
                const Image& target_color, const Image& target_normal) {
    const RenderOutput out = render(cloud, cam, settings);
    const double lc = loss_render_l1(out.color, target_color, nullptr);
    const double ln = loss_render_l1(out.normal, target_normal, nullptr);
    return lc + ln;
}

}  // namespace

TEST_CASE("orthographic projection endpoints and lateral offsets") {
    OrthoCamera cam = front_camera(64, 0.005);

    SECTION("depth at near maps to z=1, depth at far to z=0") {
        SphereCloud cloud;
        cloud.radius = 0.01;
        cloud.centers = {Vec3(0, 0, 1.5), Vec3(0, 0, 1.5 - 3.0)};  // near and far planes
        cloud.colors.assign(2, Vec3::Zero());
        cloud.normals.assign(2, Vec3(0, 0, 1));
        cloud.opacities.assign(2, 1.0);
        const auto proj = project(cloud, cam);
        CHECK(proj[0].z == Catch::Approx(1.0).margin(1e-12));
        CHECK(proj[1].z == Catch::Approx(0.0).margin(1e-12));
        CHECK(proj[0].in_depth_range);
        CHECK(proj[1].in_depth_range);
    }

    SECTION("0.05 m lateral offset at 0.005 m/px moves the projection by 10 px") {
        const ProjectedSphere a = project_sphere(Vec3(0, 0, 0), 0.01, cam);
        const ProjectedSphere b = project_sphere(Vec3(0.05, 0, 0), 0.01, cam);
        CHECK(b.center_px.x() - a.center_px.x() == Catch::Approx(10.0).margin(1e-12));
    }

    SECTION("spheres outside the depth range are clamped and flagged") {
        const ProjectedSphere behind = project_sphere(Vec3(0, 0, 2.0), 0.01, cam);
        CHECK(!behind.in_depth_range);
        CHECK(behind.z == 1.0);
    }
}

TEST_CASE("coverage is the logistic of the signed circle distance") {
    ProjectedSphere s;
    s.center_px = Vec2(32, 32);
    s.radius_px = 5.0;
    CHECK(coverage(s, Vec2(37, 32)) == Catch::Approx(0.5).margin(1e-12));       // on the rim
    CHECK(coverage(s, Vec2(32, 32)) > 0.99);                                    // deep inside
    CHECK(coverage(s, Vec2(60, 32)) < 1e-9);                                    // far outside
    CHECK(coverage(s, Vec2(38, 32)) == Catch::Approx(1.0 / (1.0 + std::exp(1.0))).margin(1e-12));
}

TEST_CASE("blend weights follow the opacity-aware softmax") {
    SECTION("a single solid contributor takes the whole pixel") {
        const BlendWeights w = blend_pixel({{1.0, 0.5, 1.0}}, 1e-5, 1e-5);
        CHECK(w.weights[0] == Catch::Approx(1.0).margin(1e-12));
        CHECK(w.background == Catch::Approx(0.0).margin(1e-12));
    }

    SECTION("zero opacity gives exactly zero weight") {
        const BlendWeights w = blend_pixel({{0.9, 0.8, 0.0}, {0.5, 0.2, 0.7}}, 1e-5, 1e-5);
        CHECK(w.weights[0] == 0.0);
        CHECK(w.weights[1] + w.background == Catch::Approx(1.0).margin(1e-12));
    }

    SECTION("a depth gap of 10 gamma gives a weight ratio of e^10") {
        const double gamma = 1e-5;
        const BlendWeights w = blend_pixel({{0.7, 0.5 + 10 * gamma, 1.0}, {0.7, 0.5, 1.0}}, gamma, 1e-5);
        CHECK(w.weights[0] / w.weights[1] == Catch::Approx(std::exp(10.0)).epsilon(1e-9));
    }

    SECTION("weights always sum to one with the background") {
        Rng rng(41);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<BlendContribution> contribs(1 + static_cast<std::size_t>(uni(rng) * 20));
            for (auto& c : contribs) c = {uni(rng) * 0.999 + 0.001, uni(rng), uni(rng)};
            const BlendWeights w = blend_pixel(contribs, 1e-5, 1e-5);
            double sum = w.background;
            for (const double x : w.weights) {
                CHECK(x >= 0.0);
                sum += x;
            }
            CHECK(sum == Catch::Approx(1.0).margin(1e-5));
        }
    }

    SECTION("no contributors leaves everything to the background") {
        const BlendWeights w = blend_pixel({}, 1e-5, 1e-5);
        CHECK(w.background == 1.0);
    }

    SECTION("occlusion limit: a 20 gamma depth gap suppresses the far sphere below 1e-6") {
        const double gamma = 1e-5;
        const BlendWeights w = blend_pixel({{0.5, 0.7, 1.0}, {0.5, 0.7 - 20 * gamma, 1.0}}, gamma, 1e-5);
        CHECK(w.weights[1] / w.weights[0] < 1e-6);
    }

    SECTION("raising opacity never lowers the own weight") {
        Rng rng(42);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<BlendContribution> contribs(5);
            for (auto& c : contribs) c = {uni(rng) * 0.999 + 0.001, uni(rng), uni(rng)};
            // moderate gamma keeps the weights comparable across alphas
            const double gamma = 0.25;
            const BlendWeights before = blend_pixel(contribs, gamma, 1e-5);
            auto larger = contribs;
            larger[2].alpha = std::min(1.0, larger[2].alpha + 0.05);
            const BlendWeights after = blend_pixel(larger, gamma, 1e-5);
            CHECK(after.weights[2] >= before.weights[2] - 1e-9);
        }
    }
}

TEST_CASE("rendering basics") {
    const OrthoCamera cam = front_camera();

    SECTION("an empty cloud renders the background everywhere") {
        SphereCloud empty;
        RenderSettings settings;
        settings.background_color = Vec3(0.1, 0.2, 0.3);
        const RenderOutput out = render(empty, cam, settings);
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x) {
                CHECK((out.color.pixel3(x, y) - Vec3(0.1, 0.2, 0.3)).norm() < 1e-6);
                CHECK(out.alpha.at(x, y, 0) == 0.0f);
            }
    }

    SECTION("one opaque sphere colors its center pixel exactly") {
        SphereCloud cloud;
        cloud.radius = 0.08;
        cloud.centers = {Vec3(0, 0, 0)};
        cloud.colors = {Vec3(0.8, 0.3, 0.1)};
        cloud.normals = {Vec3(0, 0, 1)};
        cloud.opacities = {1.0};
        const RenderOutput out = render(cloud, cam);
        const Vec3 center = out.color.pixel3(cam.width / 2, cam.height / 2);
        CHECK((center - Vec3(0.8, 0.3, 0.1)).norm() < 1e-6);
        CHECK(out.alpha.at(cam.width / 2, cam.height / 2, 0) > 0.999f);
    }

    SECTION("an opaque front sphere occludes a rear sphere") {
        SphereCloud cloud;
        cloud.radius = 0.08;
        cloud.centers = {Vec3(0, 0, 0.2), Vec3(0, 0, 0.0)};  // first is closer to the camera
        cloud.colors = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
        cloud.normals = {Vec3(0, 0, 1), Vec3(0, 0, 1)};
        cloud.opacities = {1.0, 1.0};
        const RenderOutput out = render(cloud, cam);
        const Vec3 center = out.color.pixel3(cam.width / 2, cam.height / 2);
        CHECK(center.y() < 1e-3);  // the occluded green contributes nothing visible
        CHECK(center.x() > 0.999);
    }

    SECTION("rendering is invariant to sphere order") {
        Rng rng(43);
        SphereCloud cloud = random_cloud(30, rng);
        const RenderOutput a = render(cloud, cam);
        // reverse the sphere order
        std::reverse(cloud.centers.begin(), cloud.centers.end());
        std::reverse(cloud.colors.begin(), cloud.colors.end());
        std::reverse(cloud.normals.begin(), cloud.normals.end());
        std::reverse(cloud.opacities.begin(), cloud.opacities.end());
        const RenderOutput b = render(cloud, cam);
        double max_diff = 0.0;
        for (std::size_t i = 0; i < a.color.data.size(); ++i)
            max_diff = std::max(max_diff, std::abs(static_cast<double>(a.color.data[i]) - b.color.data[i]));
        CHECK(max_diff < 1e-6);
    }

    SECTION("per-pixel record weights sum to one with the background") {
        Rng rng(44);
        SphereCloud cloud = random_cloud(12, rng);
        RenderSettings settings;
        settings.retain_records = true;
        settings.top_k = 64;  // no eviction at this count
        const RenderOutput out = render(cloud, cam, settings);
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x) {
                const std::size_t pix = static_cast<std::size_t>(y) * 64 + static_cast<std::size_t>(x);
                double sum = 1.0 - out.alpha.at(x, y, 0);  // background weight
                for (std::int32_t k = 0; k < out.record_count[pix]; ++k)
                    sum += out.records[pix * 64 + static_cast<std::size_t>(k)].weight;
                CHECK(sum == Catch::Approx(1.0).margin(1e-5));
            }
    }

    SECTION("the record cap does not change the forward image") {
        Rng rng(45);
        const SphereCloud cloud = random_cloud(40, rng);
        RenderSettings capped;
        capped.retain_records = true;
        capped.top_k = 4;
        RenderSettings uncapped;
        uncapped.retain_records = true;
        uncapped.top_k = 64;
        const RenderOutput a = render(cloud, cam, capped);
        const RenderOutput b = render(cloud, cam, uncapped);
        CHECK(a.color.data == b.color.data);
        CHECK(a.normal.data == b.normal.data);
    }
}

TEST_CASE("analytic gradients match finite differences") {
    // Moderate gamma keeps the softmax smooth enough for central differences;
    // the formula is identical at any temperature.
    Rng rng(46);
    const OrthoCamera cam = front_camera(48, 0.02);
    RenderSettings settings;
    settings.gamma = 0.1;
    settings.retain_records = true;
    settings.top_k = 16;

    SphereCloud cloud = random_cloud(5, rng, 0.08);
    // targets offset from the rendered image keep every residual away from
    // the L1 kink, so the finite-difference step never crosses a sign change
    const RenderOutput base = render(cloud, cam, settings);
    Image target_color = base.color;
    for (double& v : target_color.data) v -= 0.3;
    Image target_normal = base.normal;
    for (double& v : target_normal.data) v -= 0.3;

    const RenderOutput out = render(cloud, cam, settings);
    Image grad_color, grad_normal;
    loss_render_l1(out.color, target_color, &grad_color);
    loss_render_l1(out.normal, target_normal, &grad_normal);
    const SceneGradients grads = render_backward(cloud, out, &grad_color, &grad_normal);

    auto loss_at = [&](SphereCloud& c) {
        return image_l1(c, cam, settings, target_color, target_normal);
    };

    SECTION("color gradients") {
        const double h = 1e-3;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            for (int ch = 0; ch < 3; ++ch) {
                SphereCloud plus = cloud, minus = cloud;
                plus.colors[i][ch] += h;
                minus.colors[i][ch] -= h;
                const double fd = (loss_at(plus) - loss_at(minus)) / (2 * h);
                const double an = grads.colors[i][ch];
                CHECK(std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}) < 1e-4);
            }
        }
    }

    SECTION("opacity gradients") {
        const double h = 1e-4;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            SphereCloud plus = cloud, minus = cloud;
            plus.opacities[i] += h;
            minus.opacities[i] -= h;
            const double fd = (loss_at(plus) - loss_at(minus)) / (2 * h);
            const double an = grads.opacities[i];
            CHECK(std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}) < 1e-4);
        }
    }

    SECTION("normal gradients") {
        // small step keeps the perturbed normals unit within the cloud tolerance
        const double h = 1e-6;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            for (int ch = 0; ch < 3; ++ch) {
                SphereCloud plus = cloud, minus = cloud;
                plus.normals[i][ch] += h;
                minus.normals[i][ch] -= h;
                const double fd = (loss_at(plus) - loss_at(minus)) / (2 * h);
                const double an = grads.normals[i][ch];
                CHECK(std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8}) < 1e-3);
            }
        }
    }
}

TEST_CASE("spheres outside the image receive zero gradients") {
    const OrthoCamera cam = front_camera(32, 0.005);
    SphereCloud cloud;
    cloud.radius = 0.01;
    cloud.centers = {Vec3(0, 0, 0), Vec3(5.0, 0, 0)};  // second far off screen
    cloud.colors = {Vec3(1, 0, 0), Vec3(0, 1, 0)};
    cloud.normals = {Vec3(0, 0, 1), Vec3(0, 0, 1)};
    cloud.opacities = {1.0, 1.0};
    RenderSettings settings;
    settings.retain_records = true;
    const RenderOutput out = render(cloud, cam, settings);
    Rng rng(47);
    const Image target = random_image(32, 32, 3, rng);
    Image grad;
    loss_render_l1(out.color, target, &grad);
    const SceneGradients grads = render_backward(cloud, out, &grad, nullptr);
    CHECK(grads.colors[1].norm() == 0.0);
    CHECK(grads.opacities[1] == 0.0);
    CHECK(grads.colors[0].norm() > 0.0);
}

TEST_CASE("zero-opacity spheres get zero weight but a usable opacity gradient") {
    const OrthoCamera cam = front_camera(32, 0.01);
    SphereCloud cloud;
    cloud.radius = 0.1;
    cloud.centers = {Vec3(0, 0, 0)};
    cloud.colors = {Vec3(1, 1, 1)};
    cloud.normals = {Vec3(0, 0, 1)};
    cloud.opacities = {0.0};
    RenderSettings settings;
    settings.gamma = 0.1;
    settings.retain_records = true;
    const RenderOutput out = render(cloud, cam, settings);
    // invisible: background everywhere
    CHECK(out.alpha.at(16, 16, 0) == 0.0f);
    // pushing opacity up would brighten the pixel toward white: negative
    // gradient of the L1 distance to a white target
    Image target = Image::zeros(32, 32, 3);
    for (double& v : target.data) v = 1.0;
    Image grad;
    loss_render_l1(out.color, target, &grad);
    const SceneGradients grads = render_backward(cloud, out, &grad, nullptr);
    CHECK(grads.opacities[0] < 0.0);
}

TEST_CASE("opacity follows occupancy through the affine map") {
    CHECK(opacity_from_occupancy(0.5) == Catch::Approx(0.7).margin(1e-12));
    CHECK(opacity_from_occupancy(0.8) == 1.0);
    CHECK(opacity_from_occupancy(0.0) == Catch::Approx(0.2).margin(1e-12));
    CHECK(opacity_from_occupancy(1.0, 2.0, -1.0) == 1.0);
}

TEST_CASE("blend_pixel agrees with the full renderer") {
    // one pixel worth of contributors pushed through both paths
    Rng rng(48);
    std::uniform_real_distribution<double> uni(0.1, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<BlendContribution> contribs(6);
        for (auto& c : contribs) c = {uni(rng), uni(rng), uni(rng)};
        const BlendWeights reference = blend_pixel(contribs, 1e-5, 1e-5);
        // streaming accumulation in the same order
        detail::PixelAccum acc(1e-5 / 1e-5);
        for (const auto& c : contribs)
            acc.add(std::log(c.alpha * c.d) + c.alpha * c.z / 1e-5, Vec3::Ones(), Vec3::Zero());
        const double w_bg = std::exp(1.0 - acc.m) / acc.S;
        CHECK(w_bg == Catch::Approx(reference.background).margin(1e-12));
    }
}
