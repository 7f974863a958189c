// Renders a ring of colored spheres in front of a darker backdrop ring and
// writes color/normal/alpha images to the current directory.

#include "repose/image.hpp"
#include "repose/render.hpp"

#include <cmath>
#include <iostream>

using namespace repose;

int main() {
    SphereCloud cloud;
    cloud.radius = 0.02;
    const int count = 48;
    for (int i = 0; i < count; ++i) {
        const double a = 2.0 * M_PI * i / count;
        // foreground ring
        cloud.centers.emplace_back(0.18 * std::cos(a), 0.18 * std::sin(a), 0.1);
        cloud.colors.emplace_back(0.5 + 0.5 * std::cos(a), 0.5 + 0.5 * std::sin(a), 0.8);
        cloud.normals.push_back(Vec3(std::cos(a), std::sin(a), 1.0).normalized());
        cloud.opacities.push_back(1.0);
        // larger, half-transparent backdrop ring
        cloud.centers.emplace_back(0.26 * std::cos(a + 0.05), 0.26 * std::sin(a + 0.05), -0.1);
        cloud.colors.emplace_back(0.25, 0.25, 0.3);
        cloud.normals.push_back(Vec3(0, 0, 1));
        cloud.opacities.push_back(0.5);
    }

    const OrthoCamera cam = OrthoCamera::look_at(Vec3(0, 0, 1.0), Vec3::Zero(), Vec3(0, 1, 0),
                                                 256, 256, 0.0025, 0.0, 2.0);
    RenderSettings settings;
    settings.background_color = Vec3(0.05, 0.05, 0.08);
    const RenderOutput out = render(cloud, cam, settings);

    write_png(out.color, "splat_color.png");
    write_png(remap_normal_for_display(out.normal), "splat_normal.png");
    write_pfm(out.alpha, "splat_alpha.pfm");
    std::cout << "wrote splat_color.png, splat_normal.png, splat_alpha.pfm\n";
    return 0;
}
