#pragma once

#include "repose/bvh.hpp"
#include "repose/field.hpp"
#include "repose/image.hpp"
#include "repose/render.hpp"

#include <vector>

namespace repose {

struct MetricReport {
    double p2s_cm = 0.0;          // reconstruction -> ground truth
    double chamfer_cm = 0.0;      // symmetric
    double normal_error = 0.0;    // mean per-pixel L2 over the common coverage
    double p2s_ab_cm = 0.0;       // directional components of the chamfer value
    double p2s_ba_cm = 0.0;
    int samples = 0;
};

// Mean distance from uniform surface samples of `reconstruction` to the exact
// closest point on `ground_truth`, in centimeters.
inline double p2s(const TriMesh& reconstruction, const TriMesh& ground_truth,
                  std::size_t samples = 10000, std::uint64_t seed = 0) {
    require(!reconstruction.empty() && !ground_truth.empty(), "p2s: empty mesh");
    require(samples > 0, "p2s: samples must be > 0");
    const FieldSampleSet set = sample_surface(reconstruction, samples, seed);
    const MeshQuery query(ground_truth);
    double sum = 0.0;
    for (const Vec3& p : set.positions) sum += query.closest(p).distance;
    return 100.0 * sum / static_cast<double>(samples);
}

// Symmetric mean of the two directional point-to-surface distances. Both
// directions use the same seed, so chamfer(a, b) == chamfer(b, a) exactly.
inline double chamfer(const TriMesh& a, const TriMesh& b, std::size_t samples = 10000,
                      std::uint64_t seed = 0) {
    const double ab = p2s(a, b, samples, seed);
    const double ba = p2s(b, a, samples, seed);
    return 0.5 * (ab + ba);
}

// --------------------------------------------------------------------------
// Hard z-buffer normal rasterization (deliberately not the soft renderer).

struct NormalRaster {
    Image normals;  // H x W x 3, world-space face normals
    Image mask;     // H x W x 1, 1 where covered
};

// Rasterizes world-space face normals with an orthographic camera and a
// largest-z-wins depth test (z normalized as in the soft renderer: 1 = near).
inline NormalRaster rasterize_normals(const TriMesh& mesh, const OrthoCamera& cam) {
    cam.validate();
    require(!mesh.empty(), "rasterize_normals: empty mesh");
    NormalRaster out;
    out.normals = Image::zeros(cam.width, cam.height, 3);
    out.mask = Image::zeros(cam.width, cam.height, 1);
    Image zbuf = Image::zeros(cam.width, cam.height, 1);
    for (double& z : zbuf.data) z = -std::numeric_limits<double>::max();

    const double depth_range = cam.far_depth - cam.near_depth;
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        const auto& t = mesh.faces[f];
        const Vec3 n = mesh.face_normal(f);
        Vec2 p[3];
        double z[3];
        for (int k = 0; k < 3; ++k) {
            p[k] = cam.to_pixel(mesh.vert(t[k]));
            z[k] = (cam.far_depth - cam.depth_of(mesh.vert(t[k]))) / depth_range;
        }
        const double area2 = (p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x();
        if (area2 == 0.0) continue;
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min({p[0].x(), p[1].x(), p[2].x()}) - 0.5)));
        const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(std::max({p[0].x(), p[1].x(), p[2].x()}) - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min({p[0].y(), p[1].y(), p[2].y()}) - 0.5)));
        const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(std::max({p[0].y(), p[1].y(), p[2].y()}) - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Vec2 q(x + 0.5, y + 0.5);
                const double w0 = ((p[1] - q).x() * (p[2] - q).y() - (p[1] - q).y() * (p[2] - q).x()) / area2;
                const double w1 = ((p[2] - q).x() * (p[0] - q).y() - (p[2] - q).y() * (p[0] - q).x()) / area2;
                const double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                const double zq = w0 * z[0] + w1 * z[1] + w2 * z[2];
                if (zq <= zbuf.at(x, y, 0)) continue;
                zbuf.at(x, y, 0) = zq;
                out.normals.set_pixel3(x, y, n);
                out.mask.at(x, y, 0) = 1.0;
            }
        }
    }
    return out;
}

// Mean per-pixel L2 difference between the two meshes' rasterized normal
// images, over pixels covered by both. Returns 0 when nothing overlaps.
inline double normal_reprojection_error(const TriMesh& reconstruction, const TriMesh& ground_truth,
                                        const OrthoCamera& cam) {
    const NormalRaster a = rasterize_normals(reconstruction, cam);
    const NormalRaster b = rasterize_normals(ground_truth, cam);
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            if (a.mask.at(x, y, 0) < 0.5 || b.mask.at(x, y, 0) < 0.5) continue;
            sum += (a.normals.pixel3(x, y) - b.normals.pixel3(x, y)).norm();
            ++count;
        }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

inline MetricReport evaluate_reconstruction(const TriMesh& reconstruction, const TriMesh& ground_truth,
                                            const OrthoCamera* cam = nullptr,
                                            std::size_t samples = 10000, std::uint64_t seed = 0) {
    MetricReport r;
    r.samples = static_cast<int>(samples);
    r.p2s_ab_cm = p2s(reconstruction, ground_truth, samples, seed);
    r.p2s_ba_cm = p2s(ground_truth, reconstruction, samples, seed);
    r.p2s_cm = r.p2s_ab_cm;
    r.chamfer_cm = 0.5 * (r.p2s_ab_cm + r.p2s_ba_cm);
    if (cam) r.normal_error = normal_reprojection_error(reconstruction, ground_truth, *cam);
    return r;
}

}  // namespace repose
