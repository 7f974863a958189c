#pragma once

#include "repose/image.hpp"
#include "repose/math.hpp"

#include <cstdint>
#include <vector>

namespace repose {

// Renderable scene: points with a shared sphere radius and per-sphere color,
// normal and opacity.
struct SphereCloud {
    std::vector<Vec3> centers;
    double radius = 0.01;  // meters
    std::vector<Vec3> colors;     // rgb in [0,1]
    std::vector<Vec3> normals;    // unit
    std::vector<double> opacities;  // [0,1]

    std::size_t size() const { return centers.size(); }

    void validate() const {
        require(radius > 0.0, "SphereCloud: radius must be > 0");
        require(colors.size() == centers.size() && normals.size() == centers.size() &&
                    opacities.size() == centers.size(),
                "SphereCloud: attribute arrays must match center count");
        for (std::size_t i = 0; i < size(); ++i) {
            require(opacities[i] >= 0.0 && opacities[i] <= 1.0,
                    "SphereCloud: opacity outside [0,1] at sphere " + std::to_string(i));
            require(std::abs(normals[i].norm() - 1.0) <= 1e-5,
                    "SphereCloud: non-unit normal at sphere " + std::to_string(i));
        }
    }

    void clamp_attributes() {
        for (auto& c : colors) c = clamp01(c);
        for (auto& o : opacities) o = clamp01(o);
        for (auto& n : normals) n = normalized_or(n, Vec3(0, 0, 1));
    }
};

// Orthographic camera. View transform maps world to camera coordinates with
// +x right, +y up and the view direction along -z; depth is distance along
// the view direction, valid in [near_depth, far_depth].
struct OrthoCamera {
    Isometry3 view = Isometry3::Identity();
    int width = 512;
    int height = 512;
    double scale = 0.005;  // meters per pixel
    double near_depth = 0.0;
    double far_depth = 3.0;

    void validate() const {
        require(width > 0 && height > 0, "OrthoCamera: image size must be positive");
        require(scale > 0.0, "OrthoCamera: scale must be > 0");
        require(near_depth < far_depth, "OrthoCamera: near must be < far");
    }

    static OrthoCamera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width,
                               int height, double scale, double near_depth = 0.0,
                               double far_depth = 3.0) {
        OrthoCamera cam;
        const Vec3 f = normalized_or(target - eye, Vec3(0, 0, -1));
        const Vec3 r = normalized_or(f.cross(up), Vec3(1, 0, 0));
        const Vec3 u = r.cross(f);
        Mat3 rot;
        rot.row(0) = r;
        rot.row(1) = u;
        rot.row(2) = -f;
        cam.view.linear() = rot;
        cam.view.translation() = -(rot * eye);
        cam.width = width;
        cam.height = height;
        cam.scale = scale;
        cam.near_depth = near_depth;
        cam.far_depth = far_depth;
        return cam;
    }

    double depth_of(const Vec3& world) const { return -(view * world).z(); }

    // Continuous pixel coordinates; pixel (ix, iy) has its center at
    // (ix + 0.5, iy + 0.5), rows grow downward.
    Vec2 to_pixel(const Vec3& world) const {
        const Vec3 c = view * world;
        return Vec2(0.5 * width + c.x() / scale, 0.5 * height - c.y() / scale);
    }
};

// Screen-space footprint of one sphere. Normalized depth z runs from 0 at the
// far plane to 1 at the near plane, so larger z wins the depth-exponential.
struct ProjectedSphere {
    Vec2 center_px = Vec2::Zero();
    double radius_px = 0.0;
    double z = 0.0;
    bool in_depth_range = true;
};

inline ProjectedSphere project_sphere(const Vec3& center, double radius, const OrthoCamera& cam) {
    ProjectedSphere p;
    p.center_px = cam.to_pixel(center);
    p.radius_px = radius / cam.scale;
    const double depth = cam.depth_of(center);
    const double zn = (cam.far_depth - depth) / (cam.far_depth - cam.near_depth);
    p.in_depth_range = zn >= 0.0 && zn <= 1.0;
    p.z = std::clamp(zn, 0.0, 1.0);
    return p;
}

inline std::vector<ProjectedSphere> project(const SphereCloud& cloud, const OrthoCamera& cam) {
    cam.validate();
    std::vector<ProjectedSphere> out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        out[i] = project_sphere(cloud.centers[i], cloud.radius, cam);
    return out;
}

// Screen-space proximity of a projected sphere to a pixel center: the
// logistic of the signed distance to the projected circle (negative inside),
// in units of sigma_d pixels. Smooth, strictly decreasing, in (0,1).
inline double coverage(const ProjectedSphere& sphere, const Vec2& pixel_center,
                       double sigma_d = 1.0) {
    const double s = (pixel_center - sphere.center_px).norm() - sphere.radius_px;
    return logistic(-s / sigma_d);
}

struct RenderSettings {
    double sigma_d = 1.0;       // coverage softness, pixels
    double gamma = 1e-5;        // depth-exponential temperature
    double epsilon = 1e-5;      // background score constant
    double support = 6.0;       // coverage cutoff, in units of sigma_d outside the circle
    int top_k = 32;             // contributor records kept per pixel for the backward pass
    Vec3 background_color = Vec3::Zero();
    bool retain_records = false;
};

// One pixel's blending weights, shared by the standalone blend and the
// full-image renderer. All exponentials are evaluated in log space with
// max-subtraction; with gamma = 1e-5 the raw scores reach 1e5.
struct BlendContribution {
    double d = 0.0;      // coverage in (0,1]
    double z = 0.0;      // normalized depth in [0,1]
    double alpha = 0.0;  // opacity in [0,1]
};

struct BlendWeights {
    std::vector<double> weights;  // per contributor; exact 0 where alpha or d is 0
    double background = 1.0;
};

// Eq. of the opacity-aware soft blend: contributor i scores
// alpha_i * d_i * exp(alpha_i * z_i / gamma), the background scores
// exp(epsilon / gamma), and weights are the normalized scores.
inline BlendWeights blend_pixel(const std::vector<BlendContribution>& contributors,
                                double gamma = 1e-5, double epsilon = 1e-5) {
    BlendWeights out;
    out.weights.assign(contributors.size(), 0.0);
    const double bg_score = epsilon / gamma;
    double m = bg_score;
    std::vector<double> scores(contributors.size(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < contributors.size(); ++i) {
        const auto& c = contributors[i];
        if (c.alpha <= 0.0 || c.d <= 0.0) continue;  // exact zero weight
        scores[i] = std::log(c.alpha * c.d) + c.alpha * c.z / gamma;
        m = std::max(m, scores[i]);
    }
    double sum = std::exp(bg_score - m);
    for (std::size_t i = 0; i < contributors.size(); ++i)
        if (std::isfinite(scores[i])) sum += std::exp(scores[i] - m);
    for (std::size_t i = 0; i < contributors.size(); ++i)
        if (std::isfinite(scores[i])) out.weights[i] = std::exp(scores[i] - m) / sum;
    out.background = std::exp(bg_score - m) / sum;
    return out;
}

// Rendered images plus (optionally) the per-pixel contributor records needed
// by render_backward. The normal image is the raw weight blend; remap to
// [0,1] only for display.
struct RenderOutput {
    int width = 0;
    int height = 0;
    Image color;   // H x W x 3
    Image normal;  // H x W x 3, raw blend
    Image alpha;   // H x W, sum of foreground weights

    bool has_records = false;
    int top_k = 0;
    RenderSettings settings;
    // fixed top_k slots per pixel, row-major pixels
    struct Record {
        std::int32_t sphere = -1;
        double d = 0.0;
        double z = 0.0;
        double alpha = 0.0;
        double score = -std::numeric_limits<double>::infinity();
        double weight = 0.0;
    };
    std::vector<Record> records;
    std::vector<std::int32_t> record_count;  // per pixel
    std::vector<double> log_partition;       // per pixel: log(sum of scores incl. background)
};

namespace detail {

// Streaming log-sum-exp accumulator per pixel: tracks the running max score
// m, the rescaled partition S = sum exp(score - m), and the weighted
// attribute sums on the same scale.
struct PixelAccum {
    double m;
    double S = 1.0;  // starts with the background term exp(0)
    Vec3 color_sum = Vec3::Zero();
    Vec3 normal_sum = Vec3::Zero();

    explicit PixelAccum(double bg_score = 0.0) : m(bg_score) {}

    void add(double score, const Vec3& color, const Vec3& normal) {
        if (score <= m) {
            const double e = std::exp(score - m);
            S += e;
            color_sum += e * color;
            normal_sum += e * normal;
        } else {
            const double r = std::exp(m - score);
            S = S * r + 1.0;
            color_sum = color_sum * r + color;
            normal_sum = normal_sum * r + normal;
            m = score;
        }
    }
};

}  // namespace detail

// Forward render: orthographic projection, per-sphere rasterization over the
// coverage support, opacity-aware soft blending per pixel. Spheres are
// processed in index order and pixels accumulate in that order, so the output
// is deterministic. The per-pixel softmax is computed exactly (streaming, no
// cap); top_k only limits the records retained for the backward pass.
inline RenderOutput render(const SphereCloud& cloud, const OrthoCamera& cam,
                           const RenderSettings& settings = {}) {
    cloud.validate();
    cam.validate();
    require(settings.gamma > 0.0 && settings.sigma_d > 0.0 && settings.support > 0.0,
            "render: gamma, sigma_d and support must be > 0");

    RenderOutput out;
    out.width = cam.width;
    out.height = cam.height;
    out.settings = settings;
    const std::size_t npix = static_cast<std::size_t>(cam.width) * static_cast<std::size_t>(cam.height);
    const double bg_score = settings.epsilon / settings.gamma;

    std::vector<detail::PixelAccum> accum(npix, detail::PixelAccum(bg_score));
    if (settings.retain_records) {
        out.has_records = true;
        out.top_k = settings.top_k;
        out.records.assign(npix * static_cast<std::size_t>(settings.top_k), RenderOutput::Record{});
        out.record_count.assign(npix, 0);
        out.log_partition.assign(npix, 0.0);
    }

    const double reach_px = settings.support * settings.sigma_d;
    for (std::size_t s = 0; s < cloud.size(); ++s) {
        const ProjectedSphere ps = project_sphere(cloud.centers[s], cloud.radius, cam);
        const double alpha = cloud.opacities[s];
        const double r_px = ps.radius_px + reach_px;
        const int x0 = std::max(0, static_cast<int>(std::floor(ps.center_px.x() - r_px - 0.5)));
        const int x1 = std::min(cam.width - 1, static_cast<int>(std::ceil(ps.center_px.x() + r_px - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(ps.center_px.y() - r_px - 0.5)));
        const int y1 = std::min(cam.height - 1, static_cast<int>(std::ceil(ps.center_px.y() + r_px - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Vec2 pc(x + 0.5, y + 0.5);
                const double sd = (pc - ps.center_px).norm() - ps.radius_px;
                if (sd > reach_px) continue;
                const double d = logistic(-sd / settings.sigma_d);
                const std::size_t pix = static_cast<std::size_t>(y) * static_cast<std::size_t>(cam.width) +
                                        static_cast<std::size_t>(x);
                double score = -std::numeric_limits<double>::infinity();
                if (alpha > 0.0) {
                    score = std::log(alpha * d) + alpha * ps.z / settings.gamma;
                    accum[pix].add(score, cloud.colors[s], cloud.normals[s]);
                }
                if (settings.retain_records) {
                    RenderOutput::Record rec;
                    rec.sphere = static_cast<std::int32_t>(s);
                    rec.d = d;
                    rec.z = ps.z;
                    rec.alpha = alpha;
                    rec.score = score;
                    auto* slots = &out.records[pix * static_cast<std::size_t>(settings.top_k)];
                    std::int32_t& count = out.record_count[pix];
                    if (count < settings.top_k) {
                        slots[count++] = rec;
                    } else {
                        int worst = 0;
                        for (int k = 1; k < settings.top_k; ++k)
                            if (slots[k].score < slots[worst].score) worst = k;
                        if (rec.score > slots[worst].score) slots[worst] = rec;
                    }
                }
            }
        }
    }

    out.color = Image::zeros(cam.width, cam.height, 3);
    out.normal = Image::zeros(cam.width, cam.height, 3);
    out.alpha = Image::zeros(cam.width, cam.height, 1);
    for (std::size_t pix = 0; pix < npix; ++pix) {
        const detail::PixelAccum& a = accum[pix];
        const double w_bg = std::exp(bg_score - a.m) / a.S;
        const Vec3 color = a.color_sum / a.S + w_bg * settings.background_color;
        const Vec3 normal = a.normal_sum / a.S;  // background normal is zero
        for (int c = 0; c < 3; ++c) {
            out.color.data[pix * 3 + c] = color[c];
            out.normal.data[pix * 3 + c] = normal[c];
        }
        out.alpha.data[pix] = 1.0 - w_bg;
        if (settings.retain_records) {
            const double log_z = a.m + std::log(a.S);
            out.log_partition[pix] = log_z;
            auto* slots = &out.records[pix * static_cast<std::size_t>(settings.top_k)];
            for (std::int32_t k = 0; k < out.record_count[pix]; ++k)
                slots[k].weight = std::isfinite(slots[k].score) ? std::exp(slots[k].score - log_z) : 0.0;
        }
    }
    return out;
}

struct SceneGradients {
    std::vector<Vec3> colors;
    std::vector<Vec3> normals;
    std::vector<double> opacities;
};

// Analytic gradients of the rendered images w.r.t. per-sphere attributes.
// Blending is linear in colors and normals, so d(pixel)/d(c_i) = w_i; the
// opacity enters both the linear factor and the depth exponential of the
// score, giving d(pixel)/d(alpha_i) = (1/alpha_i + z_i/gamma) * w_i *
// (c_i - pixel). Accumulation runs in fixed pixel/record order.
inline SceneGradients render_backward(const SphereCloud& cloud, const RenderOutput& out,
                                      const Image* loss_grad_color, const Image* loss_grad_normal) {
    require(out.has_records, "render_backward: render output has no contributor records");
    if (loss_grad_color)
        require(loss_grad_color->width == out.width && loss_grad_color->height == out.height &&
                    loss_grad_color->channels == 3,
                "render_backward: color gradient image size mismatch");
    if (loss_grad_normal)
        require(loss_grad_normal->width == out.width && loss_grad_normal->height == out.height &&
                    loss_grad_normal->channels == 3,
                "render_backward: normal gradient image size mismatch");

    SceneGradients g;
    g.colors.assign(cloud.size(), Vec3::Zero());
    g.normals.assign(cloud.size(), Vec3::Zero());
    g.opacities.assign(cloud.size(), 0.0);

    const double gamma = out.settings.gamma;
    const std::size_t npix = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height);
    for (std::size_t pix = 0; pix < npix; ++pix) {
        const std::int32_t count = out.record_count[pix];
        if (count == 0) continue;
        Vec3 gc = Vec3::Zero(), gn = Vec3::Zero();
        if (loss_grad_color)
            gc = Vec3(loss_grad_color->data[pix * 3], loss_grad_color->data[pix * 3 + 1],
                      loss_grad_color->data[pix * 3 + 2]);
        if (loss_grad_normal)
            gn = Vec3(loss_grad_normal->data[pix * 3], loss_grad_normal->data[pix * 3 + 1],
                      loss_grad_normal->data[pix * 3 + 2]);
        if (gc.isZero() && gn.isZero()) continue;
        const Vec3 pixel_color(out.color.data[pix * 3], out.color.data[pix * 3 + 1],
                               out.color.data[pix * 3 + 2]);
        const Vec3 pixel_normal(out.normal.data[pix * 3], out.normal.data[pix * 3 + 1],
                                out.normal.data[pix * 3 + 2]);
        const RenderOutput::Record* slots = &out.records[pix * static_cast<std::size_t>(out.top_k)];
        for (std::int32_t k = 0; k < count; ++k) {
            const RenderOutput::Record& r = slots[k];
            const std::size_t i = static_cast<std::size_t>(r.sphere);
            g.colors[i] += r.weight * gc;
            g.normals[i] += r.weight * gn;
            // d(score numerator)/d(alpha) / partition
            double dnum_over_z;
            if (r.alpha > 0.0) {
                dnum_over_z = (1.0 / r.alpha + r.z / gamma) * r.weight;
            } else {
                dnum_over_z = std::exp(std::log(r.d) - out.log_partition[pix]);
            }
            g.opacities[i] += dnum_over_z * (gc.dot(cloud.colors[i] - pixel_color) +
                                             gn.dot(cloud.normals[i] - pixel_normal));
        }
    }
    return g;
}

// Opacity from predicted occupancy by linear scaling and shifting, clamped to
// [0,1]. The defaults map the isosurface value 0.5 to opacity 0.7.
inline double opacity_from_occupancy(double occupancy, double scale = 1.0, double shift = 0.2) {
    return clamp01(scale * occupancy + shift);
}

}  // namespace repose
