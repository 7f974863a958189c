#pragma once

#include "repose/field.hpp"
#include "repose/image.hpp"
#include "repose/render.hpp"

#include <vector>

namespace repose {

// Per-step loss breakdown. `total` is always the left-to-right sum of the
// five components, in this order.
struct LossReport {
    double occupancy_3d = 0.0;
    double normal_3d = 0.0;
    double color_3d = 0.0;
    double normal_2d = 0.0;
    double color_2d = 0.0;
    double total = 0.0;

    void finalize() { total = (((occupancy_3d + normal_3d) + color_3d) + normal_2d) + color_2d; }
};

// Mean Huber loss: quadratic within `delta` of zero, linear outside, with a
// continuous first derivative at the joint.
inline double loss_occupancy(const std::vector<double>& pred, const std::vector<double>& target,
                             double delta = 0.1) {
    require(pred.size() == target.size(), "loss_occupancy: size mismatch");
    require(!pred.empty(), "loss_occupancy: empty input");
    require(delta > 0.0, "loss_occupancy: delta must be > 0");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = std::abs(pred[i] - target[i]);
        sum += r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
    }
    return sum / static_cast<double>(pred.size());
}

// Mean absolute error over all vector components.
inline double loss_l1(const std::vector<Vec3>& pred, const std::vector<Vec3>& target) {
    require(pred.size() == target.size(), "loss_l1: size mismatch");
    require(!pred.empty(), "loss_l1: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += (pred[i] - target[i]).cwiseAbs().sum();
    return sum / (3.0 * static_cast<double>(pred.size()));
}

// Mean per-pixel L1 between two images with the gradient image attached;
// sign(0) is 0, so a perfect match has an exactly zero gradient. The optional
// mask is a 1-channel image, pixels with value > 0.5 participate.
inline double loss_render_l1(const Image& rendered, const Image& target, Image* grad_out,
                             const Image* mask = nullptr) {
    require(rendered.same_shape(target), "loss_render_l1: image shape mismatch");
    if (mask)
        require(mask->width == rendered.width && mask->height == rendered.height && mask->channels == 1,
                "loss_render_l1: mask must be a 1-channel image of the same size");
    if (grad_out) *grad_out = Image::zeros(rendered.width, rendered.height, rendered.channels);

    std::size_t active_pixels = 0;
    const std::size_t npix = static_cast<std::size_t>(rendered.width) * static_cast<std::size_t>(rendered.height);
    for (std::size_t p = 0; p < npix; ++p)
        if (!mask || mask->data[p] > 0.5) ++active_pixels;
    require(active_pixels > 0, "loss_render_l1: empty mask");

    const double denom = static_cast<double>(active_pixels) * rendered.channels;
    double sum = 0.0;
    for (std::size_t p = 0; p < npix; ++p) {
        if (mask && mask->data[p] <= 0.5) continue;
        for (int c = 0; c < rendered.channels; ++c) {
            const std::size_t idx = p * static_cast<std::size_t>(rendered.channels) + static_cast<std::size_t>(c);
            const double r = rendered.data[idx] - target.data[idx];
            sum += std::abs(r);
            if (grad_out && r != 0.0)
                grad_out->data[idx] = (r > 0.0 ? 1.0 : -1.0) / denom;
        }
    }
    return sum / denom;
}

enum class Optimizer { AdaptiveRms, PlainGd };

struct RefineConfig {
    int steps = 0;
    double learning_rate = 1e-3;
    double lr_decay_factor = 0.1;
    // Steps between decays. -1 picks steps/3 (two decays over the run,
    // mirroring a x0.1-every-third-of-training schedule); 0 disables decay.
    int decay_every = -1;
    double huber_delta = 0.1;
    Optimizer optimizer = Optimizer::AdaptiveRms;
    std::uint64_t seed = 0;
    bool optimize_colors = true;
    bool optimize_normals = true;
    bool optimize_opacities = false;
    double weight_color_2d = 1.0;
    double weight_normal_2d = 1.0;
    RenderSettings render;

    void validate() const {
        require(steps >= 0, "RefineConfig: steps must be >= 0");
        require(learning_rate > 0.0, "RefineConfig: learning_rate must be > 0");
    }
};

struct RefineTarget {
    OrthoCamera camera;
    Image color;
    Image normal;  // raw-blend convention, same as RenderOutput.normal
};

struct RefineResult {
    SphereCloud cloud;
    std::vector<LossReport> trace;  // loss at the start of each step
    bool tail_non_increasing = true;
};

namespace detail {

// RMSprop-style per-parameter step; alpha is the squared-gradient decay.
struct RmsState {
    std::vector<double> v;
    double alpha = 0.99;
    double eps = 1e-8;

    explicit RmsState(std::size_t n) : v(n, 0.0) {}

    double step(std::size_t i, double g) {
        v[i] = alpha * v[i] + (1.0 - alpha) * g * g;
        return g / (std::sqrt(v[i]) + eps);
    }
};

}  // namespace detail

// Granular render-and-compare: renders every view, accumulates analytic
// gradients of the per-pixel L1 losses, and updates the per-sphere colors and
// normals (and optionally opacities). Colors are clamped and normals
// renormalized after every step. Deterministic for fixed inputs.
inline RefineResult refine_cloud(const SphereCloud& cloud, const std::vector<RefineTarget>& targets,
                                 const RefineConfig& cfg) {
    cfg.validate();
    require(!targets.empty(), "refine_cloud: needs at least one target view");
    for (const auto& t : targets) {
        require(t.color.width == t.camera.width && t.color.height == t.camera.height &&
                    t.color.channels == 3,
                "refine_cloud: target color image does not match its camera");
        require(t.normal.width == t.camera.width && t.normal.height == t.camera.height &&
                    t.normal.channels == 3,
                "refine_cloud: target normal image does not match its camera");
    }

    RefineResult result;
    result.cloud = cloud;
    result.cloud.validate();
    if (cfg.steps == 0) return result;

    RenderSettings settings = cfg.render;
    settings.retain_records = true;

    SphereCloud& sc = result.cloud;
    const std::size_t n = sc.size();
    detail::RmsState rms_color(3 * n), rms_normal(3 * n), rms_alpha(n);

    const int decay_every = cfg.decay_every < 0 ? std::max(1, cfg.steps / 3) : cfg.decay_every;
    double lr = cfg.learning_rate;

    for (int step = 0; step < cfg.steps; ++step) {
        if (cfg.decay_every != 0 && step > 0 && step % decay_every == 0) lr *= cfg.lr_decay_factor;

        SceneGradients grads;
        grads.colors.assign(n, Vec3::Zero());
        grads.normals.assign(n, Vec3::Zero());
        grads.opacities.assign(n, 0.0);
        LossReport report;

        for (const auto& target : targets) {
            const RenderOutput out = render(sc, target.camera, settings);
            Image grad_color, grad_normal;
            const double lc = loss_render_l1(out.color, target.color, &grad_color);
            const double ln = loss_render_l1(out.normal, target.normal, &grad_normal);
            report.color_2d += cfg.weight_color_2d * lc / targets.size();
            report.normal_2d += cfg.weight_normal_2d * ln / targets.size();
            if (cfg.weight_color_2d != 1.0)
                for (double& v : grad_color.data) v *= cfg.weight_color_2d;
            if (cfg.weight_normal_2d != 1.0)
                for (double& v : grad_normal.data) v *= cfg.weight_normal_2d;
            const SceneGradients g = render_backward(sc, out, &grad_color, &grad_normal);
            for (std::size_t i = 0; i < n; ++i) {
                grads.colors[i] += g.colors[i] / targets.size();
                grads.normals[i] += g.normals[i] / targets.size();
                grads.opacities[i] += g.opacities[i] / targets.size();
            }
        }
        report.finalize();
        result.trace.push_back(report);

        // exactly-zero gradients leave the parameter untouched, so a cloud
        // that already matches its targets is a bitwise fixed point
        for (std::size_t i = 0; i < n; ++i) {
            if (cfg.optimize_colors && !grads.colors[i].isZero()) {
                for (int c = 0; c < 3; ++c) {
                    const double g = grads.colors[i][c];
                    const double d = cfg.optimizer == Optimizer::AdaptiveRms
                                         ? rms_color.step(3 * i + static_cast<std::size_t>(c), g)
                                         : g;
                    sc.colors[i][c] = clamp01(sc.colors[i][c] - lr * d);
                }
            }
            if (cfg.optimize_normals && !grads.normals[i].isZero()) {
                Vec3 nn = sc.normals[i];
                for (int c = 0; c < 3; ++c) {
                    const double g = grads.normals[i][c];
                    const double d = cfg.optimizer == Optimizer::AdaptiveRms
                                         ? rms_normal.step(3 * i + static_cast<std::size_t>(c), g)
                                         : g;
                    nn[c] -= lr * d;
                }
                sc.normals[i] = normalized_or(nn, sc.normals[i]);
            }
            if (cfg.optimize_opacities && grads.opacities[i] != 0.0) {
                const double g = grads.opacities[i];
                const double d = cfg.optimizer == Optimizer::AdaptiveRms ? rms_alpha.step(i, g) : g;
                sc.opacities[i] = clamp01(sc.opacities[i] - lr * d);
            }
        }
    }

    // convergence monitor over the final 10% of steps
    const std::size_t tail_start = result.trace.size() - std::max<std::size_t>(1, result.trace.size() / 10);
    for (std::size_t s = tail_start; s + 1 < result.trace.size(); ++s)
        if (result.trace[s + 1].total > result.trace[s].total + 1e-12) result.tail_non_increasing = false;
    return result;
}

// The three point-sampling regimes used for supervision: Gaussian-perturbed
// points around the surface with inside/outside occupancy, exact surface
// samples with normals/colors at occupancy 0.5, and a second Gaussian set for
// render-and-compare. Requires a closed mesh.
struct TrainingBatches {
    FieldSampleSet gaussian_points;   // 20480, occupancy attached
    FieldSampleSet surface_points;    // 51200, occupancy 0.5, normals/colors
    FieldSampleSet render_points;     // 51200, occupancy attached
};

inline TrainingBatches make_training_batches(const TriMesh& mesh, std::uint64_t seed,
                                             std::size_t gaussian_count = 20480,
                                             std::size_t surface_count = 51200,
                                             std::size_t render_count = 51200,
                                             double sigma = 0.05) {
    TrainingBatches batches;
    const MeshQuery query(mesh);
    const std::size_t open = open_edge_count(mesh);
    if (open != 0)
        throw std::invalid_argument("make_training_batches: mesh is not watertight (" +
                                    std::to_string(open) + " open edges)");

    batches.gaussian_points.positions = sample_gaussian_around_surface(mesh, gaussian_count, sigma, seed);
    batches.gaussian_points.occupancy.resize(gaussian_count);
    for (std::size_t i = 0; i < gaussian_count; ++i)
        batches.gaussian_points.occupancy[i] = query.occupancy(batches.gaussian_points.positions[i]);

    batches.surface_points = sample_surface(mesh, surface_count, seed + 1);

    batches.render_points.positions = sample_gaussian_around_surface(mesh, render_count, sigma, seed + 2);
    batches.render_points.occupancy.resize(render_count);
    for (std::size_t i = 0; i < render_count; ++i)
        batches.render_points.occupancy[i] = query.occupancy(batches.render_points.positions[i]);

    return batches;
}

}  // namespace repose
