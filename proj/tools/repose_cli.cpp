// repose: canonical-space avatar reconstruction toolkit.
//
// Subcommands cover skinning (forward/inverse), canonicalization, isosurface
// extraction, point sampling, sphere-cloud rendering, render-and-compare
// refinement, reconstruction metrics, self-contact cutting and animation.
// Every subcommand accepts --seed and --config, writes deterministic outputs
// and exits nonzero with a single-line `error: ...` on any failure.

#include "repose/repose.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

namespace fs = std::filesystem;
using namespace repose;

namespace {

json g_config;  // --config overlay, applied to options the user did not set

void apply_config(CLI::App* cmd) {
    for (CLI::Option* opt : cmd->get_options()) {
        if (opt->count() > 0 || opt->get_lnames().empty()) continue;
        const std::string key = opt->get_lnames().front();
        if (!g_config.contains(key)) continue;
        const json& v = g_config[key];
        opt->add_result(v.is_string() ? v.get<std::string>() : v.dump());
    }
}

TriMesh load_mesh(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply") return read_ply_mesh(path);
    return read_obj(path);
}

void save_mesh(const TriMesh& mesh, const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply")
        write_ply_mesh(mesh, path);
    else
        write_obj(mesh, path);
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trace_csv(const std::vector<LossReport>& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) fail("cannot open " + path);
    f << "step,occupancy_3d,normal_3d,color_3d,normal_2d,color_2d,total\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const LossReport& r = trace[i];
        f << i << ',' << fmt17(r.occupancy_3d) << ',' << fmt17(r.normal_3d) << ','
          << fmt17(r.color_3d) << ',' << fmt17(r.normal_2d) << ',' << fmt17(r.color_2d) << ','
          << fmt17(r.total) << '\n';
    }
}

OrthoCamera load_camera(const std::string& path) { return camera_from_json(load_json(path)); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"repose: canonical-space avatar reconstruction toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON file with default option values")
        ->each([&](const std::string& p) { g_config = load_json(p); });

    std::uint64_t seed = 0;

    // ---------------------------------------------------------------- skin
    auto* skin = app.add_subcommand("skin", "apply or invert linear blend skinning");
    std::string skin_mesh, skin_weights, skin_rig, skin_pose, skin_out;
    bool skin_invert = false;
    skin->add_option("--mesh", skin_mesh, "input mesh or point set (OBJ/PLY)")->required();
    skin->add_option("--weights", skin_weights, "skin weight matrix (JSON)")->required();
    skin->add_option("--rig", skin_rig, "rig (JSON)")->required();
    skin->add_option("--pose", skin_pose, "pose (JSON)")->required();
    skin->add_option("--out", skin_out, "output mesh path")->required();
    skin->add_flag("--invert", skin_invert, "apply the inverse deformation");
    skin->add_option("--seed", seed, "random seed (unused here, accepted uniformly)");
    skin->callback([&] {
        apply_config(skin);
        const TriMesh mesh = load_mesh(skin_mesh);
        const SkinWeightMatrix weights = weights_from_json(load_json(skin_weights));
        const Rig rig = rig_from_json(load_json(skin_rig));
        const Pose pose = pose_from_json(load_json(skin_pose));
        if (!skin_invert) {
            save_mesh(repose_mesh(mesh, weights, rig, pose), skin_out);
        } else {
            const BoneTransforms g = forward_kinematics(rig, pose);
            const LbsInverseResult inv = lbs_invert(mesh.positions, weights, g);
            if (inv.flagged > 0)
                std::cerr << "warning: " << inv.flagged << " points flagged (singular blend)\n";
            TriMesh out = mesh;
            out.positions = inv.positions;
            if (!out.faces.empty()) compute_vertex_normals(out);
            save_mesh(out, skin_out);
        }
        std::cout << skin_out << "\n";
    });

    // -------------------------------------------------------- canonicalize
    auto* canon = app.add_subcommand("canonicalize", "posed scan -> canonical reconstruction -> repose");
    PipelineConfig pcfg;
    double vol_min = -1.28, vol_max = 1.28;
    canon->add_option("--scan", pcfg.scan_path, "posed scan mesh");
    canon->add_option("--grid-in", pcfg.grid_in, "load this canonical occupancy grid instead of a scan");
    canon->add_option("--template", pcfg.template_path, "canonical template mesh")->required();
    canon->add_option("--weights", pcfg.weights_path, "template skin weights (JSON)")->required();
    canon->add_option("--rig", pcfg.rig_path, "rig (JSON)")->required();
    canon->add_option("--pose", pcfg.pose_path, "pose of the scan (JSON)")->required();
    canon->add_option("--landmarks", pcfg.landmarks_path, "canonical landmarks (JSON)");
    canon->add_option("--out-dir", pcfg.output_dir, "output directory")->required();
    canon->add_option("--cutoff", pcfg.cutoff, "weight assignment cutoff, meters");
    canon->add_option("--resolution", pcfg.grid_resolution, "occupancy grid resolution");
    canon->add_option("--volume-min", vol_min, "canonical volume lower bound, meters");
    canon->add_option("--volume-max", vol_max, "canonical volume upper bound, meters");
    canon->add_option("--tau", pcfg.tau, "isosurface threshold");
    canon->add_option("--features", pcfg.export_features,
                      "also export per-vertex spatial features: xyz, l2, rbf, rbf-per-axis");
    canon->add_option("--seed", pcfg.seed, "random seed");
    canon->callback([&] {
        apply_config(canon);
        pcfg.volume_min = Vec3::Constant(vol_min);
        pcfg.volume_max = Vec3::Constant(vol_max);
        const PipelineResult result = pipeline_canonicalize(pcfg);
        for (const std::string& artifact : result.artifacts) std::cout << artifact << "\n";
    });

    // -------------------------------------------------------------- extract
    auto* extract = app.add_subcommand("extract", "isosurface of a stored occupancy grid");
    std::string extract_grid, extract_out;
    double extract_tau = 0.5;
    extract->add_option("--grid", extract_grid, "occupancy grid file")->required();
    extract->add_option("--tau", extract_tau, "isosurface threshold");
    extract->add_option("--out", extract_out, "output mesh path")->required();
    extract->add_option("--seed", seed, "random seed (unused here, accepted uniformly)");
    extract->callback([&] {
        apply_config(extract);
        const ScalarGrid grid = read_grid(extract_grid);
        const TriMesh mesh = extract_isosurface(grid, extract_tau);
        save_mesh(mesh, extract_out);
        std::cout << extract_out << " (" << mesh.vertex_count() << " vertices, " << mesh.face_count()
                  << " faces)\n";
    });

    // --------------------------------------------------------------- sample
    auto* sample = app.add_subcommand("sample", "point sampling around or on a mesh surface");
    std::string sample_mesh, sample_out, sample_mode = "surface";
    std::size_t sample_count = 0;
    double sample_sigma = 0.05;
    sample->add_option("--mesh", sample_mesh, "input mesh")->required();
    sample->add_option("--mode", sample_mode, "surface | gaussian | batches");
    sample->add_option("--count", sample_count, "sample count (default 51200 surface / 20480 gaussian)");
    sample->add_option("--sigma", sample_sigma, "gaussian std around the surface, meters");
    sample->add_option("--out", sample_out, "output PLY (mode batches appends _gaussian/_surface/_render)")
        ->required();
    sample->add_option("--seed", seed, "random seed");
    sample->callback([&] {
        apply_config(sample);
        const TriMesh mesh = load_mesh(sample_mesh);
        if (sample_mode == "surface") {
            const FieldSampleSet set = sample_surface(mesh, sample_count ? sample_count : 51200, seed);
            write_ply_samples(set, sample_out);
            std::cout << sample_out << "\n";
        } else if (sample_mode == "gaussian") {
            FieldSampleSet set;
            set.positions = sample_gaussian_around_surface(mesh, sample_count ? sample_count : 20480,
                                                           sample_sigma, seed);
            set.occupancy = occupancy_of_mesh(mesh, set.positions);
            write_ply_samples(set, sample_out);
            std::cout << sample_out << "\n";
        } else if (sample_mode == "batches") {
            const TrainingBatches batches = make_training_batches(mesh, seed);
            const std::string stem = sample_out.substr(0, sample_out.find_last_of('.'));
            write_ply_samples(batches.gaussian_points, stem + "_gaussian.ply");
            write_ply_samples(batches.surface_points, stem + "_surface.ply");
            write_ply_samples(batches.render_points, stem + "_render.ply");
            std::cout << stem + "_gaussian.ply\n" << stem + "_surface.ply\n" << stem + "_render.ply\n";
        } else {
            fail("unknown sample mode: " + sample_mode);
        }
    });

    // --------------------------------------------------------------- render
    auto* render_cmd = app.add_subcommand("render", "render a sphere cloud to images");
    std::string render_cloud, render_camera;
    std::string out_color, out_normal, out_alpha, out_color_pfm, out_normal_pfm;
    RenderSettings rset;
    render_cmd->add_option("--cloud", render_cloud, "sphere cloud (PLY)")->required();
    render_cmd->add_option("--camera", render_camera, "camera (JSON)")->required();
    render_cmd->add_option("--out-color", out_color, "color PNG");
    render_cmd->add_option("--out-normal", out_normal, "normal PNG (remapped n*0.5+0.5)");
    render_cmd->add_option("--out-alpha", out_alpha, "alpha PFM");
    render_cmd->add_option("--out-color-pfm", out_color_pfm, "color PFM (exact float)");
    render_cmd->add_option("--out-normal-pfm", out_normal_pfm, "raw normal blend PFM");
    render_cmd->add_option("--gamma", rset.gamma, "depth temperature");
    render_cmd->add_option("--epsilon", rset.epsilon, "background score constant");
    render_cmd->add_option("--sigma-d", rset.sigma_d, "coverage softness, pixels");
    render_cmd->add_option("--seed", seed, "random seed (unused here, accepted uniformly)");
    render_cmd->callback([&] {
        apply_config(render_cmd);
        const SphereCloud cloud = read_ply_cloud(render_cloud);
        const OrthoCamera cam = load_camera(render_camera);
        const RenderOutput out = render(cloud, cam, rset);
        if (!out_color.empty()) write_png(out.color, out_color);
        if (!out_normal.empty()) write_png(remap_normal_for_display(out.normal), out_normal);
        if (!out_alpha.empty()) write_pfm(out.alpha, out_alpha);
        if (!out_color_pfm.empty()) write_pfm(out.color, out_color_pfm);
        if (!out_normal_pfm.empty()) write_pfm(out.normal, out_normal_pfm);
    });

    // --------------------------------------------------------------- refine
    auto* refine = app.add_subcommand("refine", "render-and-compare refinement of a sphere cloud");
    std::string refine_cloud_path, refine_targets, refine_out, refine_trace, refine_opt = "rms";
    RefineConfig rcfg;
    refine->add_option("--cloud", refine_cloud_path, "initial sphere cloud (PLY)")->required();
    refine->add_option("--targets", refine_targets,
                       "JSON array of {camera: path|object, color: pfm, normal: pfm}")->required();
    refine->add_option("--out", refine_out, "refined cloud (PLY)")->required();
    refine->add_option("--trace", refine_trace, "per-step loss CSV");
    refine->add_option("--steps", rcfg.steps, "optimization steps")->required();
    refine->add_option("--lr", rcfg.learning_rate, "learning rate");
    refine->add_option("--decay-every", rcfg.decay_every,
                       "steps between x0.1 decays (-1: steps/3, 0: off)");
    refine->add_option("--optimizer", refine_opt, "rms | gd");
    refine->add_flag("--optimize-opacities", rcfg.optimize_opacities, "also update opacities");
    refine->add_option("--gamma", rcfg.render.gamma, "depth temperature");
    refine->add_option("--seed", rcfg.seed, "random seed");
    refine->callback([&] {
        apply_config(refine);
        rcfg.optimizer = refine_opt == "gd" ? Optimizer::PlainGd : Optimizer::AdaptiveRms;
        const SphereCloud cloud = read_ply_cloud(refine_cloud_path);
        const json targets_json = load_json(refine_targets);
        require(targets_json.is_array() && !targets_json.empty(), "targets: expected a non-empty array");
        std::vector<RefineTarget> targets;
        for (const auto& item : targets_json) {
            RefineTarget t;
            t.camera = item.at("camera").is_string() ? load_camera(item["camera"].get<std::string>())
                                                     : camera_from_json(item["camera"]);
            t.color = read_pfm(item.at("color").get<std::string>());
            t.normal = read_pfm(item.at("normal").get<std::string>());
            targets.push_back(std::move(t));
        }
        const RefineResult result = refine_cloud(cloud, targets, rcfg);
        if (!result.tail_non_increasing)
            std::cerr << "warning: loss not non-increasing over the final 10% of steps\n";
        write_ply_cloud(result.cloud, refine_out);
        if (!refine_trace.empty()) write_trace_csv(result.trace, refine_trace);
        if (!result.trace.empty())
            std::cout << "loss " << fmt17(result.trace.front().total) << " -> "
                      << fmt17(result.trace.back().total) << "\n";
    });

    // -------------------------------------------------------------- metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "reconstruction metrics against a ground truth");
    std::string metrics_recon, metrics_gt, metrics_camera, metrics_out;
    std::size_t metrics_samples = 10000;
    metrics_cmd->add_option("--recon", metrics_recon, "reconstruction mesh")->required();
    metrics_cmd->add_option("--gt", metrics_gt, "ground-truth mesh")->required();
    metrics_cmd->add_option("--camera", metrics_camera, "camera (JSON) for the normal error");
    metrics_cmd->add_option("--samples", metrics_samples, "surface samples per direction");
    metrics_cmd->add_option("--out", metrics_out, "write the report as JSON");
    metrics_cmd->add_option("--seed", seed, "random seed");
    metrics_cmd->callback([&] {
        apply_config(metrics_cmd);
        const TriMesh recon = load_mesh(metrics_recon);
        const TriMesh gt = load_mesh(metrics_gt);
        OrthoCamera cam;
        const bool have_cam = !metrics_camera.empty();
        if (have_cam) cam = load_camera(metrics_camera);
        const MetricReport report =
            evaluate_reconstruction(recon, gt, have_cam ? &cam : nullptr, metrics_samples, seed);
        std::printf("%-12s %-10s %-10s\n", "Normal", "P2S", "Chamfer");
        std::printf("%-12.4f %-10.4f %-10.4f\n", report.normal_error, report.p2s_cm, report.chamfer_cm);
        if (!metrics_out.empty()) save_json(metric_report_to_json(report), metrics_out);
    });

    // ---------------------------------------------------------- contact-cut
    auto* contact = app.add_subcommand("contact-cut", "detect self-contact and cut the mesh");
    std::string contact_mesh, contact_weights, contact_out, contact_marked;
    double contact_eps = 0.01;
    contact->add_option("--mesh", contact_mesh, "input mesh")->required();
    contact->add_option("--weights", contact_weights, "skin weights aligned with the mesh (JSON)")->required();
    contact->add_option("--eps", contact_eps, "contact distance, meters");
    contact->add_option("--out", contact_out, "cut mesh path")->required();
    contact->add_option("--marked", contact_marked, "write marked vertex indices (JSON)");
    contact->add_option("--seed", seed, "random seed (unused here, accepted uniformly)");
    contact->callback([&] {
        apply_config(contact);
        const TriMesh mesh = load_mesh(contact_mesh);
        const SkinWeightMatrix weights = weights_from_json(load_json(contact_weights));
        const ContactResult result = detect_self_contact(mesh, weights, contact_eps);
        save_mesh(result.cut, contact_out);
        if (!contact_marked.empty()) {
            json marked = json::array(), removed = json::array();
            for (std::size_t i = 0; i < result.contact.size(); ++i) {
                if (result.contact[i]) marked.push_back(i);
                if (result.removed[i]) removed.push_back(i);
            }
            save_json(json{{"contact", marked},
                           {"removed", removed},
                           {"faces_before", mesh.face_count()},
                           {"faces_after", result.cut.face_count()}},
                      contact_marked);
        }
        std::cout << result.contact_count << " contact vertices, " << mesh.face_count() << " -> "
                  << result.cut.face_count() << " faces\n";
    });

    // -------------------------------------------------------------- animate
    auto* animate = app.add_subcommand("animate", "skin a canonical mesh through a pose track");
    std::string anim_mesh, anim_weights, anim_rig, anim_poses, anim_out_dir;
    animate->add_option("--mesh", anim_mesh, "canonical mesh")->required();
    animate->add_option("--weights", anim_weights, "skin weights (JSON)")->required();
    animate->add_option("--rig", anim_rig, "rig (JSON)")->required();
    animate->add_option("--poses", anim_poses, "pose track: JSON array of poses")->required();
    animate->add_option("--out-dir", anim_out_dir, "frame output directory")->required();
    animate->add_option("--seed", seed, "random seed (unused here, accepted uniformly)");
    animate->callback([&] {
        apply_config(animate);
        const TriMesh mesh = load_mesh(anim_mesh);
        const SkinWeightMatrix weights = weights_from_json(load_json(anim_weights));
        const Rig rig = rig_from_json(load_json(anim_rig));
        const json track = load_json(anim_poses);
        require(track.is_array() && !track.empty(), "poses: expected a non-empty array");
        fs::create_directories(anim_out_dir);
        for (std::size_t frame = 0; frame < track.size(); ++frame) {
            const Pose pose = pose_from_json(track[frame]);
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%04zu.obj", frame);
            const std::string path = (fs::path(anim_out_dir) / name).string();
            write_obj(repose_mesh(mesh, weights, rig, pose), path);
            std::cout << path << "\n";
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
