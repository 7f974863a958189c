#pragma once

#include "repose/contact.hpp"
#include "repose/field.hpp"
#include "repose/grid_io.hpp"
#include "repose/io_json.hpp"
#include "repose/marching_cubes.hpp"
#include "repose/mesh_io.hpp"
#include "repose/metrics.hpp"
#include "repose/semspace.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace repose {

// End-to-end canonicalization settings. All units are meters. Either a posed
// scan mesh is canonicalized and turned into an occupancy field, or a
// precomputed occupancy grid is loaded via `grid_in`.
struct PipelineConfig {
    std::string scan_path;       // posed input mesh (OBJ/PLY)
    std::string grid_in;         // optional: load this canonical occupancy grid instead
    std::string template_path;   // canonical template mesh
    std::string weights_path;    // template skin weights (JSON)
    std::string rig_path;        // rig (JSON)
    std::string pose_path;       // pose of the scan (JSON)
    std::string landmarks_path;  // required when export_features is set
    std::string output_dir = ".";

    double cutoff = 0.10;          // weight-assignment distance cutoff
    double sdf_sharpness = 0.01;   // occupancy transition width of the scan field
    Vec3 volume_min = Vec3::Constant(-1.28);
    Vec3 volume_max = Vec3::Constant(1.28);
    int grid_resolution = 256;
    double tau = 0.5;
    std::string export_features;   // "", "xyz", "l2", "rbf", "rbf-per-axis"
    std::uint64_t seed = 0;
    unsigned threads = 0;          // 0: REPOSE_THREADS env or hardware concurrency
};

// Stage failures carry the stage name and everything written so far.
class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& message,
               std::vector<std::string> artifacts)
        : std::runtime_error("stage '" + stage + "': " + message),
          stage_(stage),
          artifacts_(std::move(artifacts)) {}

    const std::string& stage() const { return stage_; }
    const std::vector<std::string>& artifacts() const { return artifacts_; }

private:
    std::string stage_;
    std::vector<std::string> artifacts_;
};

struct PipelineResult {
    TriMesh canonical_reconstruction;
    TriMesh reposed_reconstruction;
    std::vector<std::string> artifacts;
    std::size_t unassigned_scan_vertices = 0;
};

namespace detail {

inline TriMesh read_mesh_any(const std::string& path);

inline SpatialFeatureKind feature_kind_from_name(const std::string& name) {
    if (name == "xyz") return SpatialFeatureKind::XYZ;
    if (name == "l2") return SpatialFeatureKind::L2;
    if (name == "rbf") return SpatialFeatureKind::RBF;
    if (name == "rbf-per-axis") return SpatialFeatureKind::RBFPerAxis;
    fail("unknown spatial feature kind: " + name + " (expected xyz, l2, rbf or rbf-per-axis)");
}

}  // namespace detail

inline TriMesh detail::read_mesh_any(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".ply") return read_ply_mesh(path);
    return read_obj(path);
}

// Canonicalization chain: canonicalize the posed scan through the deformation
// field, densely evaluate its occupancy over the canonical volume, extract
// the tau level set, assign skinning weights to the extracted vertices, and
// repose the reconstruction back to the input pose. Every intermediate is
// written to the output directory.
inline PipelineResult pipeline_canonicalize(const PipelineConfig& cfg) {
    namespace fs = std::filesystem;
    PipelineResult result;
    std::vector<std::string>& artifacts = result.artifacts;
    auto out_path = [&](const std::string& name) { return (fs::path(cfg.output_dir) / name).string(); };
    auto stage_fail = [&](const std::string& stage, const std::string& msg) -> void {
        throw StageError(stage, msg, artifacts);
    };

    // -- load-inputs
    TriMesh scan, template_mesh;
    SkinWeightMatrix template_weights;
    Rig rig;
    Pose pose;
    LandmarkSet landmarks;
    const bool use_grid_input = !cfg.grid_in.empty();
    try {
        fs::create_directories(cfg.output_dir);
        if (!use_grid_input) {
            if (cfg.scan_path.empty()) fail("no scan mesh and no input grid given");
            scan = detail::read_mesh_any(cfg.scan_path);
            if (scan.empty()) fail("scan mesh has no faces: " + cfg.scan_path);
        }
        template_mesh = detail::read_mesh_any(cfg.template_path);
        if (template_mesh.empty()) fail("template mesh has no faces: " + cfg.template_path);
        template_weights = weights_from_json(load_json(cfg.weights_path));
        require(template_weights.row_count() == template_mesh.vertex_count(),
                "template weights rows (" + std::to_string(template_weights.row_count()) +
                    ") do not match template vertices (" + std::to_string(template_mesh.vertex_count()) + ")");
        rig = rig_from_json(load_json(cfg.rig_path));
        pose = pose_from_json(load_json(cfg.pose_path));
        pose.validate(rig.joint_count());
        if (!cfg.export_features.empty()) {
            detail::feature_kind_from_name(cfg.export_features);  // validate the name early
            if (cfg.landmarks_path.empty() || !fs::exists(cfg.landmarks_path))
                fail("spatial features requested but landmarks file is missing: " +
                     (cfg.landmarks_path.empty() ? std::string("<no path given>") : cfg.landmarks_path));
            landmarks = landmarks_from_json(load_json(cfg.landmarks_path));
        }
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        stage_fail("load-inputs", e.what());
    }

    ScalarGrid grid;
    if (use_grid_input) {
        try {
            grid = read_grid(cfg.grid_in);
        } catch (const std::exception& e) {
            stage_fail("load-grid", e.what());
        }
    } else {
        // -- repose-template
        TriMesh posed_template;
        try {
            posed_template = repose_mesh(template_mesh, template_weights, rig, pose);
            write_obj(posed_template, out_path("posed_template.obj"));
            artifacts.push_back(out_path("posed_template.obj"));
        } catch (const std::exception& e) {
            stage_fail("repose-template", e.what());
        }

        // -- canonicalize-scan
        TriMesh canonical_scan = scan;
        try {
            const std::vector<SemanticPoint> canonical = semdf_to_canonical(
                scan.positions, posed_template, template_weights, rig, pose, cfg.cutoff);
            for (std::size_t i = 0; i < canonical.size(); ++i) {
                if (!canonical[i].assigned) ++result.unassigned_scan_vertices;
                canonical_scan.positions[i] = canonical[i].position;
            }
            if (result.unassigned_scan_vertices > 0)
                fail(std::to_string(result.unassigned_scan_vertices) +
                     " scan vertices beyond the assignment cutoff (" + std::to_string(cfg.cutoff) + " m)");
            compute_vertex_normals(canonical_scan);
            write_obj(canonical_scan, out_path("canonical_scan.obj"));
            artifacts.push_back(out_path("canonical_scan.obj"));
        } catch (const std::exception& e) {
            stage_fail("canonicalize-scan", e.what());
        }

        // -- evaluate-grid
        try {
            const MeshSDFField field(canonical_scan, cfg.sdf_sharpness);
            const GridSpec spec = GridSpec::centered(cfg.volume_min, cfg.volume_max, cfg.grid_resolution);
            grid = evaluate_on_grid(field, spec, nullptr, nullptr, cfg.threads);
            write_grid(grid, out_path("occupancy.grid"));
            artifacts.push_back(out_path("occupancy.grid"));
        } catch (const std::exception& e) {
            stage_fail("evaluate-grid", e.what());
        }
    }

    // -- extract-isosurface
    try {
        result.canonical_reconstruction = extract_isosurface(grid, cfg.tau);
        if (result.canonical_reconstruction.empty())
            fail("isosurface at tau=" + std::to_string(cfg.tau) + " is empty");
        write_obj(result.canonical_reconstruction, out_path("canonical_reconstruction.obj"));
        artifacts.push_back(out_path("canonical_reconstruction.obj"));
    } catch (const std::exception& e) {
        stage_fail("extract-isosurface", e.what());
    }

    // -- assign-weights
    SkinWeightMatrix recon_weights;
    try {
        const std::vector<SemanticPoint> assigned = assign_skin_weights(
            result.canonical_reconstruction.positions, template_mesh, template_weights, cfg.cutoff);
        recon_weights.num_parts = template_weights.num_parts;
        std::size_t unassigned = 0;
        for (const auto& sp : assigned) {
            recon_weights.rows.push_back(sp.weights);
            if (!sp.assigned) ++unassigned;
        }
        if (unassigned > 0)
            fail(std::to_string(unassigned) + " reconstructed vertices beyond the assignment cutoff");
        save_json(weights_to_json(recon_weights), out_path("reconstruction_weights.json"));
        artifacts.push_back(out_path("reconstruction_weights.json"));
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        stage_fail("assign-weights", e.what());
    }

    // -- repose-reconstruction
    try {
        result.reposed_reconstruction =
            repose_mesh(result.canonical_reconstruction, recon_weights, rig, pose);
        write_obj(result.reposed_reconstruction, out_path("reposed_reconstruction.obj"));
        artifacts.push_back(out_path("reposed_reconstruction.obj"));
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        stage_fail("repose-reconstruction", e.what());
    }

    // -- export-features
    if (!cfg.export_features.empty()) {
        try {
            const SpatialFeatureKind kind = detail::feature_kind_from_name(cfg.export_features);
            std::vector<SpatialFeature> features;
            features.reserve(result.canonical_reconstruction.vertex_count());
            for (const Vec3& p : result.canonical_reconstruction.positions)
                features.push_back(spatial_feature(p, landmarks, kind));
            const std::size_t dim = spatial_feature_dim(kind, landmarks.size());
            write_features(features, kind, dim, out_path("vertex_features.bin"));
            artifacts.push_back(out_path("vertex_features.bin"));
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            stage_fail("export-features", e.what());
        }
    }

    return result;
}

}  // namespace repose
