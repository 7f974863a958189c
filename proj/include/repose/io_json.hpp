#pragma once

#include "repose/metrics.hpp"
#include "repose/render.hpp"
#include "repose/rig.hpp"
#include "repose/semspace.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace repose {

using nlohmann::json;

inline json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        fail("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void save_json(const json& j, const std::string& path, int indent = 2) {
    std::ofstream f(path);
    if (!f) fail("cannot open " + path);
    f << j.dump(indent) << "\n";
    if (!f) fail("write failed for " + path);
}

inline Vec3 vec3_from_json(const json& j) {
    require(j.is_array() && j.size() == 3, "expected a 3-element array");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

// --------------------------------------------------------------------------
// Rig: {"joints": [{"name": ..., "parent": null|index, "rest_position": [x,y,z]}, ...]}

inline json rig_to_json(const Rig& rig) {
    json joints = json::array();
    for (const Joint& j : rig.joints) {
        json item;
        item["name"] = j.name;
        if (j.parent < 0)
            item["parent"] = nullptr;
        else
            item["parent"] = j.parent;
        item["rest_position"] = vec3_to_json(j.rest_position);
        joints.push_back(item);
    }
    return json{{"joints", joints}};
}

inline Rig rig_from_json(const json& j) {
    require(j.contains("joints") && j["joints"].is_array(), "rig: missing joints array");
    Rig rig;
    for (const auto& item : j["joints"]) {
        Joint joint;
        joint.name = item.value("name", std::string{});
        joint.parent = item.contains("parent") && !item["parent"].is_null() ? item["parent"].get<int>() : -1;
        joint.rest_position = vec3_from_json(item.at("rest_position"));
        rig.joints.push_back(joint);
    }
    rig.validate();
    return rig;
}

// --------------------------------------------------------------------------
// Pose: {"rotations": [[w,x,y,z], ...], "root_translation": [x,y,z]}

inline json pose_to_json(const Pose& pose) {
    json rot = json::array();
    for (const Quat& q : pose.rotations) rot.push_back(json::array({q.w(), q.x(), q.y(), q.z()}));
    return json{{"rotations", rot}, {"root_translation", vec3_to_json(pose.root_translation)}};
}

inline Pose pose_from_json(const json& j) {
    require(j.contains("rotations") && j["rotations"].is_array(), "pose: missing rotations array");
    Pose pose;
    for (const auto& r : j["rotations"]) {
        require(r.is_array() && r.size() == 4, "pose: rotation must be [w,x,y,z]");
        pose.rotations.emplace_back(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(),
                                    r[3].get<double>());
    }
    if (j.contains("root_translation")) pose.root_translation = vec3_from_json(j["root_translation"]);
    return pose;
}

// --------------------------------------------------------------------------
// Weights: {"num_parts": K, "rows": [[[part, weight], ...], ...]}
// An empty row marks the point unassigned.

inline json weights_to_json(const SkinWeightMatrix& w) {
    json rows = json::array();
    for (const auto& row : w.rows) {
        json r = json::array();
        for (const auto& e : row) r.push_back(json::array({e.part, e.weight}));
        rows.push_back(r);
    }
    return json{{"num_parts", w.num_parts}, {"rows", rows}};
}

inline SkinWeightMatrix weights_from_json(const json& j) {
    require(j.contains("num_parts") && j.contains("rows"), "weights: missing num_parts or rows");
    SkinWeightMatrix w;
    w.num_parts = j["num_parts"].get<int>();
    for (const auto& row : j["rows"]) {
        SkinWeightMatrix::Row r;
        for (const auto& e : row) {
            require(e.is_array() && e.size() == 2, "weights: entry must be [part, weight]");
            r.push_back({e[0].get<int>(), e[1].get<double>()});
        }
        w.rows.push_back(std::move(r));
    }
    w.validate();
    return w;
}

// --------------------------------------------------------------------------
// Landmarks: [[x,y,z], ...]

inline json landmarks_to_json(const LandmarkSet& l) {
    json arr = json::array();
    for (const Vec3& p : l.positions) arr.push_back(vec3_to_json(p));
    return arr;
}

inline LandmarkSet landmarks_from_json(const json& j) {
    require(j.is_array(), "landmarks: expected an array of 3-vectors");
    LandmarkSet l;
    for (const auto& p : j) l.positions.push_back(vec3_from_json(p));
    l.validate();
    return l;
}

// --------------------------------------------------------------------------
// Camera: either {"view": [16 row-major], ...} or look-at form
// {"eye": [..], "target": [..], "up": [..], ...}.

inline json camera_to_json(const OrthoCamera& cam) {
    json j;
    json view = json::array();
    const Mat4 m = cam.view.matrix();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) view.push_back(m(r, c));
    j["view"] = view;
    j["width"] = cam.width;
    j["height"] = cam.height;
    j["scale"] = cam.scale;
    j["near"] = cam.near_depth;
    j["far"] = cam.far_depth;
    return j;
}

inline OrthoCamera camera_from_json(const json& j) {
    OrthoCamera cam;
    cam.width = j.value("width", 512);
    cam.height = j.value("height", 512);
    cam.scale = j.value("scale", 0.005);
    cam.near_depth = j.value("near", 0.0);
    cam.far_depth = j.value("far", 3.0);
    if (j.contains("view")) {
        const auto& v = j["view"];
        require(v.is_array() && v.size() == 16, "camera: view must have 16 row-major entries");
        Mat4 m;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) m(r, c) = v[static_cast<std::size_t>(4 * r + c)].get<double>();
        cam.view.matrix() = m;
    } else {
        require(j.contains("eye") && j.contains("target"), "camera: needs view or eye/target");
        const Vec3 eye = vec3_from_json(j["eye"]);
        const Vec3 target = vec3_from_json(j["target"]);
        const Vec3 up = j.contains("up") ? vec3_from_json(j["up"]) : Vec3(0, 1, 0);
        cam = OrthoCamera::look_at(eye, target, up, cam.width, cam.height, cam.scale, cam.near_depth,
                                   cam.far_depth);
    }
    cam.validate();
    return cam;
}

inline json metric_report_to_json(const MetricReport& r) {
    return json{{"p2s_cm", r.p2s_cm},
                {"chamfer_cm", r.chamfer_cm},
                {"normal_error", r.normal_error},
                {"p2s_recon_to_gt_cm", r.p2s_ab_cm},
                {"p2s_gt_to_recon_cm", r.p2s_ba_cm},
                {"samples", r.samples}};
}

// --------------------------------------------------------------------------
// Feature file: single-line JSON header, then rows of float32 feature values.

inline void write_features(const std::vector<SpatialFeature>& features, SpatialFeatureKind kind,
                           std::size_t dim, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("write_features: cannot open " + path);
    const char* kind_name = kind == SpatialFeatureKind::XYZ     ? "xyz"
                            : kind == SpatialFeatureKind::L2    ? "l2"
                            : kind == SpatialFeatureKind::RBF   ? "rbf"
                                                                : "rbf-per-axis";
    json header{{"count", features.size()}, {"dim", dim}, {"kind", kind_name}, {"value_type", "float32"}};
    f << header.dump() << "\n";
    for (const auto& feat : features) {
        require(feat.values.size() == dim, "write_features: inconsistent feature dimension");
        for (const double v : feat.values) {
            const float fv = static_cast<float>(v);
            f.write(reinterpret_cast<const char*>(&fv), sizeof(float));
        }
    }
    if (!f) fail("write_features: write failed for " + path);
}

}  // namespace repose
