#pragma once

#include "repose/geometry.hpp"
#include "repose/math.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

namespace repose {

// Indexed triangle mesh. Normals and colors are optional per-vertex attributes;
// when present they are the same length as positions.
struct TriMesh {
    std::vector<Vec3> positions;
    std::vector<std::array<std::int32_t, 3>> faces;
    std::vector<Vec3> normals;  // unit, per vertex
    std::vector<Vec3> colors;   // rgb in [0,1], per vertex

    bool has_normals() const { return normals.size() == positions.size() && !positions.empty(); }
    bool has_colors() const { return colors.size() == positions.size() && !positions.empty(); }
    std::size_t vertex_count() const { return positions.size(); }
    std::size_t face_count() const { return faces.size(); }
    bool empty() const { return faces.empty(); }

    const Vec3& vert(std::int32_t i) const { return positions[static_cast<std::size_t>(i)]; }

    Vec3 face_normal(std::size_t f) const {
        const auto& t = faces[f];
        return triangle_normal(vert(t[0]), vert(t[1]), vert(t[2]));
    }

    double face_area(std::size_t f) const {
        const auto& t = faces[f];
        return triangle_area(vert(t[0]), vert(t[1]), vert(t[2]));
    }

    double surface_area() const {
        double a = 0.0;
        for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(f);
        return a;
    }

    void bounds(Vec3* lo, Vec3* hi) const {
        Vec3 l = Vec3::Constant(std::numeric_limits<double>::max());
        Vec3 h = Vec3::Constant(std::numeric_limits<double>::lowest());
        for (const Vec3& p : positions) {
            l = l.cwiseMin(p);
            h = h.cwiseMax(p);
        }
        *lo = l;
        *hi = h;
    }
};

// Area-weighted vertex normals recomputed from the current geometry.
inline void compute_vertex_normals(TriMesh& mesh) {
    mesh.normals.assign(mesh.positions.size(), Vec3::Zero());
    for (const auto& t : mesh.faces) {
        const Vec3& a = mesh.vert(t[0]);
        const Vec3& b = mesh.vert(t[1]);
        const Vec3& c = mesh.vert(t[2]);
        const Vec3 n = (b - a).cross(c - a);  // length = 2 * area
        mesh.normals[static_cast<std::size_t>(t[0])] += n;
        mesh.normals[static_cast<std::size_t>(t[1])] += n;
        mesh.normals[static_cast<std::size_t>(t[2])] += n;
    }
    for (Vec3& n : mesh.normals) n = normalized_or(n, Vec3(0, 0, 1));
}

namespace detail {
inline std::uint64_t undirected_edge_key(std::int32_t a, std::int32_t b) {
    const std::uint64_t lo = static_cast<std::uint32_t>(a < b ? a : b);
    const std::uint64_t hi = static_cast<std::uint32_t>(a < b ? b : a);
    return (hi << 32) | lo;
}
}  // namespace detail

// Number of undirected edges with face valence != 2. Zero for closed manifolds.
inline std::size_t open_edge_count(const TriMesh& mesh) {
    std::map<std::uint64_t, int> valence;
    for (const auto& t : mesh.faces) {
        valence[detail::undirected_edge_key(t[0], t[1])]++;
        valence[detail::undirected_edge_key(t[1], t[2])]++;
        valence[detail::undirected_edge_key(t[2], t[0])]++;
    }
    std::size_t open = 0;
    for (const auto& [key, v] : valence) {
        (void)key;
        if (v != 2) ++open;
    }
    return open;
}

inline bool is_watertight(const TriMesh& mesh) {
    return !mesh.empty() && open_edge_count(mesh) == 0;
}

// One-ring vertex adjacency (sorted, unique neighbours).
inline std::vector<std::vector<std::int32_t>> vertex_adjacency(const TriMesh& mesh) {
    std::vector<std::vector<std::int32_t>> adj(mesh.vertex_count());
    auto link = [&](std::int32_t a, std::int32_t b) {
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
    };
    for (const auto& t : mesh.faces) {
        link(t[0], t[1]);
        link(t[1], t[2]);
        link(t[2], t[0]);
    }
    for (auto& v : adj) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    return adj;
}

}  // namespace repose
