#pragma once

#include "repose/field.hpp"
#include "repose/mc_tables.hpp"
#include "repose/mesh.hpp"

#include <cstdint>
#include <unordered_map>

namespace repose {

namespace detail {

// Corner offsets in (i,j,k) matching the case tables in mc_tables.hpp.
inline constexpr int kMcCorner[8][3] = {
    {0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {0, 0, 1},
    {0, 1, 0}, {1, 1, 0}, {1, 1, 1}, {0, 1, 1},
};

// Each cube edge as (canonical start corner offset, axis). The canonical
// start is the endpoint with the smaller lattice index, so neighbouring cells
// address a shared edge identically and the interpolated vertex is reused.
struct McEdge {
    int di, dj, dk;  // canonical start corner relative to the cell
    int axis;
    int a, b;        // corner indices of the edge endpoints (a = canonical start)
};

inline constexpr McEdge kMcEdge[12] = {
    {0, 0, 0, 0, 0, 1},  // e0: v0-v1
    {1, 0, 0, 2, 1, 2},  // e1: v1-v2
    {0, 0, 1, 0, 3, 2},  // e2: v3-v2
    {0, 0, 0, 2, 0, 3},  // e3: v0-v3
    {0, 1, 0, 0, 4, 5},  // e4: v4-v5
    {1, 1, 0, 2, 5, 6},  // e5: v5-v6
    {0, 1, 1, 0, 7, 6},  // e6: v7-v6
    {0, 1, 0, 2, 4, 7},  // e7: v4-v7
    {0, 0, 0, 1, 0, 4},  // e8: v0-v4
    {1, 0, 0, 1, 1, 5},  // e9: v1-v5
    {1, 0, 1, 1, 2, 6},  // e10: v2-v6
    {0, 0, 1, 1, 3, 7},  // e11: v3-v7
};

}  // namespace detail

// Marching cubes over a sampled scalar grid: triangulates the `tau` level set
// with vertices linearly interpolated along lattice edges. Cell-face
// ambiguities are resolved by the case table itself. Triangles are wound so
// normals point toward decreasing values (outward for occupancy fields).
// Returns an empty mesh when no cell crosses the level.
inline TriMesh extract_isosurface(const ScalarGrid& grid, double tau = 0.5) {
    grid.validate();
    TriMesh mesh;
    const int nx = grid.resolution[0], ny = grid.resolution[1], nz = grid.resolution[2];
    if (nx < 2 || ny < 2 || nz < 2) return mesh;

    // vertex id per crossing edge, keyed by (lattice node, axis)
    std::unordered_map<std::uint64_t, std::int32_t> edge_vertex;
    auto edge_key = [&](int i, int j, int k, int axis) {
        const std::uint64_t node = (static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(ny) +
                                    static_cast<std::uint64_t>(j)) *
                                       static_cast<std::uint64_t>(nx) +
                                   static_cast<std::uint64_t>(i);
        return node * 3 + static_cast<std::uint64_t>(axis);
    };

    const float iso = static_cast<float>(tau);
    double vals[8];
    std::int32_t edge_ids[12];

    for (int k = 0; k < nz - 1; ++k) {
        for (int j = 0; j < ny - 1; ++j) {
            for (int i = 0; i < nx - 1; ++i) {
                int cube_index = 0;
                for (int c = 0; c < 8; ++c) {
                    vals[c] = grid.at(i + detail::kMcCorner[c][0], j + detail::kMcCorner[c][1],
                                      k + detail::kMcCorner[c][2]);
                    if (vals[c] < iso) cube_index |= (1 << c);
                }
                const int edge_mask = detail::kMcEdgeTable[cube_index];
                if (edge_mask == 0) continue;

                for (int e = 0; e < 12; ++e) {
                    if (!(edge_mask & (1 << e))) continue;
                    const detail::McEdge& ed = detail::kMcEdge[e];
                    const std::uint64_t key = edge_key(i + ed.di, j + ed.dj, k + ed.dk, ed.axis);
                    auto it = edge_vertex.find(key);
                    if (it == edge_vertex.end()) {
                        const double va = vals[ed.a], vb = vals[ed.b];
                        double t = 0.5;
                        if (va != vb) t = std::clamp((tau - va) / (vb - va), 0.0, 1.0);
                        Vec3 p = grid.position(i + ed.di, j + ed.dj, k + ed.dk);
                        p[ed.axis] += t * grid.spacing;
                        const std::int32_t id = static_cast<std::int32_t>(mesh.positions.size());
                        mesh.positions.push_back(p);
                        it = edge_vertex.emplace(key, id).first;
                    }
                    edge_ids[e] = it->second;
                }

                const int* tri = detail::kMcTriTable[cube_index];
                for (int t = 0; tri[t] != -1; t += 3) {
                    // table winding is inward for value<iso outside; swap for outward normals
                    mesh.faces.push_back({edge_ids[tri[t]], edge_ids[tri[t + 2]], edge_ids[tri[t + 1]]});
                }
            }
        }
    }
    if (!mesh.empty()) compute_vertex_normals(mesh);
    return mesh;
}

}  // namespace repose
