#pragma once

#include "repose/mesh.hpp"
#include "repose/rig.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace repose {

struct ContactResult {
    std::vector<char> contact;   // vertices in a marked contact pair
    std::vector<char> removed;   // contact set after one-ring dilation
    TriMesh cut;                 // faces whose vertices are all in `removed` dropped
    std::size_t contact_count = 0;
};

namespace detail {

inline std::uint64_t cell_key(int x, int y, int z) {
    // 21 bits per axis, offset to keep coordinates positive
    const std::uint64_t ux = static_cast<std::uint64_t>(x + (1 << 20)) & 0x1fffff;
    const std::uint64_t uy = static_cast<std::uint64_t>(y + (1 << 20)) & 0x1fffff;
    const std::uint64_t uz = static_cast<std::uint64_t>(z + (1 << 20)) & 0x1fffff;
    return (ux << 42) | (uy << 21) | uz;
}

inline int dominant_part(const SkinWeightMatrix::Row& row) {
    int best = -1;
    double best_w = -1.0;
    for (const auto& e : row) {
        if (e.weight > best_w || (e.weight == best_w && e.part < best)) {
            best_w = e.weight;
            best = e.part;
        }
    }
    return best;
}

}  // namespace detail

// Self-contact detection by skinning-part disagreement: vertex pairs closer
// than `contact_eps` whose dominant body parts differ get marked, the marked
// set is dilated by one ring, and triangles whose three vertices all fall in
// the dilated set are removed. The cut mesh keeps the full vertex list (so
// weight rows stay aligned) and may have open boundaries.
inline ContactResult detect_self_contact(const TriMesh& mesh, const SkinWeightMatrix& weights,
                                         double contact_eps = 0.01) {
    require(contact_eps > 0.0, "detect_self_contact: contact_eps must be > 0");
    require(weights.row_count() == mesh.vertex_count(),
            "detect_self_contact: weight rows do not align with mesh vertices");

    ContactResult res;
    res.contact.assign(mesh.vertex_count(), 0);

    std::vector<int> dominant(mesh.vertex_count());
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i)
        dominant[i] = detail::dominant_part(weights.rows[i]);

    // uniform grid at cell size eps; candidate pairs live in the 27-cell stencil
    std::unordered_map<std::uint64_t, std::vector<std::int32_t>> cells;
    auto cell_of = [&](const Vec3& p) {
        return std::array<int, 3>{static_cast<int>(std::floor(p.x() / contact_eps)),
                                  static_cast<int>(std::floor(p.y() / contact_eps)),
                                  static_cast<int>(std::floor(p.z() / contact_eps))};
    };
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        const auto c = cell_of(mesh.positions[i]);
        cells[detail::cell_key(c[0], c[1], c[2])].push_back(static_cast<std::int32_t>(i));
    }
    const double eps2 = contact_eps * contact_eps;
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        const auto c = cell_of(mesh.positions[i]);
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto it = cells.find(detail::cell_key(c[0] + dx, c[1] + dy, c[2] + dz));
                    if (it == cells.end()) continue;
                    for (const std::int32_t j : it->second) {
                        if (static_cast<std::size_t>(j) <= i) continue;
                        if (dominant[i] == dominant[static_cast<std::size_t>(j)]) continue;
                        if ((mesh.positions[i] - mesh.positions[static_cast<std::size_t>(j)]).squaredNorm() < eps2) {
                            res.contact[i] = 1;
                            res.contact[static_cast<std::size_t>(j)] = 1;
                        }
                    }
                }
    }
    for (const char m : res.contact) res.contact_count += static_cast<std::size_t>(m);

    res.removed = res.contact;
    if (res.contact_count > 0) {
        const auto adj = vertex_adjacency(mesh);
        for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
            if (!res.contact[i]) continue;
            for (const std::int32_t nb : adj[i]) res.removed[static_cast<std::size_t>(nb)] = 1;
        }
    }

    res.cut = mesh;
    res.cut.faces.clear();
    for (const auto& t : mesh.faces) {
        const bool drop = res.removed[static_cast<std::size_t>(t[0])] &&
                          res.removed[static_cast<std::size_t>(t[1])] &&
                          res.removed[static_cast<std::size_t>(t[2])];
        if (!drop) res.cut.faces.push_back(t);
    }
    return res;
}

}  // namespace repose
