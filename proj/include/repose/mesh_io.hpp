#pragma once

#include "repose/field.hpp"
#include "repose/mesh.hpp"
#include "repose/render.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace repose {

namespace detail {

// Shortest representation that round-trips the double exactly.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// --------------------------------------------------------------------------
// OBJ. Positions are written with 17 significant digits, so re-reading
// reproduces the exact doubles. Per-vertex colors use the common
// "v x y z r g b" extension.

inline void write_obj(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) fail("write_obj: cannot open " + path);
    const bool colors = mesh.has_colors();
    const bool normals = mesh.has_normals();
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        const Vec3& p = mesh.positions[i];
        f << "v " << detail::fmt_double(p.x()) << ' ' << detail::fmt_double(p.y()) << ' '
          << detail::fmt_double(p.z());
        if (colors) {
            const Vec3& c = mesh.colors[i];
            f << ' ' << detail::fmt_double(c.x()) << ' ' << detail::fmt_double(c.y()) << ' '
              << detail::fmt_double(c.z());
        }
        f << '\n';
    }
    if (normals)
        for (const Vec3& n : mesh.normals)
            f << "vn " << detail::fmt_double(n.x()) << ' ' << detail::fmt_double(n.y()) << ' '
              << detail::fmt_double(n.z()) << '\n';
    for (const auto& t : mesh.faces) {
        if (normals)
            f << "f " << t[0] + 1 << "//" << t[0] + 1 << ' ' << t[1] + 1 << "//" << t[1] + 1 << ' '
              << t[2] + 1 << "//" << t[2] + 1 << '\n';
        else
            f << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    }
    if (!f) fail("write_obj: write failed for " + path);
}

inline TriMesh read_obj(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail("read_obj: cannot open " + path);
    TriMesh mesh;
    std::vector<Vec3> file_normals;
    bool normals_aligned = true;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            double x, y, z;
            ss >> x >> y >> z;
            if (!ss) fail("read_obj: malformed vertex in " + path);
            mesh.positions.emplace_back(x, y, z);
            double r, g, b;
            if (ss >> r >> g >> b) mesh.colors.emplace_back(r, g, b);
        } else if (tag == "vn") {
            double x, y, z;
            ss >> x >> y >> z;
            file_normals.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<std::int32_t> poly;
            std::string item;
            while (ss >> item) {
                // forms: "i", "i/t", "i//n", "i/t/n"; indices are 1-based
                const std::size_t slash = item.find('/');
                const std::string v_str = item.substr(0, slash);
                int v = 0;
                std::from_chars(v_str.data(), v_str.data() + v_str.size(), v);
                if (v < 0) v = static_cast<int>(mesh.positions.size()) + v + 1;
                poly.push_back(v - 1);
                if (slash != std::string::npos) {
                    const std::size_t slash2 = item.find('/', slash + 1);
                    if (slash2 != std::string::npos && slash2 + 1 < item.size()) {
                        int n = 0;
                        std::from_chars(item.data() + slash2 + 1, item.data() + item.size(), n);
                        if (n != v) normals_aligned = false;
                    }
                }
            }
            for (std::size_t k = 2; k < poly.size(); ++k)
                mesh.faces.push_back({poly[0], poly[k - 1], poly[k]});
        }
    }
    if (mesh.colors.size() != mesh.positions.size()) mesh.colors.clear();
    if (normals_aligned && file_normals.size() == mesh.positions.size())
        mesh.normals = std::move(file_normals);
    return mesh;
}

// --------------------------------------------------------------------------
// Binary little-endian PLY. Meshes use float positions/normals and uchar
// colors (the common interchange layout); sphere clouds and sample sets use
// float properties throughout, including opacity/occupancy.

namespace detail {

struct PlyProperty {
    std::string name;
    std::string type;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
    bool list = false;
    std::string list_count_type, list_value_type;
};

inline std::size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32")
        return 4;
    if (t == "double" || t == "float64") return 8;
    fail("ply: unsupported type " + t);
}

inline double ply_read_scalar(std::ifstream& f, const std::string& type) {
    unsigned char buf[8];
    f.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(ply_type_size(type)));
    if (type == "float" || type == "float32") {
        float v;
        std::memcpy(&v, buf, 4);
        return v;
    }
    if (type == "double" || type == "float64") {
        double v;
        std::memcpy(&v, buf, 8);
        return v;
    }
    if (type == "uchar" || type == "uint8") return buf[0];
    if (type == "char" || type == "int8") return static_cast<signed char>(buf[0]);
    if (type == "int" || type == "int32") {
        std::int32_t v;
        std::memcpy(&v, buf, 4);
        return v;
    }
    if (type == "uint" || type == "uint32") {
        std::uint32_t v;
        std::memcpy(&v, buf, 4);
        return v;
    }
    if (type == "short" || type == "int16") {
        std::int16_t v;
        std::memcpy(&v, buf, 2);
        return v;
    }
    if (type == "ushort" || type == "uint16") {
        std::uint16_t v;
        std::memcpy(&v, buf, 2);
        return v;
    }
    fail("ply: unsupported type " + type);
}

template <typename T>
inline void ply_write(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

struct PlyHeader {
    std::vector<PlyElement> elements;
    std::vector<std::string> comments;
};

inline PlyHeader ply_read_header(std::ifstream& f, const std::string& path) {
    std::string line;
    std::getline(f, line);
    if (line != "ply") fail("read_ply: not a PLY file: " + path);
    PlyHeader header;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "format") {
            std::string fmt;
            ss >> fmt;
            if (fmt != "binary_little_endian") fail("read_ply: only binary_little_endian supported: " + path);
        } else if (tag == "comment") {
            header.comments.push_back(line.substr(8));
        } else if (tag == "element") {
            PlyElement e;
            ss >> e.name >> e.count;
            header.elements.push_back(e);
        } else if (tag == "property") {
            std::string type;
            ss >> type;
            if (type == "list") {
                ss >> header.elements.back().list_count_type >> header.elements.back().list_value_type;
                header.elements.back().list = true;
                std::string name;
                ss >> name;
            } else {
                PlyProperty p;
                p.type = type;
                ss >> p.name;
                header.elements.back().properties.push_back(p);
            }
        } else if (tag == "end_header") {
            break;
        }
    }
    return header;
}

}  // namespace detail

inline void write_ply_mesh(const TriMesh& mesh, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("write_ply_mesh: cannot open " + path);
    const bool normals = mesh.has_normals();
    const bool colors = mesh.has_colors();
    f << "ply\nformat binary_little_endian 1.0\n";
    f << "element vertex " << mesh.vertex_count() << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    if (normals) f << "property float nx\nproperty float ny\nproperty float nz\n";
    if (colors) f << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    f << "element face " << mesh.face_count() << "\n";
    f << "property list uchar int vertex_indices\n";
    f << "end_header\n";
    for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
        for (int a = 0; a < 3; ++a) detail::ply_write(f, static_cast<float>(mesh.positions[i][a]));
        if (normals)
            for (int a = 0; a < 3; ++a) detail::ply_write(f, static_cast<float>(mesh.normals[i][a]));
        if (colors)
            for (int a = 0; a < 3; ++a)
                detail::ply_write(f, static_cast<unsigned char>(clamp01(mesh.colors[i][a]) * 255.0 + 0.5));
    }
    for (const auto& t : mesh.faces) {
        detail::ply_write(f, static_cast<unsigned char>(3));
        for (int a = 0; a < 3; ++a) detail::ply_write(f, t[a]);
    }
    if (!f) fail("write_ply_mesh: write failed for " + path);
}

inline TriMesh read_ply_mesh(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("read_ply_mesh: cannot open " + path);
    const detail::PlyHeader header = detail::ply_read_header(f, path);
    TriMesh mesh;
    for (const auto& e : header.elements) {
        if (e.name == "vertex") {
            std::vector<double> values(e.properties.size());
            int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ir = -1, ig = -1, ib = -1;
            for (std::size_t p = 0; p < e.properties.size(); ++p) {
                const std::string& n = e.properties[p].name;
                if (n == "x") ix = static_cast<int>(p);
                else if (n == "y") iy = static_cast<int>(p);
                else if (n == "z") iz = static_cast<int>(p);
                else if (n == "nx") inx = static_cast<int>(p);
                else if (n == "ny") iny = static_cast<int>(p);
                else if (n == "nz") inz = static_cast<int>(p);
                else if (n == "red") ir = static_cast<int>(p);
                else if (n == "green") ig = static_cast<int>(p);
                else if (n == "blue") ib = static_cast<int>(p);
            }
            require(ix >= 0 && iy >= 0 && iz >= 0, "read_ply_mesh: missing position properties in " + path);
            const bool color_uchar = ir >= 0 && (e.properties[static_cast<std::size_t>(ir)].type == "uchar" ||
                                                 e.properties[static_cast<std::size_t>(ir)].type == "uint8");
            for (std::size_t i = 0; i < e.count; ++i) {
                for (std::size_t p = 0; p < e.properties.size(); ++p)
                    values[p] = detail::ply_read_scalar(f, e.properties[p].type);
                mesh.positions.emplace_back(values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)], values[static_cast<std::size_t>(iz)]);
                if (inx >= 0)
                    mesh.normals.emplace_back(values[static_cast<std::size_t>(inx)], values[static_cast<std::size_t>(iny)], values[static_cast<std::size_t>(inz)]);
                if (ir >= 0) {
                    Vec3 c(values[static_cast<std::size_t>(ir)], values[static_cast<std::size_t>(ig)], values[static_cast<std::size_t>(ib)]);
                    if (color_uchar) c /= 255.0;
                    mesh.colors.push_back(c);
                }
            }
        } else if (e.name == "face") {
            for (std::size_t i = 0; i < e.count; ++i) {
                const int n = static_cast<int>(detail::ply_read_scalar(f, e.list_count_type));
                std::vector<std::int32_t> poly(static_cast<std::size_t>(n));
                for (int k = 0; k < n; ++k)
                    poly[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(detail::ply_read_scalar(f, e.list_value_type));
                for (std::size_t k = 2; k < poly.size(); ++k)
                    mesh.faces.push_back({poly[0], poly[k - 1], poly[k]});
            }
        } else {
            // skip unknown fixed-size elements
            std::size_t row = 0;
            for (const auto& p : e.properties) row += detail::ply_type_size(p.type);
            f.seekg(static_cast<std::streamoff>(row * e.count), std::ios::cur);
        }
    }
    if (!f) fail("read_ply_mesh: truncated payload in " + path);
    return mesh;
}

// Sphere clouds: float positions/normals/colors plus opacity; the shared
// radius rides along as a header comment.
inline void write_ply_cloud(const SphereCloud& cloud, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("write_ply_cloud: cannot open " + path);
    f << "ply\nformat binary_little_endian 1.0\n";
    f << "comment sphere_radius " << detail::fmt_double(cloud.radius) << "\n";
    f << "element vertex " << cloud.size() << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    f << "property float nx\nproperty float ny\nproperty float nz\n";
    f << "property float red\nproperty float green\nproperty float blue\n";
    f << "property float opacity\n";
    f << "end_header\n";
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int a = 0; a < 3; ++a) detail::ply_write(f, static_cast<float>(cloud.centers[i][a]));
        for (int a = 0; a < 3; ++a) detail::ply_write(f, static_cast<float>(cloud.normals[i][a]));
        for (int a = 0; a < 3; ++a) detail::ply_write(f, static_cast<float>(cloud.colors[i][a]));
        detail::ply_write(f, static_cast<float>(cloud.opacities[i]));
    }
    if (!f) fail("write_ply_cloud: write failed for " + path);
}

inline SphereCloud read_ply_cloud(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("read_ply_cloud: cannot open " + path);
    const detail::PlyHeader header = detail::ply_read_header(f, path);
    SphereCloud cloud;
    for (const std::string& c : header.comments) {
        std::istringstream ss(c);
        std::string key;
        ss >> key;
        if (key == "sphere_radius") ss >> cloud.radius;
    }
    for (const auto& e : header.elements) {
        if (e.name != "vertex") {
            std::size_t row = 0;
            for (const auto& p : e.properties) row += detail::ply_type_size(p.type);
            f.seekg(static_cast<std::streamoff>(row * e.count), std::ios::cur);
            continue;
        }
        std::vector<double> values(e.properties.size());
        auto find = [&](const char* n) {
            for (std::size_t p = 0; p < e.properties.size(); ++p)
                if (e.properties[p].name == n) return static_cast<int>(p);
            return -1;
        };
        const int ix = find("x"), iy = find("y"), iz = find("z");
        const int inx = find("nx"), iny = find("ny"), inz = find("nz");
        const int ir = find("red"), ig = find("green"), ib = find("blue");
        const int io = find("opacity");
        require(ix >= 0 && iy >= 0 && iz >= 0, "read_ply_cloud: missing position properties in " + path);
        const bool color_uchar = ir >= 0 && (e.properties[static_cast<std::size_t>(ir)].type == "uchar");
        for (std::size_t i = 0; i < e.count; ++i) {
            for (std::size_t p = 0; p < e.properties.size(); ++p)
                values[p] = detail::ply_read_scalar(f, e.properties[p].type);
            cloud.centers.emplace_back(values[static_cast<std::size_t>(ix)], values[static_cast<std::size_t>(iy)], values[static_cast<std::size_t>(iz)]);
            cloud.normals.push_back(inx >= 0 ? Vec3(values[static_cast<std::size_t>(inx)], values[static_cast<std::size_t>(iny)], values[static_cast<std::size_t>(inz)]) : Vec3(0, 0, 1));
            Vec3 col = ir >= 0 ? Vec3(values[static_cast<std::size_t>(ir)], values[static_cast<std::size_t>(ig)], values[static_cast<std::size_t>(ib)]) : Vec3(0.5, 0.5, 0.5);
            if (color_uchar) col /= 255.0;
            cloud.colors.push_back(col);
            cloud.opacities.push_back(io >= 0 ? values[static_cast<std::size_t>(io)] : 1.0);
        }
    }
    return cloud;
}

// Sample sets: float positions and occupancy; normals/colors written when present.
inline void write_ply_samples(const FieldSampleSet& set, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("write_ply_samples: cannot open " + path);
    const bool normals = set.has_normals();
    const bool colors = set.has_colors();
    f << "ply\nformat binary_little_endian 1.0\n";
    f << "element vertex " << set.size() << "\n";
    f << "property float x\nproperty float y\nproperty float z\n";
    f << "property float occupancy\n";
    if (normals) f << "property float nx\nproperty float ny\nproperty float nz\n";
    if (colors) f << "property float red\nproperty float green\nproperty float blue\n";
    f << "end_header\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        for (int a = 0; a < 3; ++a) detail::ply_write(f, static_cast<float>(set.positions[i][a]));
        detail::ply_write(f, static_cast<float>(set.occupancy[i]));
        if (normals)
            for (int a = 0; a < 3; ++a) detail::ply_write(f, static_cast<float>(set.normals[i][a]));
        if (colors)
            for (int a = 0; a < 3; ++a) detail::ply_write(f, static_cast<float>(set.colors[i][a]));
    }
    if (!f) fail("write_ply_samples: write failed for " + path);
}

}  // namespace repose
