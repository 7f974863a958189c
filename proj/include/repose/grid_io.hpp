#pragma once

#include "repose/field.hpp"
#include "repose/io_json.hpp"

#include <fstream>
#include <string>

namespace repose {

// Grid file: one line of JSON ({"resolution", "origin", "spacing",
// "value_type": "float32", "count"}), a newline, then the raw little-endian
// float32 payload in x-fastest order.
inline void write_grid(const ScalarGrid& grid, const std::string& path) {
    grid.validate();
    std::ofstream f(path, std::ios::binary);
    if (!f) fail("write_grid: cannot open " + path);
    json header{{"resolution", {grid.resolution[0], grid.resolution[1], grid.resolution[2]}},
                {"origin", vec3_to_json(grid.origin)},
                {"spacing", grid.spacing},
                {"value_type", "float32"},
                {"count", grid.values.size()}};
    f << header.dump() << "\n";
    f.write(reinterpret_cast<const char*>(grid.values.data()),
            static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
    if (!f) fail("write_grid: write failed for " + path);
}

inline ScalarGrid read_grid(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail("read_grid: cannot open " + path);
    std::string line;
    std::getline(f, line);
    json header;
    try {
        header = json::parse(line);
    } catch (const json::parse_error& e) {
        fail("read_grid: invalid header in " + path + ": " + e.what());
    }
    ScalarGrid grid;
    const auto& res = header.at("resolution");
    grid.resolution = {res[0].get<int>(), res[1].get<int>(), res[2].get<int>()};
    grid.origin = vec3_from_json(header.at("origin"));
    grid.spacing = header.at("spacing").get<double>();
    require(header.value("value_type", std::string{"float32"}) == "float32",
            "read_grid: unsupported value type in " + path);
    grid.values.resize(header.at("count").get<std::size_t>());
    f.read(reinterpret_cast<char*>(grid.values.data()),
           static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
    if (!f) fail("read_grid: truncated payload in " + path);
    grid.validate();
    return grid;
}

}  // namespace repose
