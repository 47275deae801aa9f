#pragma once

#include "splatfit/core/error.hpp"
#include "splatfit/splat/gaussian_set.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace splatfit {

// Binary little-endian PLY with one vertex element per splat. Property order
// is fixed: x y z rot_w rot_x rot_y rot_z log_scale_x log_scale_y log_scale_z
// opacity_logit red green blue, all float32.

namespace detail {
inline const char* kPlyProps[] = {
    "x", "y", "z", "rot_w", "rot_x", "rot_y", "rot_z",
    "log_scale_x", "log_scale_y", "log_scale_z", "opacity_logit",
    "red", "green", "blue"};
constexpr int kPlyPropCount = 14;
}  // namespace detail

inline void save_ply(const GaussianSet& g, const std::string& path) {
    g.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw MissingFile("cannot open for writing: " + path);
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << g.size() << "\n";
    for (const char* p : detail::kPlyProps) out << "property float " << p << "\n";
    out << "end_header\n";
    std::vector<float> row(detail::kPlyPropCount);
    for (std::size_t i = 0; i < g.size(); ++i) {
        int k = 0;
        for (int a = 0; a < 3; ++a) row[k++] = static_cast<float>(g.centers[i][a]);
        for (int a = 0; a < 4; ++a) row[k++] = static_cast<float>(g.rotations[i][a]);
        for (int a = 0; a < 3; ++a) row[k++] = static_cast<float>(g.log_scales[i][a]);
        row[k++] = static_cast<float>(g.opacity_logits[i]);
        for (int a = 0; a < 3; ++a) row[k++] = static_cast<float>(g.colors[i][a]);
        out.write(reinterpret_cast<const char*>(row.data()), sizeof(float) * row.size());
    }
    if (!out) throw ParseError("short write while saving PLY: " + path);
}

inline GaussianSet load_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "ply")
        throw ParseError(path + ": not a PLY file");
    std::size_t count = 0;
    int props_seen = 0;
    bool fmt_ok = false;
    while (std::getline(in, line)) {
        if (line == "end_header") break;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "format") {
            std::string f;
            ls >> f;
            fmt_ok = (f == "binary_little_endian");
        } else if (tok == "element") {
            std::string name;
            ls >> name >> count;
            if (name != "vertex") throw ParseError(path + ": unexpected element " + name);
        } else if (tok == "property") {
            std::string type, name;
            ls >> type >> name;
            if (props_seen >= detail::kPlyPropCount ||
                name != detail::kPlyProps[props_seen] || type != "float")
                throw ParseError(path + ": unexpected property '" + name + "' at slot " +
                                 std::to_string(props_seen));
            ++props_seen;
        }
    }
    if (!fmt_ok) throw ParseError(path + ": expected binary_little_endian format");
    if (props_seen != detail::kPlyPropCount)
        throw ParseError(path + ": expected " + std::to_string(detail::kPlyPropCount) +
                         " properties, got " + std::to_string(props_seen));
    GaussianSet g;
    g.resize(count);
    std::vector<float> row(detail::kPlyPropCount);
    for (std::size_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(row.data()), sizeof(float) * row.size());
        if (!in) throw ParseError(path + ": truncated vertex data at splat " + std::to_string(i));
        int k = 0;
        for (int a = 0; a < 3; ++a) g.centers[i][a] = row[k++];
        for (int a = 0; a < 4; ++a) g.rotations[i][a] = row[k++];
        for (int a = 0; a < 3; ++a) g.log_scales[i][a] = row[k++];
        g.opacity_logits[i] = row[k++];
        for (int a = 0; a < 3; ++a) g.colors[i][a] = row[k++];
    }
    return g;
}

}  // namespace splatfit
