#pragma once

/**
 * @file field_io.hpp
 * @brief BIMERON-FIELD v1 snapshots and their JSON sidecars.
 *
 * Layout (plain text, one record per line):
 *
 *     BIMERON-FIELD v1
 *     <kind> <n> <h> <components>
 *     <i> <j> <m1> <m2> [<m3>]        one line per active node, row-major
 *
 * Floating values carry 17 significant digits, which round-trips IEEE doubles
 * bit-exactly. The sidecar `<file>.json` holds energy parameters and run
 * provenance; the field file alone determines the field.
 */

#include "bimeron/error.hpp"
#include "bimeron/grid.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <type_traits>
#include <vector>

namespace bimeron {

inline constexpr const char* kFieldMagic = "BIMERON-FIELD v1";

/// Shortest-safe text form of a double: 17 significant digits.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace detail {

template <class V>
constexpr int components_of() {
    if constexpr (std::is_same_v<V, Vec3>) return 3;
    else return 2;
}

inline double parse_double(const std::string& token, const std::string& path) {
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0') throw Error("malformed number '" + token + "' in " + path);
    return v;
}

inline std::optional<double> infer_boundary_phase(const SphereField& field) {
    const auto& g = field.grid();
    if (g.kind() != DomainKind::Disk) return std::nullopt;
    std::optional<Vec3> rim;
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.boundary(k)) continue;
        if (!rim) rim = field[k];
        else if (!(field[k] == *rim)) return std::nullopt;
    }
    if (!rim || rim->z != 0.0) return std::nullopt;
    double phase = std::atan2(rim->y, rim->x);
    if (phase < 0.0) phase += 2.0 * std::numbers::pi;
    return phase;
}

} // namespace detail

template <class V>
void save_field(const std::string& path, const Field<V>& field) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    const auto& g = field.grid();
    out << kFieldMagic << '\n'
        << to_string(g.kind()) << ' ' << g.n() << ' ' << format_double(g.h()) << ' '
        << detail::components_of<V>() << '\n';
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.active(k)) continue;
        const V& m = field[k];
        out << g.col(k) << ' ' << g.row(k) << ' ' << format_double(m.x) << ' ' << format_double(m.y);
        if constexpr (std::is_same_v<V, Vec3>) out << ' ' << format_double(m.z);
        out << '\n';
    }
    if (!out) throw Error("write failed for " + path);
}

/**
 * Reads a snapshot written by save_field. Inactive disk nodes, which are not
 * stored, take the rim value when the rim is uniform in-plane.
 */
template <class V>
Field<V> load_field(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::string line;
    if (!std::getline(in, line) || line != kFieldMagic) throw Error("not a BIMERON-FIELD v1 file: " + path);
    if (!std::getline(in, line)) throw Error("missing header in " + path);
    std::istringstream header(line);
    std::string kind_s, h_s;
    int n = 0, comps = 0;
    if (!(header >> kind_s >> n >> h_s >> comps)) throw Error("malformed header in " + path);
    if (comps != detail::components_of<V>()) throw Error("component count mismatch in " + path);
    auto grid = make_grid(parse_domain_kind(kind_s), n);
    if (detail::parse_double(h_s, path) != grid->h()) throw Error("spacing mismatch in " + path);

    std::vector<V> values(grid->size());
    std::vector<char> seen(grid->size(), 0);
    std::size_t count = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        int i = 0, j = 0;
        std::string a, b, c;
        if (!(row >> i >> j >> a >> b)) throw Error("malformed node line in " + path);
        if (i < 0 || j < 0 || i >= n || j >= n) throw Error("node index out of range in " + path);
        const std::size_t k = grid->index(i, j);
        if (!grid->active(k) || seen[k]) throw Error("unexpected node in " + path);
        V v{};
        v.x = detail::parse_double(a, path);
        v.y = detail::parse_double(b, path);
        if constexpr (std::is_same_v<V, Vec3>) {
            if (!(row >> c)) throw Error("malformed node line in " + path);
            v.z = detail::parse_double(c, path);
        }
        values[k] = v;
        seen[k] = 1;
        ++count;
    }
    if (count != grid->active_count()) throw Error("missing nodes in " + path);

    Field<V> field(grid, std::move(values));
    if constexpr (std::is_same_v<V, Vec3>) {
        const auto phase = detail::infer_boundary_phase(field);
        const Vec3 fill = phase ? rim_value(*phase) : Vec3{1.0, 0.0, 0.0};
        for (std::size_t k = 0; k < grid->size(); ++k)
            if (!grid->active(k)) field[k] = fill;
        field.set_boundary_phase(phase);
    }
    return field;
}

inline void write_json(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << doc.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    return nlohmann::json::parse(in);
}

/// Sidecar path convention: `<snapshot>.json`.
inline std::string sidecar_path(const std::string& snapshot) { return snapshot + ".json"; }

} // namespace bimeron
