#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "anyref/anyres.hpp"
#include "anyref/encoders.hpp"
#include "anyref/error.hpp"
#include "anyref/sampler.hpp"

namespace anyref {

/// Every tunable in one flat bag; file form is "key=value" lines.
struct PipelineConfig {
    int cell_size = kDefaultCellSize;
    int max_cells = kDefaultMaxCells;
    int token_budget = kDefaultTokenBudget;
    int tokens_per_image = 64;
    int patch_size = 14;
    int c_raw = 8;
    int c_hidden = 16;
    int c_out = 16;
    int n_points = 512;
    int n_anchors = 32;
    int k_neighbors = 8;
    double point_radius_norm = 0.005;
    std::uint64_t seed = 42;

    EncoderConfig encoder() const {
        EncoderConfig cfg;
        cfg.patch_size = patch_size;
        cfg.c_raw = c_raw;
        cfg.seed = seed;
        return cfg;
    }

    SamplerConfig sampler(std::uint64_t region_seed) const {
        SamplerConfig cfg;
        cfg.n_points = n_points;
        cfg.n_anchors = n_anchors;
        cfg.k_neighbors = k_neighbors;
        cfg.point_radius_norm = point_radius_norm;
        cfg.seed = region_seed;
        return cfg;
    }

    void validate() const {
        if (cell_size < 1 || max_cells < 1 || token_budget < 1 ||
            tokens_per_image < 1 || patch_size < 1 || c_raw < 1 ||
            c_hidden < 1 || c_out < 1)
            throw ConfigError("all size parameters must be positive");
        if (cell_size % patch_size != 0)
            throw ConfigError("cell_size must be divisible by patch_size");
        detail::validate_sampler_config(sampler(0));
    }
};

inline bool operator==(const PipelineConfig& a, const PipelineConfig& b) {
    return a.cell_size == b.cell_size && a.max_cells == b.max_cells &&
           a.token_budget == b.token_budget &&
           a.tokens_per_image == b.tokens_per_image &&
           a.patch_size == b.patch_size && a.c_raw == b.c_raw &&
           a.c_hidden == b.c_hidden && a.c_out == b.c_out &&
           a.n_points == b.n_points && a.n_anchors == b.n_anchors &&
           a.k_neighbors == b.k_neighbors &&
           a.point_radius_norm == b.point_radius_norm && a.seed == b.seed;
}

namespace detail {

template <typename Fn>
inline void for_each_config_key(PipelineConfig& cfg, Fn&& fn) {
    fn("cell_size", cfg.cell_size);
    fn("max_cells", cfg.max_cells);
    fn("token_budget", cfg.token_budget);
    fn("tokens_per_image", cfg.tokens_per_image);
    fn("patch_size", cfg.patch_size);
    fn("c_raw", cfg.c_raw);
    fn("c_hidden", cfg.c_hidden);
    fn("c_out", cfg.c_out);
    fn("n_points", cfg.n_points);
    fn("n_anchors", cfg.n_anchors);
    fn("k_neighbors", cfg.k_neighbors);
    fn("point_radius_norm", cfg.point_radius_norm);
    fn("seed", cfg.seed);
}

inline void assign_config_value(int& dst, const std::string& raw,
                                const std::string& key) {
    std::size_t used = 0;
    try {
        dst = std::stoi(raw, &used);
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": " + raw);
    }
    if (used != raw.size()) throw ConfigError("bad integer for " + key + ": " + raw);
}

inline void assign_config_value(double& dst, const std::string& raw,
                                const std::string& key) {
    std::size_t used = 0;
    try {
        dst = std::stod(raw, &used);
    } catch (const std::exception&) {
        throw ConfigError("bad real for " + key + ": " + raw);
    }
    if (used != raw.size()) throw ConfigError("bad real for " + key + ": " + raw);
}

inline void assign_config_value(std::uint64_t& dst, const std::string& raw,
                                const std::string& key) {
    std::size_t used = 0;
    try {
        dst = std::stoull(raw, &used);
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": " + raw);
    }
    if (used != raw.size()) throw ConfigError("bad integer for " + key + ": " + raw);
}

inline std::string config_value_string(int v) { return std::to_string(v); }
inline std::string config_value_string(std::uint64_t v) { return std::to_string(v); }
inline std::string config_value_string(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Flat key=value text; '#' lines are comments. Unknown keys are rejected so
/// typos cannot silently fall back to defaults.
inline PipelineConfig parse_config(std::istream& in) {
    PipelineConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key=value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        bool matched = false;
        detail::for_each_config_key(cfg, [&](const char* name, auto& field) {
            if (!matched && key == name) {
                detail::assign_config_value(field, value, key);
                matched = true;
            }
        });
        if (!matched) throw ConfigError("unknown config key: " + key);
    }
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    return parse_config(in);
}

inline std::string config_to_string(const PipelineConfig& cfg) {
    std::string out;
    detail::for_each_config_key(const_cast<PipelineConfig&>(cfg),
                                [&](const char* name, auto& field) {
                                    out += name;
                                    out += '=';
                                    out += detail::config_value_string(field);
                                    out += '\n';
                                });
    return out;
}

inline void save_config(const PipelineConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << config_to_string(cfg);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace anyref
