#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "anyref/error.hpp"
#include "anyref/featuremap.hpp"
#include "anyref/geometry.hpp"
#include "anyref/rng.hpp"
#include "anyref/textfmt.hpp"

namespace anyref {

struct SamplerConfig {
    int n_points = 512;
    int n_anchors = 32;
    int k_neighbors = 8;
    double point_radius_norm = 0.005;  // disk radius as a fraction of min extent
    std::uint64_t seed = 0;
};

struct HybridRegion {
    std::optional<std::string> name;
    NormShape coords;
    std::vector<double> feature;
};

namespace detail {

inline void validate_sampler_config(const SamplerConfig& cfg) {
    if (cfg.n_points < 1 || cfg.n_anchors < 1 || cfg.k_neighbors < 1)
        throw ConfigError("sampler counts must be positive");
    if (cfg.n_anchors > cfg.n_points)
        throw ConfigError("n_anchors exceeds n_points");
    if (cfg.k_neighbors > cfg.n_points)
        throw ConfigError("k_neighbors exceeds n_points");
    if (!(cfg.point_radius_norm > 0.0) || cfg.point_radius_norm > 1.0)
        throw ConfigError("point_radius_norm must be in (0, 1]");
}

// A zero-area box carries point semantics downstream.
inline RegionShape effective_shape(const RegionShape& shape) {
    if (const auto* b = std::get_if<PixelBox>(&shape))
        if (b->area() == 0.0)
            return PixelPoint{(b->x_min + b->x_max) / 2.0,
                              (b->y_min + b->y_max) / 2.0};
    return shape;
}

inline PixelPoint region_centroid(const RegionShape& shape, const Dims& dims) {
    if (const auto* p = std::get_if<PixelPoint>(&shape)) return *p;
    if (const auto* b = std::get_if<PixelBox>(&shape))
        return {(b->x_min + b->x_max) / 2.0, (b->y_min + b->y_max) / 2.0};
    const auto& poly = std::get<Polygon>(shape);
    const BinaryMask mask = rasterize_polygon(poly, dims);
    double sx = 0.0, sy = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < dims.height; ++y)
        for (int x = 0; x < dims.width; ++x)
            if (mask.at(x, y)) {
                sx += x + 0.5;
                sy += y + 0.5;
                ++count;
            }
    if (count == 0) throw DegenerateRegionError("region rasterizes to nothing");
    return {sx / static_cast<double>(count), sy / static_cast<double>(count)};
}

}  // namespace detail

/// Uniform points inside the region by rejection sampling over its bounding
/// box. Boxes use their interior, free-form shapes their rasterized mask, and
/// points a disk of radius point_radius_norm * min(W, H). Per-point draws are
/// x then y, so fixed seeds reproduce exact point lists.
inline std::vector<PixelPoint> sample_region_points(const RegionShape& shape,
                                                    const Dims& dims,
                                                    const SamplerConfig& cfg) {
    detail::validate_sampler_config(cfg);
    validate_region(shape, dims);
    const RegionShape region = detail::effective_shape(shape);

    double bx0, bx1, by0, by1;
    std::function<bool(double, double)> inside;
    std::optional<BinaryMask> mask;
    if (const auto* b = std::get_if<PixelBox>(&region)) {
        bx0 = b->x_min;
        bx1 = b->x_max;
        by0 = b->y_min;
        by1 = b->y_max;
        inside = [](double, double) { return true; };
    } else if (const auto* p = std::get_if<PixelPoint>(&region)) {
        const double r =
            cfg.point_radius_norm * std::min(dims.width, dims.height);
        bx0 = std::max(0.0, p->x - r);
        bx1 = std::min(static_cast<double>(dims.width), p->x + r);
        by0 = std::max(0.0, p->y - r);
        by1 = std::min(static_cast<double>(dims.height), p->y + r);
        const double cx = p->x, cy = p->y, r2 = r * r;
        inside = [cx, cy, r2](double x, double y) {
            const double dx = x - cx, dy = y - cy;
            return dx * dx + dy * dy <= r2;
        };
    } else {
        const auto& poly = std::get<Polygon>(region);
        mask = rasterize_polygon(poly, dims);
        if (mask->count() == 0)
            throw DegenerateRegionError("region rasterizes to nothing");
        const PixelBox bbox = polygon_bbox(poly);
        bx0 = std::max(0.0, bbox.x_min);
        bx1 = std::min(static_cast<double>(dims.width), bbox.x_max);
        by0 = std::max(0.0, bbox.y_min);
        by1 = std::min(static_cast<double>(dims.height), bbox.y_max);
        const BinaryMask* m = &*mask;
        inside = [m](double x, double y) {
            return m->at(static_cast<int>(x), static_cast<int>(y));
        };
    }
    if (!(bx1 > bx0) || !(by1 > by0))
        throw DegenerateRegionError("region bounding box has no interior");

    constexpr int kMaxAttemptsPerPoint = 10000;
    Xoshiro256 rng(cfg.seed);
    std::vector<PixelPoint> points;
    points.reserve(static_cast<std::size_t>(cfg.n_points));
    for (int i = 0; i < cfg.n_points; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttemptsPerPoint; ++attempt) {
            const double x = rng.uniform(bx0, bx1);
            const double y = rng.uniform(by0, by1);
            if (inside(x, y)) {
                points.push_back({x, y});
                placed = true;
                break;
            }
        }
        if (!placed)
            throw DegenerateRegionError("rejection sampling exhausted attempts");
    }
    return points;
}

/// Bilinear read of a feature map at a pixel position; cell (i, j) is treated
/// as centered at ((i+0.5)*W/w, (j+0.5)*H/h) and queries clamp to the border.
inline std::vector<double> interpolate_feature(const FeatureMap& h_a, double px,
                                               double py, const Dims& dims) {
    if (h_a.w < 1 || h_a.h < 1) throw ShapeError("empty feature map");
    double u = px * h_a.w / dims.width - 0.5;
    double v = py * h_a.h / dims.height - 0.5;
    u = std::clamp(u, 0.0, static_cast<double>(h_a.w - 1));
    v = std::clamp(v, 0.0, static_cast<double>(h_a.h - 1));
    const int i0 = static_cast<int>(u);
    const int j0 = static_cast<int>(v);
    const int i1 = std::min(i0 + 1, h_a.w - 1);
    const int j1 = std::min(j0 + 1, h_a.h - 1);
    const double fu = u - i0;
    const double fv = v - j0;
    std::vector<double> out(static_cast<std::size_t>(h_a.c));
    for (int ch = 0; ch < h_a.c; ++ch) {
        const double tl = h_a.at(i0, j0, ch);
        const double bl = h_a.at(i0, j1, ch);
        const double top = tl + (h_a.at(i1, j0, ch) - tl) * fu;
        const double bot = bl + (h_a.at(i1, j1, ch) - bl) * fu;
        out[static_cast<std::size_t>(ch)] = top + (bot - top) * fv;
    }
    return out;
}

/// Sample the region, read features at each point, pick n_anchors spread-out
/// anchors by farthest-point traversal (seeded only through the sampled
/// points; the walk itself is deterministic, starting nearest the region
/// centroid), max-pool each anchor's k nearest samples per channel, and
/// average the anchors.
inline std::vector<double> extract_region_feature(const FeatureMap& h_a,
                                                  const RegionShape& shape,
                                                  const Dims& dims,
                                                  const SamplerConfig& cfg) {
    const auto points = sample_region_points(shape, dims, cfg);
    const auto n = points.size();
    std::vector<std::vector<double>> feats;
    feats.reserve(n);
    for (const auto& p : points)
        feats.push_back(interpolate_feature(h_a, p.x, p.y, dims));

    const PixelPoint centroid =
        detail::region_centroid(detail::effective_shape(shape), dims);
    auto dist2 = [&points](std::size_t i, double x, double y) {
        const double dx = points[i].x - x, dy = points[i].y - y;
        return dx * dx + dy * dy;
    };

    std::size_t start = 0;
    double best = dist2(0, centroid.x, centroid.y);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = dist2(i, centroid.x, centroid.y);
        if (d < best) {
            best = d;
            start = i;
        }
    }

    // farthest-point sampling; ties resolve to the lowest index
    std::vector<std::size_t> anchors{start};
    std::vector<double> min_d(n);
    for (std::size_t i = 0; i < n; ++i)
        min_d[i] = dist2(i, points[start].x, points[start].y);
    while (anchors.size() < static_cast<std::size_t>(cfg.n_anchors)) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (min_d[i] > min_d[far]) far = i;
        anchors.push_back(far);
        for (std::size_t i = 0; i < n; ++i)
            min_d[i] = std::min(min_d[i], dist2(i, points[far].x, points[far].y));
    }

    std::vector<double> feature(static_cast<std::size_t>(h_a.c), 0.0);
    std::vector<std::pair<double, std::size_t>> order(n);
    for (std::size_t a : anchors) {
        for (std::size_t i = 0; i < n; ++i)
            order[i] = {dist2(i, points[a].x, points[a].y), i};
        std::partial_sort(order.begin(),
                          order.begin() + static_cast<std::ptrdiff_t>(cfg.k_neighbors),
                          order.end());
        for (int ch = 0; ch < h_a.c; ++ch) {
            double m = feats[order[0].second][static_cast<std::size_t>(ch)];
            for (int k = 1; k < cfg.k_neighbors; ++k)
                m = std::max(m, feats[order[static_cast<std::size_t>(k)].second]
                                     [static_cast<std::size_t>(ch)]);
            feature[static_cast<std::size_t>(ch)] += m;
        }
    }
    for (double& v : feature) v /= static_cast<double>(cfg.n_anchors);
    return feature;
}

/// Assemble the textual referring form "<name> [coords] <placeholder>" plus
/// the structured record; the feature vector itself never appears in text.
inline std::pair<HybridRegion, std::string> build_hybrid(
    const std::optional<std::string>& name, const RegionShape& shape,
    const Dims& dims, const std::vector<double>& feature) {
    for (double v : feature)
        if (!std::isfinite(v)) throw ShapeError("region feature is not finite");
    HybridRegion region;
    region.name = name;
    region.coords = normalize_shape(shape, dims);
    region.feature = feature;
    std::string text;
    if (name && !name->empty()) text = *name + " ";
    text += render_norm_shape(region.coords);
    text += " ";
    text += kContinuousFeaToken;
    return {std::move(region), std::move(text)};
}

}  // namespace anyref
