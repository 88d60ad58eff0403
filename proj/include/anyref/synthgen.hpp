#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "anyref/corpus.hpp"
#include "anyref/geometry.hpp"
#include "anyref/raster.hpp"
#include "anyref/rng.hpp"

namespace anyref {

struct SynthConfig {
    int width = 1024;
    int height = 768;
    int min_objects = 8;   // uniform count centers the mean on 10
    int max_objects = 12;
};

namespace detail {

struct NamedColor {
    const char* name;
    std::uint8_t r, g, b;
};

inline constexpr NamedColor kPalette[] = {
    {"red", 220, 40, 40},
    {"green", 40, 180, 60},
    {"blue", 50, 80, 220},
    {"yellow", 230, 210, 50},
    {"purple", 150, 60, 200},
    {"orange", 240, 140, 30},
    {"cyan", 40, 200, 210},
    {"magenta", 220, 60, 180},
};

}  // namespace detail

/// One deterministic synthetic image: a textured gradient background with
/// solid-colored rectangles (box annotation) and 16-gon ellipses (polygon +
/// bounding-box annotation). Identical (index, seed, cfg) reproduce the
/// image and its annotations byte-for-byte.
inline std::pair<AnnotatedImage, Raster> synth_image(int index,
                                                     std::uint64_t seed,
                                                     const SynthConfig& cfg = {}) {
    if (cfg.width < 64 || cfg.height < 64)
        throw ConfigError("synthetic images must be at least 64x64");
    if (cfg.min_objects < 1 || cfg.max_objects < cfg.min_objects)
        throw ConfigError("invalid synthetic object count range");

    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "synth_%04d", index);
    AnnotatedImage meta;
    meta.image_id = idbuf;
    meta.dims = {cfg.width, cfg.height};

    Xoshiro256 rng(derive_seed(seed, meta.image_id, 0));
    const int W = cfg.width, H = cfg.height;
    Raster img(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const auto noise = static_cast<int>(rng.below(25));
            const int r = 30 + x * 40 / W + noise;
            const int g = 30 + y * 40 / H + noise;
            const int b = 70 + noise;
            img.at(x, y, 0) = static_cast<std::uint8_t>(std::min(r, 255));
            img.at(x, y, 1) = static_cast<std::uint8_t>(std::min(g, 255));
            img.at(x, y, 2) = static_cast<std::uint8_t>(std::min(b, 255));
        }

    const int count =
        cfg.min_objects +
        static_cast<int>(rng.below(
            static_cast<std::uint64_t>(cfg.max_objects - cfg.min_objects + 1)));
    const int max_side = std::min({W / 4, H / 4, 220});
    for (int i = 0; i < count; ++i) {
        const auto& color =
            detail::kPalette[rng.below(std::size(detail::kPalette))];
        const int ow = 40 + static_cast<int>(rng.below(
                                static_cast<std::uint64_t>(max_side - 40 + 1)));
        const int oh = 40 + static_cast<int>(rng.below(
                                static_cast<std::uint64_t>(max_side - 40 + 1)));
        const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(W - ow)));
        const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(H - oh)));
        AnnotatedObject obj;
        if (rng.below(2) == 0) {
            obj.category = std::string(color.name) + " rectangle";
            obj.box = PixelBox{static_cast<double>(x0), static_cast<double>(y0),
                               static_cast<double>(x0 + ow),
                               static_cast<double>(y0 + oh)};
            for (int y = y0; y < y0 + oh; ++y)
                for (int x = x0; x < x0 + ow; ++x) {
                    img.at(x, y, 0) = color.r;
                    img.at(x, y, 1) = color.g;
                    img.at(x, y, 2) = color.b;
                }
        } else {
            obj.category = std::string(color.name) + " ellipse";
            const double cx = x0 + ow / 2.0, cy = y0 + oh / 2.0;
            const double rx = ow / 2.0, ry = oh / 2.0;
            Polygon poly;
            for (int k = 0; k < 16; ++k) {
                const double a = 2.0 * std::numbers::pi * k / 16.0;
                poly.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
            }
            const auto mask = rasterize_polygon(poly, meta.dims);
            for (int y = y0; y < y0 + oh; ++y)
                for (int x = x0; x < x0 + ow; ++x)
                    if (mask.at(x, y)) {
                        img.at(x, y, 0) = color.r;
                        img.at(x, y, 1) = color.g;
                        img.at(x, y, 2) = color.b;
                    }
            obj.box = polygon_bbox(poly);
            obj.polygon = std::move(poly);
        }
        meta.objects.push_back(std::move(obj));
    }
    meta.image_path = meta.image_id + std::string(".ppm");
    return {std::move(meta), std::move(img)};
}

/// Write n images plus corpus.jsonl into out_dir and return the corpus.
inline Corpus gen_synthetic_corpus(int n_images, std::uint64_t seed,
                                   const std::string& out_dir,
                                   const SynthConfig& cfg = {}) {
    if (n_images < 1) throw ConfigError("n_images must be positive");
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output dir: " + out_dir);

    Corpus corpus;
    corpus.reserve(static_cast<std::size_t>(n_images));
    for (int i = 0; i < n_images; ++i) {
        auto [meta, img] = synth_image(i, seed, cfg);
        save_ppm(img, (fs::path(out_dir) / *meta.image_path).string());
        corpus.push_back(std::move(meta));
    }
    save_corpus(corpus, (fs::path(out_dir) / "corpus.jsonl").string());
    return corpus;
}

}  // namespace anyref
