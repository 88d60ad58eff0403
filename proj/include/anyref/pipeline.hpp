#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "anyref/anyres.hpp"
#include "anyref/config.hpp"
#include "anyref/corpus.hpp"
#include "anyref/encoders.hpp"
#include "anyref/error.hpp"
#include "anyref/fusion.hpp"
#include "anyref/rng.hpp"
#include "anyref/sampler.hpp"

namespace anyref {

namespace detail {

inline constexpr char kBase64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string base64_encode(const std::string& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                           static_cast<unsigned char>(bytes[i + 2]);
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += kBase64Alphabet[(v >> 6) & 63];
        out += kBase64Alphabet[v & 63];
        i += 3;
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                           (static_cast<unsigned char>(bytes[i + 1]) << 8);
        out += kBase64Alphabet[(v >> 18) & 63];
        out += kBase64Alphabet[(v >> 12) & 63];
        out += kBase64Alphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::string base64_decode(const std::string& text) {
    int lut[256];
    for (int& v : lut) v = -1;
    for (int i = 0; i < 64; ++i)
        lut[static_cast<unsigned char>(kBase64Alphabet[i])] = i;
    std::string out;
    unsigned acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=') break;
        const int v = lut[static_cast<unsigned char>(c)];
        if (v < 0) throw ParseError(0, "invalid base64 character");
        acc = (acc << 6) | static_cast<unsigned>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += static_cast<char>((acc >> bits) & 0xff);
        }
    }
    return out;
}

inline std::string f64le_bytes(const std::vector<double>& values) {
    std::ostringstream buf(std::ios::binary);
    for (double v : values) write_f64le(buf, v);
    return buf.str();
}

}  // namespace detail

/// Portable dump of a feature map: dims in clear text, payload as base64 of
/// little-endian f64 words so a reload is bit-exact on any host.
inline nlohmann::ordered_json featuremap_to_json(const FeatureMap& fm) {
    nlohmann::ordered_json j;
    j["w"] = fm.w;
    j["h"] = fm.h;
    j["c"] = fm.c;
    j["data"] = detail::base64_encode(detail::f64le_bytes(fm.data));
    return j;
}

inline FeatureMap featuremap_from_json(const nlohmann::json& j) {
    FeatureMap fm;
    try {
        fm.w = j.at("w").get<int>();
        fm.h = j.at("h").get<int>();
        fm.c = j.at("c").get<int>();
        const std::string bytes = detail::base64_decode(j.at("data").get<std::string>());
        if (fm.w < 1 || fm.h < 1 || fm.c < 1)
            throw ParseError(0, "feature map dims must be positive");
        const std::size_t expect =
            static_cast<std::size_t>(fm.w) * fm.h * fm.c * 8;
        if (bytes.size() != expect)
            throw ParseError(0, "feature map payload size mismatch");
        std::istringstream in(bytes, std::ios::binary);
        fm.data.resize(expect / 8);
        for (double& v : fm.data) v = detail::read_f64le(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(0, std::string("bad feature map record: ") + e.what());
    }
    return fm;
}

/// Weights shared by every image in a run, derived once from the global seed.
struct PipelineModel {
    ProjectorWeights projector_g;
    ProjectorWeights projector_l;
};

inline PipelineModel build_model(const PipelineConfig& cfg) {
    PipelineModel m;
    m.projector_g = init_projector(derive_seed(cfg.seed, "projector/global", 0),
                                   cfg.c_raw, cfg.c_hidden, cfg.c_out);
    m.projector_l = init_projector(derive_seed(cfg.seed, "projector/local", 0),
                                   cfg.c_raw, cfg.c_hidden, cfg.c_out);
    return m;
}

inline nlohmann::ordered_json hybrid_to_json(const HybridRegion& region) {
    nlohmann::ordered_json j;
    if (region.name) j["name"] = *region.name;
    nlohmann::ordered_json coords = nlohmann::ordered_json::array();
    if (std::holds_alternative<NormPoint>(region.coords)) {
        const auto& p = std::get<NormPoint>(region.coords);
        coords = {p.x, p.y};
    } else {
        const auto& b = std::get<NormBox>(region.coords);
        coords = {b.x_min, b.y_min, b.x_max, b.y_max};
    }
    j["coords"] = std::move(coords);
    j["feature"] = region.feature;
    return j;
}

/// Everything one image contributes downstream: the LLM-facing token
/// sequence plus the high-resolution map the region sampler pools from.
struct FusedImage {
    GridConfig grid;
    FeatureMap fused;
    TokenSequence tokens;
};

inline FusedImage fuse_image(const Raster& raster, const PipelineConfig& cfg,
                             const PipelineModel& model) {
    const GridCatalog catalog = default_catalog(cfg.max_cells);
    const GridConfig grid = select_grid(raster.dims, catalog, cfg.cell_size);
    const TileResult tiles = tile(raster, grid, cfg.cell_size);

    const EncoderConfig enc = cfg.encoder();
    const FeatureMap global_fm =
        project(encode_stats(tiles.global, StatProfile::GLOBAL, enc), model.projector_g);

    std::vector<FeatureMap> patch_fms;
    patch_fms.reserve(tiles.patches.size());
    for (const Raster& patch : tiles.patches)
        patch_fms.push_back(
            project(encode_stats(patch, StatProfile::LOCAL, enc), model.projector_l));
    const FeatureMap merged = merge_local(patch_fms, grid);

    FusedImage out;
    out.grid = grid;
    out.fused = fuse(merged, upsample_global(global_fm, merged.w, merged.h));
    out.tokens = flatten_tokens(global_fm, merged);
    return out;
}

/// One image end to end: tile, encode both granularities, project, fuse, then
/// pool a hybrid record for every annotated object. Pure function of
/// (annotation, pixels, config, model), which is what makes the thread count
/// unobservable in the output.
inline nlohmann::ordered_json process_image(const AnnotatedImage& img,
                                            const Raster& raster,
                                            const PipelineConfig& cfg,
                                            const PipelineModel& model) {
    if (!(raster.dims == img.dims))
        throw ParseError(0, "image pixels are " +
                                std::to_string(raster.dims.width) + "x" +
                                std::to_string(raster.dims.height) +
                                " but annotation says " +
                                std::to_string(img.dims.width) + "x" +
                                std::to_string(img.dims.height));

    const FusedImage view = fuse_image(raster, cfg, model);
    const GridConfig grid = view.grid;
    const FeatureMap& fused = view.fused;
    const TokenSequence& tokens = view.tokens;
    const long budget_tokens = token_count(grid, cfg.tokens_per_image);

    nlohmann::ordered_json rec;
    rec["image_id"] = img.image_id;
    rec["grid"] = {grid.rows, grid.cols};
    rec["token_count"] = budget_tokens;
    rec["within_budget"] = budget_tokens <= cfg.token_budget;
    rec["flattened_tokens"] = tokens.size();
    {
        const std::string bytes = detail::f64le_bytes(tokens.values);
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(
                          fnv1a64(bytes.data(), bytes.size())));
        rec["token_digest"] = hex;
    }

    nlohmann::ordered_json regions = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < img.objects.size(); ++i) {
        const AnnotatedObject& obj = img.objects[i];
        const RegionShape shape = obj.region();
        const SamplerConfig scfg =
            cfg.sampler(derive_seed(cfg.seed, img.image_id + "#region", i));
        try {
            const std::vector<double> feature =
                extract_region_feature(fused, shape, img.dims, scfg);
            auto [region, text] = build_hybrid(obj.category, shape, img.dims, feature);
            (void)text;  // rendered referring text is the refer subcommand's output
            regions.push_back(hybrid_to_json(region));
        } catch (const Error& e) {
            nlohmann::ordered_json bad;
            bad["name"] = obj.category;
            bad["error"] = e.what();
            regions.push_back(std::move(bad));
        }
    }
    rec["regions"] = std::move(regions);
    return rec;
}

using ImageLoader = std::function<Raster(const AnnotatedImage&)>;

/// Loads each image's pixels from image_path resolved against root.
inline ImageLoader file_image_loader(std::string root) {
    return [root = std::move(root)](const AnnotatedImage& img) {
        if (!img.image_path) throw IoError("no image_path for " + img.image_id);
        std::string path = *img.image_path;
        if (!root.empty() && !path.empty() && path.front() != '/')
            path = root + "/" + path;
        return load_ppm(path);
    };
}

struct PipelineResult {
    std::vector<std::string> lines;  // one serialized record per input image
    int error_count = 0;
};

/// Bounded worker pool over images; output order is input order regardless of
/// scheduling. A failed image yields an {"image_id", "error"} record and the
/// run keeps going.
inline PipelineResult run_pipeline(const Corpus& corpus,
                                   const PipelineConfig& cfg,
                                   const ImageLoader& loader, int threads = 1) {
    cfg.validate();
    const PipelineModel model = build_model(cfg);

    PipelineResult result;
    result.lines.resize(corpus.size());
    std::atomic<int> errors{0};
    std::atomic<std::size_t> cursor{0};

    auto work = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= corpus.size()) return;
            nlohmann::ordered_json rec;
            try {
                const Raster raster = loader(corpus[i]);
                rec = process_image(corpus[i], raster, cfg, model);
            } catch (const std::exception& e) {
                rec = nlohmann::ordered_json();
                rec["image_id"] = corpus[i].image_id;
                rec["error"] = e.what();
                errors.fetch_add(1);
            }
            result.lines[i] = rec.dump();
        }
    };

    const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(corpus.size())));
    if (n_workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(work);
        for (std::thread& t : pool) t.join();
    }
    result.error_count = errors.load();
    return result;
}

}  // namespace anyref
