#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "anyref/config.hpp"
#include "anyref/corpus.hpp"
#include "anyref/evalkit.hpp"
#include "anyref/pipeline.hpp"
#include "anyref/promptgen.hpp"
#include "anyref/schedule.hpp"
#include "anyref/synthgen.hpp"

namespace {

using namespace anyref;

// Shared output policy: payload lines go to --out when given, stdout
// otherwise. Eval reports additionally always echo to stdout.
void write_lines(const std::vector<std::string>& lines, const std::string& out_path) {
    if (out_path.empty()) {
        for (const auto& l : lines) std::cout << l << "\n";
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + out_path);
    for (const auto& l : lines) out << l << "\n";
    if (!out) throw IoError("write failed: " + out_path);
}

std::string parent_dir(const std::string& path) {
    const auto p = std::filesystem::path(path).parent_path();
    return p.empty() ? std::string(".") : p.string();
}

struct PredRecord {
    std::string image_id;
    std::string item_id;
    std::optional<std::string> text;
    std::optional<NormBox> box;
    std::optional<std::string> category;
    std::size_t line = 0;
};

NormBox parse_norm_box(const nlohmann::json& arr, std::size_t line) {
    if (!arr.is_array() || arr.size() != 4)
        throw ParseError(line, "box must be [x_min, y_min, x_max, y_max]");
    int v[4];
    for (int i = 0; i < 4; ++i) {
        if (!arr[i].is_number_integer())
            throw ParseError(line, "box coordinates must be integers");
        v[i] = arr[i].get<int>();
        if (v[i] < 0 || v[i] > 999)
            throw ParseError(line, "box coordinate out of [0, 999]");
    }
    if (v[0] > v[2] || v[1] > v[3]) throw ParseError(line, "box is inverted");
    return NormBox{v[0], v[1], v[2], v[3]};
}

std::vector<PredRecord> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open predictions: " + path);
    std::vector<PredRecord> preds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, e.what());
        }
        if (!j.is_object()) throw ParseError(lineno, "record must be an object");
        PredRecord rec;
        rec.line = lineno;
        for (const auto& [key, value] : j.items()) {
            if (key == "image_id" && value.is_string())
                rec.image_id = value.get<std::string>();
            else if (key == "item_id" && value.is_string())
                rec.item_id = value.get<std::string>();
            else if (key == "text" && value.is_string())
                rec.text = value.get<std::string>();
            else if (key == "category" && value.is_string())
                rec.category = value.get<std::string>();
            else if (key == "box")
                rec.box = parse_norm_box(value, lineno);
            else
                throw ParseError(lineno, "unexpected field or type: " + key);
        }
        if (rec.image_id.empty()) throw ParseError(lineno, "missing image_id");
        if (rec.item_id.empty()) throw ParseError(lineno, "missing item_id");
        preds.push_back(std::move(rec));
    }
    return preds;
}

// Predictions keyed by (image_id, item_id); duplicates are a schema error.
std::map<std::pair<std::string, std::string>, const PredRecord*> index_predictions(
    const std::vector<PredRecord>& preds) {
    std::map<std::pair<std::string, std::string>, const PredRecord*> by_key;
    for (const auto& p : preds) {
        const auto key = std::make_pair(p.image_id, p.item_id);
        if (!by_key.emplace(key, &p).second)
            throw ParseError(p.line, "duplicate prediction for " + p.image_id +
                                         " item " + p.item_id);
    }
    return by_key;
}

NormBox gt_norm_box(const AnnotatedObject& obj, const Dims& dims) {
    return std::get<NormBox>(normalize_shape(RegionShape{obj.box}, dims));
}

EvalReport run_eval_rec(const Corpus& corpus, const std::vector<PredRecord>& preds) {
    const auto by_key = index_predictions(preds);
    std::vector<NormBox> pred_boxes, gt_boxes;
    std::vector<Dims> dims;
    std::size_t used = 0;
    for (const auto& img : corpus) {
        for (std::size_t i = 0; i < img.objects.size(); ++i) {
            const auto it = by_key.find({img.image_id, std::to_string(i)});
            if (it == by_key.end())
                throw PairingError("no prediction for " + img.image_id +
                                   " item " + std::to_string(i));
            if (!it->second->box)
                throw ParseError(it->second->line, "prediction has no box");
            pred_boxes.push_back(*it->second->box);
            gt_boxes.push_back(gt_norm_box(img.objects[i], img.dims));
            dims.push_back(img.dims);
            ++used;
        }
    }
    if (used != by_key.size())
        throw PairingError("predictions reference unknown items");
    return eval_rec(pred_boxes, gt_boxes, dims);
}

EvalReport run_eval_roc(const Corpus& corpus, const std::vector<PredRecord>& preds) {
    const auto by_key = index_predictions(preds);
    std::vector<std::string> pred_texts;
    std::vector<std::pair<std::string, RegionKind>> gts;
    std::size_t used = 0;
    for (const auto& img : corpus) {
        for (std::size_t i = 0; i < img.objects.size(); ++i) {
            const auto it = by_key.find({img.image_id, std::to_string(i)});
            if (it == by_key.end())
                throw PairingError("no prediction for " + img.image_id +
                                   " item " + std::to_string(i));
            const PredRecord& p = *it->second;
            if (p.category)
                pred_texts.push_back(*p.category);
            else if (p.text)
                pred_texts.push_back(*p.text);
            else
                throw ParseError(p.line, "prediction has neither category nor text");
            const auto& obj = img.objects[i];
            gts.emplace_back(obj.category, obj.polygon ? RegionKind::FREE_FORM
                                                       : RegionKind::BOX);
            ++used;
        }
    }
    if (used != by_key.size())
        throw PairingError("predictions reference unknown items");
    return eval_roc(pred_texts, gts);
}

EvalReport run_eval_ground(const Corpus& corpus, const std::vector<PredRecord>& preds) {
    std::map<std::string, std::vector<const PredRecord*>> by_image;
    for (const auto& p : preds) by_image[p.image_id].push_back(&p);

    std::optional<EvalReport> total;
    for (const auto& img : corpus) {
        if (img.objects.empty()) continue;
        std::map<std::string, std::vector<NormBox>> gts;
        for (const auto& obj : img.objects)
            gts[obj.category].push_back(gt_norm_box(obj, img.dims));

        std::map<std::string, NormBox> phrase_preds;
        const auto it = by_image.find(img.image_id);
        if (it != by_image.end()) {
            for (const PredRecord* p : it->second) {
                if (!p->category) throw ParseError(p->line, "prediction has no category");
                if (!p->box) throw ParseError(p->line, "prediction has no box");
                if (!phrase_preds.emplace(*p->category, *p->box).second)
                    throw ParseError(p->line, "duplicate phrase prediction: " +
                                                  *p->category);
            }
        }
        const EvalReport r = eval_phrase_grounding(phrase_preds, gts, img.dims);
        total = total ? combine_reports(*total, r) : r;
    }
    if (!total) throw PairingError("ground-truth corpus has no annotated objects");
    return *total;
}

void emit_report(const EvalReport& report, const std::string& out_path) {
    const std::string line = report_to_json(report).dump();
    std::cout << line << "\n";
    if (!out_path.empty()) write_lines({line}, out_path);
}

double parse_double_token(const std::string& text, std::size_t& pos,
                          const std::string& flag) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str() + pos, &end);
    if (end == text.c_str() + pos)
        throw ConfigError("cannot parse " + flag + ": " + text);
    pos = static_cast<std::size_t>(end - text.c_str());
    return v;
}

std::vector<double> parse_coord_list(const std::string& text, char sep,
                                     const std::string& flag) {
    std::vector<double> values;
    std::size_t pos = 0;
    for (;;) {
        values.push_back(parse_double_token(text, pos, flag));
        if (pos == text.size()) return values;
        if (text[pos] != sep)
            throw ConfigError("cannot parse " + flag + ": " + text);
        ++pos;
    }
}

RegionShape parse_region_flags(const std::string& box, const std::string& point,
                               const std::string& polygon) {
    const int given = !box.empty() + !point.empty() + !polygon.empty();
    if (given != 1)
        throw ConfigError("give exactly one of --box, --point, --polygon");
    if (!box.empty()) {
        const auto v = parse_coord_list(box, ',', "--box");
        if (v.size() != 4) throw ConfigError("--box needs x_min,y_min,x_max,y_max");
        return PixelBox{v[0], v[1], v[2], v[3]};
    }
    if (!point.empty()) {
        const auto v = parse_coord_list(point, ',', "--point");
        if (v.size() != 2) throw ConfigError("--point needs x,y");
        return PixelPoint{v[0], v[1]};
    }
    Polygon poly;
    std::size_t start = 0;
    while (start <= polygon.size()) {
        const auto stop = polygon.find(';', start);
        const std::string pair_text =
            polygon.substr(start, stop == std::string::npos ? stop : stop - start);
        const auto v = parse_coord_list(pair_text, ',', "--polygon");
        if (v.size() != 2) throw ConfigError("--polygon vertices are x,y pairs");
        poly.push_back(PixelPoint{v[0], v[1]});
        if (stop == std::string::npos) break;
        start = stop + 1;
    }
    return poly;
}

void warn_if_over_budget(const PipelineConfig& cfg) {
    for (const GridConfig& g : default_catalog(cfg.max_cells)) {
        const long need = token_count(g, cfg.tokens_per_image);
        if (need > cfg.token_budget)
            std::fprintf(stderr,
                         "warning: grid %dx%d needs %ld visual tokens, over the "
                         "budget of %d\n",
                         g.rows, g.cols, need, cfg.token_budget);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"any-resolution visual referring toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_path;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    int threads = 1;
    app.add_option("--config", config_path, "flat key=value config file");
    app.add_option("--seed", seed_flag, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--threads", threads, "worker threads for preprocess")
        ->check(CLI::Range(1, 256));
    app.add_option("--out", out_path, "output file (default stdout)");

    auto* cmd_pre = app.add_subcommand("preprocess",
                                       "run the visual front end over a corpus");
    std::string corpus_path;
    cmd_pre->add_option("corpus", corpus_path, "corpus JSONL")->required();

    auto* cmd_enc = app.add_subcommand("encode", "dump a feature map for one image");
    std::string image_path, profile = "global";
    bool raw = false, fit_cell = false;
    cmd_enc->add_option("image", image_path, "binary PPM (P6)")->required();
    cmd_enc->add_option("--profile", profile, "global or local")
        ->check(CLI::IsMember({"global", "local"}));
    cmd_enc->add_flag("--raw", raw, "skip the projector");
    cmd_enc->add_flag("--fit-cell", fit_cell, "resize to one encoder cell first");

    auto* cmd_refer = app.add_subcommand("refer", "hybrid record for one region");
    std::string refer_image, box_text, point_text, polygon_text, region_name;
    cmd_refer->add_option("--image", refer_image, "binary PPM (P6)")->required();
    cmd_refer->add_option("--box", box_text, "x_min,y_min,x_max,y_max in pixels");
    cmd_refer->add_option("--point", point_text, "x,y in pixels");
    cmd_refer->add_option("--polygon", polygon_text, "x,y;x,y;... in pixels");
    cmd_refer->add_option("--name", region_name, "optional region name");

    auto* cmd_dense = app.add_subcommand("gen-dense", "templated QA from a corpus");
    std::string dense_corpus, dense_kind = "both";
    cmd_dense->add_option("corpus", dense_corpus, "corpus JSONL")->required();
    cmd_dense->add_option("--kind", dense_kind, "refer, detect, or both")
        ->check(CLI::IsMember({"refer", "detect", "both"}));

    auto* cmd_gen = app.add_subcommand("gen-corpus", "deterministic synthetic corpus");
    int gen_n = 100;
    SynthConfig synth_cfg;
    std::string gen_dir;
    cmd_gen->add_option("--n", gen_n, "number of images")->check(CLI::PositiveNumber);
    cmd_gen->add_option("--dir", gen_dir, "output directory")->required();
    cmd_gen->add_option("--width", synth_cfg.width, "image width");
    cmd_gen->add_option("--height", synth_cfg.height, "image height");
    cmd_gen->add_option("--min-objects", synth_cfg.min_objects, "objects per image, lower bound");
    cmd_gen->add_option("--max-objects", synth_cfg.max_objects, "objects per image, upper bound");

    std::string pred_path, gt_path;
    auto add_eval = [&](const char* name, const char* help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--pred", pred_path, "prediction JSONL")->required();
        cmd->add_option("--gt", gt_path, "ground-truth corpus JSONL")->required();
        return cmd;
    };
    auto* cmd_rec = add_eval("eval-rec", "box accuracy at IoU 0.5");
    auto* cmd_roc = add_eval("eval-roc", "referred-region classification accuracy");
    auto* cmd_ground = add_eval("eval-ground", "phrase grounding accuracy");

    auto* cmd_sched = app.add_subcommand("schedule", "print the training stage plan");

    CLI11_PARSE(app, argc, argv);

    try {
        PipelineConfig cfg =
            config_path.empty() ? PipelineConfig{} : load_config(config_path);
        if (seed_given) cfg.seed = seed_flag;
        cfg.validate();

        if (cmd_pre->parsed()) {
            warn_if_over_budget(cfg);
            const Corpus corpus = load_corpus(corpus_path);
            const auto result = run_pipeline(
                corpus, cfg, file_image_loader(parent_dir(corpus_path)), threads);
            write_lines(result.lines, out_path);
            if (result.error_count > 0)
                std::fprintf(stderr, "preprocess: %d image(s) failed\n",
                             result.error_count);
        } else if (cmd_enc->parsed()) {
            Raster img = load_ppm(image_path);
            if (fit_cell) img = resize_bilinear(img, cfg.cell_size, cfg.cell_size);
            const StatProfile p =
                profile == "global" ? StatProfile::GLOBAL : StatProfile::LOCAL;
            FeatureMap fm = encode_stats(img, p, cfg.encoder());
            if (!raw) {
                const PipelineModel model = build_model(cfg);
                fm = project(fm, p == StatProfile::GLOBAL ? model.projector_g
                                                          : model.projector_l);
            }
            write_lines({featuremap_to_json(fm).dump()}, out_path);
        } else if (cmd_refer->parsed()) {
            const Raster img = load_ppm(refer_image);
            const RegionShape shape =
                parse_region_flags(box_text, point_text, polygon_text);
            validate_region(shape, img.dims);
            const PipelineModel model = build_model(cfg);
            const FusedImage view = fuse_image(img, cfg, model);
            const auto feature = extract_region_feature(
                view.fused, shape, img.dims,
                cfg.sampler(derive_seed(cfg.seed, "refer", 0)));
            const std::optional<std::string> name =
                region_name.empty() ? std::nullopt
                                    : std::optional<std::string>(region_name);
            const auto [region, text] = build_hybrid(name, shape, img.dims, feature);
            nlohmann::ordered_json j;
            j["text"] = text;
            j["region"] = hybrid_to_json(region);
            write_lines({j.dump()}, out_path);
        } else if (cmd_dense->parsed()) {
            const Corpus corpus = load_corpus(dense_corpus);
            std::vector<std::string> lines;
            for (const auto& img : corpus) {
                if (img.objects.empty()) {
                    std::fprintf(stderr, "gen-dense: skipping %s (no objects)\n",
                                 img.image_id.c_str());
                    continue;
                }
                if (dense_kind != "detect")
                    lines.push_back(
                        qa_to_json(img.image_id, gen_dense_referring(img)).dump());
                if (dense_kind != "refer")
                    lines.push_back(
                        qa_to_json(img.image_id, gen_dense_detection(img)).dump());
            }
            write_lines(lines, out_path);
        } else if (cmd_gen->parsed()) {
            gen_synthetic_corpus(gen_n, cfg.seed, gen_dir, synth_cfg);
            std::cout << gen_dir << "/corpus.jsonl\n";
        } else if (cmd_rec->parsed()) {
            emit_report(run_eval_rec(load_corpus(gt_path), load_predictions(pred_path)),
                        out_path);
        } else if (cmd_roc->parsed()) {
            emit_report(run_eval_roc(load_corpus(gt_path), load_predictions(pred_path)),
                        out_path);
        } else if (cmd_ground->parsed()) {
            emit_report(
                run_eval_ground(load_corpus(gt_path), load_predictions(pred_path)),
                out_path);
        } else if (cmd_sched->parsed()) {
            write_lines({schedule_to_json().dump()}, out_path);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "anyref: error: %s\n", e.what());
        return 1;
    }
    return 0;
}
