#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "anyref/error.hpp"
#include "anyref/geometry.hpp"

namespace anyref {

struct AnnotatedObject {
    std::string category;
    PixelBox box;
    std::optional<Polygon> polygon;

    // the shape the sampler and referring path should use
    RegionShape region() const {
        if (polygon) return *polygon;
        return box;
    }
};

struct AnnotatedImage {
    std::string image_id;
    Dims dims;
    std::vector<AnnotatedObject> objects;
    std::optional<std::string> image_path;
};

using Corpus = std::vector<AnnotatedImage>;

namespace detail {

inline void validate_annotated(const AnnotatedImage& img, std::size_t line) {
    if (img.image_id.empty()) throw ParseError(line, "empty image_id");
    if (img.dims.width < 1 || img.dims.height < 1)
        throw ParseError(line, "non-positive image dims");
    for (const auto& obj : img.objects) {
        if (obj.category.empty()) throw ParseError(line, "empty category");
        try {
            validate_region(obj.box, img.dims);
            if (obj.polygon) validate_region(*obj.polygon, img.dims);
        } catch (const Error& e) {
            throw ParseError(line, e.what());
        }
    }
}

}  // namespace detail

inline AnnotatedImage annotated_image_from_json(const nlohmann::json& j,
                                                std::size_t line) {
    AnnotatedImage img;
    try {
        img.image_id = j.at("image_id").get<std::string>();
        img.dims.width = j.at("width").get<int>();
        img.dims.height = j.at("height").get<int>();
        if (j.contains("image_path"))
            img.image_path = j.at("image_path").get<std::string>();
        for (const auto& jo : j.at("objects")) {
            AnnotatedObject obj;
            obj.category = jo.at("category").get<std::string>();
            const auto& b = jo.at("box");
            if (!b.is_array() || b.size() != 4)
                throw ParseError(line, "box must be [x1, y1, x2, y2]");
            obj.box = PixelBox{b[0].get<double>(), b[1].get<double>(),
                               b[2].get<double>(), b[3].get<double>()};
            if (jo.contains("polygon")) {
                Polygon poly;
                for (const auto& jp : jo.at("polygon")) {
                    if (!jp.is_array() || jp.size() != 2)
                        throw ParseError(line, "polygon vertex must be [x, y]");
                    poly.push_back({jp[0].get<double>(), jp[1].get<double>()});
                }
                obj.polygon = std::move(poly);
            }
            img.objects.push_back(std::move(obj));
        }
    } catch (const ParseError&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(line, e.what());
    }
    detail::validate_annotated(img, line);
    return img;
}

inline nlohmann::ordered_json annotated_image_to_json(const AnnotatedImage& img) {
    nlohmann::ordered_json j;
    j["image_id"] = img.image_id;
    j["width"] = img.dims.width;
    j["height"] = img.dims.height;
    if (img.image_path) j["image_path"] = *img.image_path;
    j["objects"] = nlohmann::ordered_json::array();
    for (const auto& obj : img.objects) {
        nlohmann::ordered_json jo;
        jo["category"] = obj.category;
        jo["box"] = {obj.box.x_min, obj.box.y_min, obj.box.x_max, obj.box.y_max};
        if (obj.polygon) {
            auto jpoly = nlohmann::ordered_json::array();
            for (const auto& p : *obj.polygon) jpoly.push_back({p.x, p.y});
            jo["polygon"] = std::move(jpoly);
        }
        j["objects"].push_back(std::move(jo));
    }
    return j;
}

/// One AnnotatedImage per line. Blank lines are skipped; any schema or
/// geometry violation reports the offending 1-based line number.
inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus: " + path);
    Corpus corpus;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, e.what());
        }
        auto img = annotated_image_from_json(j, lineno);
        if (!seen.insert(img.image_id).second)
            throw ParseError(lineno, "duplicate image_id: " + img.image_id);
        corpus.push_back(std::move(img));
    }
    return corpus;
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& img : corpus) out << annotated_image_to_json(img).dump() << "\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace anyref
