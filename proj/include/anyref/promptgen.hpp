#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "anyref/corpus.hpp"
#include "anyref/error.hpp"
#include "anyref/geometry.hpp"
#include "anyref/textfmt.hpp"

namespace anyref {

enum class QAKind { DENSE_REFER, DENSE_DETECT, GROUNDED };

struct QASample {
    std::string question;
    std::string answer;
    QAKind kind = QAKind::DENSE_REFER;
};

inline const char* qa_kind_name(QAKind kind) {
    switch (kind) {
        case QAKind::DENSE_REFER: return "dense_refer";
        case QAKind::DENSE_DETECT: return "dense_detect";
        case QAKind::GROUNDED: return "grounded";
    }
    return "unknown";
}

inline constexpr const char* kDenseReferPrefix =
    "Please classify the objects in the following locations. ";
inline constexpr const char* kDenseReferAnswerPrefix = "Here are the categories: ";
inline constexpr const char* kDenseDetectQuestion =
    "Please localize visible objects in the image in a raster scan order.";
inline constexpr const char* kDenseDetectAnswerPrefix = "The objects are: ";
inline constexpr const char* kUnifySuffix =
    "Include the coordinates for each mentioned object.";

namespace detail {

// objects reordered top-to-bottom, then left-to-right
inline std::vector<const AnnotatedObject*> scan_ordered(const AnnotatedImage& img) {
    std::vector<PixelBox> boxes;
    boxes.reserve(img.objects.size());
    for (const auto& o : img.objects) boxes.push_back(o.box);
    std::vector<const AnnotatedObject*> ordered;
    ordered.reserve(boxes.size());
    for (std::size_t idx : raster_scan_order(boxes))
        ordered.push_back(&img.objects[idx]);
    return ordered;
}

inline std::string render_box(const PixelBox& box, const Dims& dims) {
    return render_norm_shape(normalize_shape(box, dims));
}

}  // namespace detail

/// Question enumerates normalized object boxes in raster-scan order; the
/// answer lists the matching categories under the same numbering.
inline QASample gen_dense_referring(const AnnotatedImage& img) {
    if (img.objects.empty())
        throw EmptyAnnotationError("image has no annotated objects: " + img.image_id);
    QASample qa;
    qa.kind = QAKind::DENSE_REFER;
    qa.question = kDenseReferPrefix;
    qa.answer = kDenseReferAnswerPrefix;
    const auto ordered = detail::scan_ordered(img);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const std::string num = std::to_string(i + 1) + ": ";
        if (i > 0) {
            qa.question += ", ";
            qa.answer += ", ";
        }
        qa.question += num + detail::render_box(ordered[i]->box, img.dims);
        qa.answer += num + ordered[i]->category;
    }
    return qa;
}

/// Fixed localization prompt; the answer pairs each category with its
/// normalized box, in raster-scan order.
inline QASample gen_dense_detection(const AnnotatedImage& img) {
    if (img.objects.empty())
        throw EmptyAnnotationError("image has no annotated objects: " + img.image_id);
    QASample qa;
    qa.kind = QAKind::DENSE_DETECT;
    qa.question = kDenseDetectQuestion;
    qa.answer = kDenseDetectAnswerPrefix;
    const auto ordered = detail::scan_ordered(img);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        if (i > 0) qa.answer += ", ";
        qa.answer += std::to_string(i + 1) + ": " + ordered[i]->category + " " +
                     detail::render_box(ordered[i]->box, img.dims);
    }
    return qa;
}

/// Replace each "{noun}" slot with "noun [normalized box]". Slots without a
/// span stay untouched; a span whose slot is absent or ambiguous is an error.
inline std::string gen_grounded_answer(
    const std::vector<std::pair<std::string, PixelBox>>& text_spans,
    const Dims& dims, const std::string& tmpl) {
    std::string out = tmpl;
    for (const auto& [noun, box] : text_spans) {
        const std::string slot = "{" + noun + "}";
        const auto first = out.find(slot);
        if (first == std::string::npos)
            throw TemplateError("no slot for noun: " + noun);
        if (out.find(slot, first + slot.size()) != std::string::npos)
            throw TemplateError("ambiguous slot for noun: " + noun);
        out = out.substr(0, first) + noun + " " + detail::render_box(box, dims) +
              out.substr(first + slot.size());
    }
    return out;
}

/// Append the grounding instruction once; repeated calls are no-ops.
inline std::string unify_prompt(const std::string& instruction) {
    if (instruction.size() >= std::string(kUnifySuffix).size() &&
        instruction.ends_with(kUnifySuffix))
        return instruction;
    if (instruction.empty()) return kUnifySuffix;
    return instruction + " " + kUnifySuffix;
}

/// Inverse of gen_dense_referring for round-trip checks: recovers the
/// (category, normalized box) pairs shared by question and answer.
inline std::vector<std::pair<std::string, NormBox>> parse_dense_referring(
    const std::string& question, const std::string& answer) {
    const std::string qprefix = kDenseReferPrefix;
    const std::string aprefix = kDenseReferAnswerPrefix;
    if (question.rfind(qprefix, 0) != 0)
        throw TemplateError("dense-referring question prefix missing");
    if (answer.rfind(aprefix, 0) != 0)
        throw TemplateError("dense-referring answer prefix missing");

    std::vector<NormBox> boxes;
    std::size_t pos = qprefix.size();
    for (std::size_t k = 1;; ++k) {
        const std::string marker = std::to_string(k) + ": [";
        const auto at = question.find(marker, pos);
        if (at == std::string::npos) break;
        const auto open = at + marker.size() - 1;
        const auto close = question.find(']', open);
        if (close == std::string::npos)
            throw TemplateError("unterminated box in question");
        NormBox box;
        if (std::sscanf(question.c_str() + open, "[%d, %d, %d, %d]", &box.x_min,
                        &box.y_min, &box.x_max, &box.y_max) != 4)
            throw TemplateError("malformed box in question");
        boxes.push_back(box);
        pos = close;
    }

    std::vector<std::string> categories;
    pos = aprefix.size();
    for (std::size_t k = 1;; ++k) {
        const std::string marker = std::to_string(k) + ": ";
        if (answer.rfind(marker, pos) != pos) break;
        const auto start = pos + marker.size();
        const auto end = answer.find(", " + std::to_string(k + 1) + ": ", start);
        if (end == std::string::npos) {
            categories.push_back(answer.substr(start));
            break;
        }
        categories.push_back(answer.substr(start, end - start));
        pos = end + 2;
    }

    if (boxes.size() != categories.size())
        throw TemplateError("question/answer counts disagree");
    std::vector<std::pair<std::string, NormBox>> out;
    out.reserve(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i)
        out.emplace_back(categories[i], boxes[i]);
    return out;
}

/// Inverse of gen_dense_detection's answer.
inline std::vector<std::pair<std::string, NormBox>> parse_dense_detection(
    const std::string& answer) {
    const std::string prefix = kDenseDetectAnswerPrefix;
    if (answer.rfind(prefix, 0) != 0)
        throw TemplateError("dense-detection answer prefix missing");
    std::vector<std::pair<std::string, NormBox>> out;
    std::size_t pos = prefix.size();
    for (std::size_t k = 1;; ++k) {
        const std::string marker = std::to_string(k) + ": ";
        if (answer.rfind(marker, pos) != pos) break;
        const auto start = pos + marker.size();
        const auto open = answer.find(" [", start);
        if (open == std::string::npos)
            throw TemplateError("missing box in detection answer");
        const auto close = answer.find(']', open);
        if (close == std::string::npos)
            throw TemplateError("unterminated box in detection answer");
        NormBox box;
        if (std::sscanf(answer.c_str() + open + 1, "[%d, %d, %d, %d]", &box.x_min,
                        &box.y_min, &box.x_max, &box.y_max) != 4)
            throw TemplateError("malformed box in detection answer");
        out.emplace_back(answer.substr(start, open - start), box);
        pos = close + 1;
        if (pos < answer.size() && answer.compare(pos, 2, ", ") == 0) pos += 2;
    }
    return out;
}

inline nlohmann::ordered_json qa_to_json(const std::string& image_id,
                                         const QASample& qa) {
    nlohmann::ordered_json j;
    j["image_id"] = image_id;
    j["kind"] = qa_kind_name(qa.kind);
    j["question"] = qa.question;
    j["answer"] = qa.answer;
    return j;
}

}  // namespace anyref
