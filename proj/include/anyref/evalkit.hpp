#pragma once

#include <cctype>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "anyref/error.hpp"
#include "anyref/geometry.hpp"

namespace anyref {

enum class RegionKind { POINT, BOX, FREE_FORM };

inline const char* region_kind_name(RegionKind kind) {
    switch (kind) {
        case RegionKind::POINT: return "point";
        case RegionKind::BOX: return "box";
        case RegionKind::FREE_FORM: return "free-form";
    }
    return "unknown";
}

struct GroundedMention {
    std::string span;      // word run immediately before the bracket, may be empty
    NormShape shape;
    std::size_t char_offset = 0;  // byte offset of '[' in the source text
};

struct ParseResult {
    std::vector<GroundedMention> mentions;
    int malformed = 0;  // bracketed segments that failed to parse
};

struct EvalReport {
    std::string metric;
    int numerator = 0;
    int denominator = 0;
    // per-type tallies as {numerator, denominator}, keyed by kind name
    std::map<std::string, std::pair<int, int>> breakdown;

    double accuracy() const {
        return denominator > 0 ? static_cast<double>(numerator) / denominator : 0.0;
    }
};

namespace detail {

inline bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// strict decimal tuple: 2 or 4 comma-separated integers in [0, 999]
inline bool parse_coord_tuple(const std::string& body, std::vector<int>& out) {
    out.clear();
    std::size_t i = 0;
    const auto skip_ws = [&] {
        while (i < body.size() &&
               std::isspace(static_cast<unsigned char>(body[i])))
            ++i;
    };
    while (true) {
        skip_ws();
        if (i >= body.size() ||
            !std::isdigit(static_cast<unsigned char>(body[i])))
            return false;
        int value = 0;
        while (i < body.size() &&
               std::isdigit(static_cast<unsigned char>(body[i]))) {
            value = value * 10 + (body[i] - '0');
            if (value > 9999) return false;
            ++i;
        }
        if (value > 999) return false;
        out.push_back(value);
        skip_ws();
        if (i == body.size()) break;
        if (body[i] != ',') return false;
        ++i;
    }
    return out.size() == 2 || out.size() == 4;
}

inline std::string span_before(const std::string& text, std::size_t bracket) {
    std::size_t end = bracket;
    while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1])))
        --end;
    std::size_t begin = end;
    while (begin > 0 && is_word_char(text[begin - 1])) --begin;
    return text.substr(begin, end - begin);
}

}  // namespace detail

/// Lenient scan for grounded mentions: "[a, b]" is a point, "[a, b, c, d]" a
/// box, integers 0..999 only. Brackets that fail to parse (wrong arity,
/// range, inverted box, junk) are counted as malformed and skipped.
inline ParseResult parse_grounded_text(const std::string& text) {
    ParseResult result;
    std::vector<int> tuple;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find('[', pos);
        if (open == std::string::npos) break;
        const auto close = text.find(']', open + 1);
        if (close == std::string::npos) {
            ++result.malformed;
            break;
        }
        const std::string body = text.substr(open + 1, close - open - 1);
        if (body.find('[') != std::string::npos) {
            // re-scan from the inner bracket
            ++result.malformed;
            pos = open + 1;
            continue;
        }
        if (detail::parse_coord_tuple(body, tuple)) {
            GroundedMention mention;
            mention.char_offset = open;
            mention.span = detail::span_before(text, open);
            if (tuple.size() == 2) {
                mention.shape = NormPoint{tuple[0], tuple[1]};
                result.mentions.push_back(std::move(mention));
            } else if (tuple[0] <= tuple[2] && tuple[1] <= tuple[3]) {
                mention.shape = NormBox{tuple[0], tuple[1], tuple[2], tuple[3]};
                result.mentions.push_back(std::move(mention));
            } else {
                ++result.malformed;  // inverted box
            }
        } else {
            ++result.malformed;
        }
        pos = close + 1;
    }
    return result;
}

/// Referring-expression comprehension: a prediction scores iff its
/// denormalized box overlaps the ground truth at IoU >= 0.5.
inline EvalReport eval_rec(const std::vector<NormBox>& preds,
                           const std::vector<NormBox>& gts,
                           const std::vector<Dims>& dims) {
    if (preds.size() != gts.size() || preds.size() != dims.size())
        throw PairingError("eval_rec inputs must pair one-to-one");
    if (preds.empty()) throw PairingError("eval_rec needs at least one pair");
    EvalReport report;
    report.metric = "rec_acc@0.5";
    report.denominator = static_cast<int>(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto p = denormalize_shape(NormShape{preds[i]}, dims[i]);
        const auto g = denormalize_shape(NormShape{gts[i]}, dims[i]);
        try {
            if (iou(std::get<PixelBox>(p), std::get<PixelBox>(g)) >= 0.5)
                ++report.numerator;
        } catch (const UndefinedIouError&) {
            // degenerate pair counts as a miss, never a crash
        }
    }
    return report;
}

/// Referring object classification: normalized exact string match
/// (casefolded, punctuation stripped, whitespace collapsed), with per
/// region-type tallies.
inline std::string normalize_answer(const std::string& text) {
    std::string out;
    bool pending_space = false;
    for (char c : text) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isspace(uc)) {
            pending_space = !out.empty();
            continue;
        }
        if (std::ispunct(uc)) continue;
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(std::tolower(uc));
    }
    return out;
}

inline EvalReport eval_roc(
    const std::vector<std::string>& preds,
    const std::vector<std::pair<std::string, RegionKind>>& gts) {
    if (preds.size() != gts.size())
        throw PairingError("eval_roc inputs must pair one-to-one");
    if (preds.empty()) throw PairingError("eval_roc needs at least one pair");
    EvalReport report;
    report.metric = "roc_acc";
    report.denominator = static_cast<int>(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto& [num, den] = report.breakdown[region_kind_name(gts[i].second)];
        ++den;
        if (normalize_answer(preds[i]) == normalize_answer(gts[i].first)) {
            ++report.numerator;
            ++num;
        }
    }
    return report;
}

/// Phrase grounding, ANY-box protocol: a phrase scores iff its predicted box
/// reaches IoU >= 0.5 with at least one ground-truth box. Ground truth
/// defines the denominator; unpredicted phrases are misses.
inline EvalReport eval_phrase_grounding(
    const std::map<std::string, NormBox>& preds,
    const std::map<std::string, std::vector<NormBox>>& gts, const Dims& dims) {
    if (gts.empty())
        throw PairingError("phrase grounding needs at least one phrase");
    EvalReport report;
    report.metric = "phrase_grounding_acc@0.5";
    report.denominator = static_cast<int>(gts.size());
    for (const auto& [phrase, boxes] : gts) {
        if (boxes.empty())
            throw PairingError("phrase has no ground-truth box: " + phrase);
        const auto it = preds.find(phrase);
        if (it == preds.end()) continue;
        const auto p = denormalize_shape(NormShape{it->second}, dims);
        for (const auto& gt : boxes) {
            const auto g = denormalize_shape(NormShape{gt}, dims);
            bool hit = false;
            try {
                hit = iou(std::get<PixelBox>(p), std::get<PixelBox>(g)) >= 0.5;
            } catch (const UndefinedIouError&) {
            }
            if (hit) {
                ++report.numerator;
                break;
            }
        }
    }
    return report;
}

/// Pool two partial reports of the same metric (summed counts).
inline EvalReport combine_reports(const EvalReport& a, const EvalReport& b) {
    if (a.metric != b.metric)
        throw PairingError("cannot combine different metrics");
    EvalReport out = a;
    out.numerator += b.numerator;
    out.denominator += b.denominator;
    for (const auto& [key, tally] : b.breakdown) {
        auto& slot = out.breakdown[key];
        slot.first += tally.first;
        slot.second += tally.second;
    }
    return out;
}

inline nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["metric"] = report.metric;
    j["numerator"] = report.numerator;
    j["denominator"] = report.denominator;
    j["accuracy"] = report.accuracy();
    if (!report.breakdown.empty()) {
        nlohmann::ordered_json jb;
        for (const auto& [key, tally] : report.breakdown) {
            nlohmann::ordered_json entry;
            entry["numerator"] = tally.first;
            entry["denominator"] = tally.second;
            entry["accuracy"] =
                tally.second > 0
                    ? static_cast<double>(tally.first) / tally.second
                    : 0.0;
            jb[key] = std::move(entry);
        }
        j["breakdown"] = std::move(jb);
    }
    return j;
}

}  // namespace anyref
