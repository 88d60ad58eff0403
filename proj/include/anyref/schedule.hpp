#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include <json.hpp>

#include "anyref/error.hpp"

namespace anyref {

enum class ParamGroup {
    GLOBAL_ENCODER,
    LOCAL_ENCODER,
    PROJECTOR_G,
    PROJECTOR_L,
    SAMPLER,
    LLM,
};

inline constexpr ParamGroup kAllParamGroups[] = {
    ParamGroup::GLOBAL_ENCODER, ParamGroup::LOCAL_ENCODER,
    ParamGroup::PROJECTOR_G,    ParamGroup::PROJECTOR_L,
    ParamGroup::SAMPLER,        ParamGroup::LLM,
};

inline const char* param_group_name(ParamGroup g) {
    switch (g) {
        case ParamGroup::GLOBAL_ENCODER: return "global_encoder";
        case ParamGroup::LOCAL_ENCODER: return "local_encoder";
        case ParamGroup::PROJECTOR_G: return "projector_g";
        case ParamGroup::PROJECTOR_L: return "projector_l";
        case ParamGroup::SAMPLER: return "sampler";
        case ParamGroup::LLM: return "llm";
    }
    return "unknown";
}

enum class Stage { I = 1, II = 2, III = 3 };

/// Coarse-to-fine unfreezing plan. Stage I trains the global projector
/// alone (the sampler is inactive there); Stage II adds the local projector
/// (copy-initialized from the global one) and the sampler; Stage III opens
/// everything including both encoders and the language model.
inline std::vector<ParamGroup> trainable_groups(Stage stage) {
    switch (stage) {
        case Stage::I:
            return {ParamGroup::PROJECTOR_G};
        case Stage::II:
            return {ParamGroup::PROJECTOR_G, ParamGroup::PROJECTOR_L,
                    ParamGroup::SAMPLER};
        case Stage::III:
            return {kAllParamGroups, kAllParamGroups + std::size(kAllParamGroups)};
    }
    throw ConfigError("unknown training stage");
}

inline std::vector<ParamGroup> frozen_groups(Stage stage) {
    const auto trainable = trainable_groups(stage);
    std::vector<ParamGroup> frozen;
    for (ParamGroup g : kAllParamGroups)
        if (std::find(trainable.begin(), trainable.end(), g) == trainable.end())
            frozen.push_back(g);
    return frozen;
}

inline std::string stage_note(Stage stage) {
    switch (stage) {
        case Stage::I:
            return "sampler inactive; only the global-path projector updates";
        case Stage::II:
            return "local projector starts as a copy of the global projector";
        case Stage::III:
            return "all parameter groups update";
    }
    return {};
}

inline nlohmann::ordered_json schedule_to_json() {
    nlohmann::ordered_json plan = nlohmann::ordered_json::array();
    for (Stage stage : {Stage::I, Stage::II, Stage::III}) {
        nlohmann::ordered_json entry;
        entry["stage"] = static_cast<int>(stage);
        auto names = nlohmann::ordered_json::array();
        for (ParamGroup g : trainable_groups(stage))
            names.push_back(param_group_name(g));
        entry["trainable"] = std::move(names);
        auto frozen = nlohmann::ordered_json::array();
        for (ParamGroup g : frozen_groups(stage))
            frozen.push_back(param_group_name(g));
        entry["frozen"] = std::move(frozen);
        entry["note"] = stage_note(stage);
        plan.push_back(std::move(entry));
    }
    return plan;
}

}  // namespace anyref
