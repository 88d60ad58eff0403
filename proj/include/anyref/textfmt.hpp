#pragma once

#include <string>
#include <variant>

#include "anyref/geometry.hpp"

namespace anyref {

// U+27E8/U+27E9 mathematical angle brackets around the placeholder that
// stands in for a continuous region feature in referring text.
inline constexpr const char* kContinuousFeaToken =
    "\xE2\x9F\xA8"
    "continuous_fea"
    "\xE2\x9F\xA9";

inline std::string render_norm_shape(const NormShape& shape) {
    if (const auto* p = std::get_if<NormPoint>(&shape))
        return "[" + std::to_string(p->x) + ", " + std::to_string(p->y) + "]";
    const auto& b = std::get<NormBox>(shape);
    return "[" + std::to_string(b.x_min) + ", " + std::to_string(b.y_min) +
           ", " + std::to_string(b.x_max) + ", " + std::to_string(b.y_max) + "]";
}

}  // namespace anyref
