#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "anyref/error.hpp"

namespace anyref {

/// Dense w x h x c grid of real values, row-major cells with interleaved
/// channels: value (x, y, ch) sits at data[(y*w + x)*c + ch].
struct FeatureMap {
    int w = 0;
    int h = 0;
    int c = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int w_, int h_, int c_) : w(w_), h(h_), c(c_) {
        if (w < 0 || h < 0 || c < 1) throw ShapeError("invalid feature map dims");
        data.assign(static_cast<std::size_t>(w) * h * c, 0.0);
    }

    std::size_t cells() const { return static_cast<std::size_t>(w) * h; }

    double& at(int x, int y, int ch) {
        return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    double at(int x, int y, int ch) const {
        return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }

    bool finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline bool operator==(const FeatureMap& a, const FeatureMap& b) {
    return a.w == b.w && a.h == b.h && a.c == b.c && a.data == b.data;
}

}  // namespace anyref
