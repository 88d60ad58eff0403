#pragma once

#include <cstddef>
#include <vector>

#include "anyref/anyres.hpp"
#include "anyref/error.hpp"
#include "anyref/featuremap.hpp"

namespace anyref {

enum class TokenSource { GLOBAL, LOCAL };

/// Flattened visual token sequence: size() tokens of c channels each,
/// global-view tokens first, then merged local tokens, both row-major.
struct TokenSequence {
    int c = 0;
    std::vector<double> values;        // size() * c, token-major
    std::vector<TokenSource> sources;  // one tag per token

    std::size_t size() const { return sources.size(); }
    const double* token(std::size_t i) const { return &values[i * static_cast<std::size_t>(c)]; }
};

/// Reassemble per-patch feature maps into one map laid out like the tiling
/// grid: block (r, c) of the output is patches[r*cols + c].
inline FeatureMap merge_local(const std::vector<FeatureMap>& patches,
                              const GridConfig& grid) {
    if (grid.rows < 1 || grid.cols < 1)
        throw ShapeError("grid must have at least one cell");
    if (patches.size() != static_cast<std::size_t>(grid.cells()))
        throw ShapeError("patch count does not match grid");
    const FeatureMap& first = patches.front();
    for (const auto& p : patches)
        if (p.w != first.w || p.h != first.h || p.c != first.c)
            throw ShapeError("patch feature maps disagree in shape");

    FeatureMap out(grid.cols * first.w, grid.rows * first.h, first.c);
    for (int r = 0; r < grid.rows; ++r)
        for (int col = 0; col < grid.cols; ++col) {
            const FeatureMap& p = patches[static_cast<std::size_t>(r) * grid.cols + col];
            for (int y = 0; y < p.h; ++y)
                for (int x = 0; x < p.w; ++x)
                    for (int ch = 0; ch < p.c; ++ch)
                        out.at(col * p.w + x, r * p.h + y, ch) = p.at(x, y, ch);
        }
    return out;
}

/// Bilinear upsample with align-corners (endpoints map to endpoints).
/// Only enlargement is supported; target must be at least the source size.
inline FeatureMap upsample_global(const FeatureMap& global, int target_w,
                                  int target_h) {
    if (global.w < 1 || global.h < 1)
        throw ShapeError("cannot upsample an empty feature map");
    if (target_w < global.w || target_h < global.h)
        throw ShapeError("upsample target smaller than source");

    FeatureMap out(target_w, target_h, global.c);
    const double sx = target_w > 1
                          ? static_cast<double>(global.w - 1) / (target_w - 1)
                          : 0.0;
    const double sy = target_h > 1
                          ? static_cast<double>(global.h - 1) / (target_h - 1)
                          : 0.0;
    for (int y = 0; y < target_h; ++y) {
        const double fy = y * sy;
        const int y0 = static_cast<int>(fy);
        const int y1 = y0 + 1 < global.h ? y0 + 1 : y0;
        const double wy = fy - y0;
        for (int x = 0; x < target_w; ++x) {
            const double fx = x * sx;
            const int x0 = static_cast<int>(fx);
            const int x1 = x0 + 1 < global.w ? x0 + 1 : x0;
            const double wx = fx - x0;
            for (int ch = 0; ch < global.c; ++ch) {
                // a + (b-a)*w keeps constants and grid-aligned samples exact
                const double tl = global.at(x0, y0, ch);
                const double bl = global.at(x0, y1, ch);
                const double top = tl + (global.at(x1, y0, ch) - tl) * wx;
                const double bot = bl + (global.at(x1, y1, ch) - bl) * wx;
                out.at(x, y, ch) = top + (bot - top) * wy;
            }
        }
    }
    return out;
}

/// Channel-wise sum of the merged local map and the upsampled global map.
inline FeatureMap fuse(const FeatureMap& merged, const FeatureMap& upsampled_global) {
    if (merged.w != upsampled_global.w || merged.h != upsampled_global.h ||
        merged.c != upsampled_global.c)
        throw ShapeError("fuse operands disagree in shape");
    FeatureMap out(merged.w, merged.h, merged.c);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = merged.data[i] + upsampled_global.data[i];
    return out;
}

inline TokenSequence flatten_tokens(const FeatureMap& global,
                                    const FeatureMap& merged) {
    if (global.c != merged.c)
        throw ShapeError("token channel counts disagree");
    if (merged.cells() == 0) throw ShapeError("merged map has no cells");

    TokenSequence seq;
    seq.c = global.c;
    seq.values.reserve((global.cells() + merged.cells()) * global.c);
    seq.sources.reserve(global.cells() + merged.cells());
    for (const FeatureMap* fm : {&global, &merged}) {
        const TokenSource tag =
            fm == &global ? TokenSource::GLOBAL : TokenSource::LOCAL;
        for (std::size_t cell = 0; cell < fm->cells(); ++cell) {
            seq.values.insert(seq.values.end(), fm->data.begin() + cell * fm->c,
                              fm->data.begin() + (cell + 1) * fm->c);
            seq.sources.push_back(tag);
        }
    }
    return seq;
}

}  // namespace anyref
