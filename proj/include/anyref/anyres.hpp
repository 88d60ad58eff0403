#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "anyref/error.hpp"
#include "anyref/raster.hpp"

namespace anyref {

inline constexpr int kDefaultCellSize = 336;
inline constexpr int kDefaultMaxCells = 6;
inline constexpr int kDefaultTokenBudget = 1280;

struct GridConfig {
    int rows = 1;
    int cols = 1;

    int cells() const { return rows * cols; }
};

inline bool operator==(const GridConfig& a, const GridConfig& b) {
    return a.rows == b.rows && a.cols == b.cols;
}

using GridCatalog = std::vector<GridConfig>;

struct TileLayout {
    GridConfig grid;
    int cell_size = kDefaultCellSize;
    Dims canvas;
    Dims source;
};

struct TileResult {
    Raster global;
    std::vector<Raster> patches;  // row-major
    TileLayout layout;
};

/// The base grid set {1x1, 1x2, 1x3, 1x4, 1x5, 1x6, 2x2, 2x3} followed by the
/// transposes of its non-square entries, filtered to rows*cols <= max_cells.
inline GridCatalog default_catalog(int max_cells = kDefaultMaxCells) {
    if (max_cells < 1) throw ConfigError("max_cells must be at least 1");
    static constexpr GridConfig base[] = {{1, 1}, {1, 2}, {1, 3}, {1, 4},
                                          {1, 5}, {1, 6}, {2, 2}, {2, 3}};
    GridCatalog catalog;
    auto push = [&](GridConfig g) {
        if (g.cells() > max_cells) return;
        if (std::find(catalog.begin(), catalog.end(), g) == catalog.end())
            catalog.push_back(g);
    };
    for (const GridConfig& g : base) push(g);
    for (const GridConfig& g : base)
        if (g.rows != g.cols) push(GridConfig{g.cols, g.rows});
    return catalog;
}

/// Pick the grid whose canvas preserves the most effective source resolution.
/// Per candidate: canvas = (cols*S, rows*S); the image is scaled by
/// s = min(canvas.w/W, canvas.h/H) to fit; effective = min(s*W * s*H, W*H);
/// wasted = canvas area - scaled area. Max effective, then min wasted, then
/// fewer cells, then catalog order.
inline GridConfig select_grid(const Dims& source, const GridCatalog& catalog,
                              int cell_size = kDefaultCellSize) {
    detail::require_dims(source);
    if (catalog.empty()) throw ConfigError("empty grid catalog");
    if (cell_size < 1) throw ConfigError("cell_size must be positive");

    GridConfig best = catalog.front();
    double best_effective = -1.0;
    double best_wasted = 0.0;
    const double source_area = static_cast<double>(source.width) * source.height;
    for (const GridConfig& g : catalog) {
        const double canvas_w = static_cast<double>(g.cols) * cell_size;
        const double canvas_h = static_cast<double>(g.rows) * cell_size;
        const double s = std::min(canvas_w / source.width, canvas_h / source.height);
        const double scaled_area = (s * source.width) * (s * source.height);
        const double effective = std::min(scaled_area, source_area);
        const double wasted = canvas_w * canvas_h - scaled_area;
        const bool better =
            effective > best_effective ||
            (effective == best_effective &&
             (wasted < best_wasted ||
              (wasted == best_wasted && g.cells() < best.cells())));
        if (best_effective < 0.0 || better) {
            best = g;
            best_effective = effective;
            best_wasted = wasted;
        }
    }
    return best;
}

/// Resize to the grid's canvas (aspect distorted to fill, no padding) and cut
/// row-major cell_size x cell_size patches; the global view is the image
/// resized to a single cell.
inline TileResult tile(const Raster& image, const GridConfig& grid,
                       int cell_size = kDefaultCellSize) {
    if (grid.rows < 1 || grid.cols < 1) throw ConfigError("invalid grid");
    if (cell_size < 1) throw ConfigError("cell_size must be positive");

    TileResult result;
    result.global = resize_bilinear(image, cell_size, cell_size);
    const int canvas_w = grid.cols * cell_size;
    const int canvas_h = grid.rows * cell_size;
    const Raster canvas = resize_bilinear(image, canvas_w, canvas_h);
    result.patches.reserve(static_cast<std::size_t>(grid.cells()));
    for (int r = 0; r < grid.rows; ++r)
        for (int c = 0; c < grid.cols; ++c)
            result.patches.push_back(
                crop(canvas, c * cell_size, r * cell_size, cell_size, cell_size));
    result.layout = TileLayout{grid, cell_size, Dims{canvas_w, canvas_h},
                               image.dims};
    return result;
}

/// Visual-token accounting: one global view plus rows*cols local patches.
/// Reporting only; budget enforcement is a CLI-level warning.
inline long token_count(const GridConfig& grid, int tokens_per_image) {
    if (tokens_per_image < 1)
        throw ConfigError("tokens_per_image must be positive");
    return static_cast<long>(grid.cells() + 1) * tokens_per_image;
}

}  // namespace anyref
