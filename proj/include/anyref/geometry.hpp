#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <tuple>
#include <variant>
#include <vector>

#include "anyref/error.hpp"

namespace anyref {

struct Dims {
    int width = 0;
    int height = 0;
};

inline bool operator==(const Dims& a, const Dims& b) {
    return a.width == b.width && a.height == b.height;
}

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
};

struct PixelBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
};

using Polygon = std::vector<PixelPoint>;

/// A referable region: a point, a box, or a free-form simple polygon.
using RegionShape = std::variant<PixelPoint, PixelBox, Polygon>;

/// Discrete coordinates live on a fixed 0..999 token grid.
inline constexpr int kNormRange = 1000;

struct NormPoint {
    int x = 0;
    int y = 0;
};

struct NormBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;
};

using NormShape = std::variant<NormPoint, NormBox>;

inline bool operator==(const NormPoint& a, const NormPoint& b) {
    return a.x == b.x && a.y == b.y;
}

inline bool operator==(const NormBox& a, const NormBox& b) {
    return a.x_min == b.x_min && a.y_min == b.y_min && a.x_max == b.x_max &&
           a.y_max == b.y_max;
}

struct BinaryMask {
    Dims dims;
    std::vector<bool> bits;  // row-major, width*height entries

    bool at(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * dims.width + x];
    }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), true));
    }

    bool empty() const { return count() == 0; }
};

namespace detail {

inline void require_dims(const Dims& dims) {
    if (dims.width < 1 || dims.height < 1)
        throw ShapeError("dims must be at least 1x1");
}

// Points are sample locations: half-open [0, extent). Box corners and polygon
// vertices describe boundaries: closed [0, extent].
inline void require_point_in(const PixelPoint& p, const Dims& dims) {
    if (!(p.x >= 0.0 && p.x < dims.width && p.y >= 0.0 && p.y < dims.height))
        throw OutOfBoundsError("point outside image dims");
}

inline void require_box_in(const PixelBox& b, const Dims& dims) {
    if (b.x_min > b.x_max || b.y_min > b.y_max)
        throw ShapeError("box min exceeds max");
    if (!(b.x_min >= 0.0 && b.x_max <= dims.width && b.y_min >= 0.0 &&
          b.y_max <= dims.height))
        throw OutOfBoundsError("box outside image dims");
}

inline void require_vertex_in(const PixelPoint& p, const Dims& dims) {
    if (!(p.x >= 0.0 && p.x <= dims.width && p.y >= 0.0 && p.y <= dims.height))
        throw OutOfBoundsError("polygon vertex outside image dims");
}

inline bool segments_intersect(const PixelPoint& a, const PixelPoint& b,
                               const PixelPoint& c, const PixelPoint& d) {
    auto cross = [](const PixelPoint& o, const PixelPoint& p, const PixelPoint& q) {
        return (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x);
    };
    const double d1 = cross(c, d, a);
    const double d2 = cross(c, d, b);
    const double d3 = cross(a, b, c);
    const double d4 = cross(a, b, d);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    auto on_segment = [](const PixelPoint& p, const PixelPoint& q, const PixelPoint& r) {
        return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) &&
               std::min(p.y, q.y) <= r.y && r.y <= std::max(p.y, q.y);
    };
    if (d1 == 0 && on_segment(c, d, a)) return true;
    if (d2 == 0 && on_segment(c, d, b)) return true;
    if (d3 == 0 && on_segment(a, b, c)) return true;
    if (d4 == 0 && on_segment(a, b, d)) return true;
    return false;
}

}  // namespace detail

inline PixelBox polygon_bbox(const Polygon& poly) {
    if (poly.empty()) throw InvalidPolygonError("polygon has no vertices");
    PixelBox box{poly[0].x, poly[0].y, poly[0].x, poly[0].y};
    for (const auto& p : poly) {
        box.x_min = std::min(box.x_min, p.x);
        box.y_min = std::min(box.y_min, p.y);
        box.x_max = std::max(box.x_max, p.x);
        box.y_max = std::max(box.y_max, p.y);
    }
    return box;
}

/// Non-self-intersection check over all non-adjacent edge pairs. O(n^2),
/// intended for ingestion-time validation of small annotation polygons.
inline bool polygon_is_simple(const Polygon& poly) {
    const std::size_t n = poly.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t i2 = (i + 1) % n;
        for (std::size_t j = i + 1; j < n; ++j) {
            const std::size_t j2 = (j + 1) % n;
            if (i == j || i2 == j || i == j2) continue;
            if (detail::segments_intersect(poly[i], poly[i2], poly[j], poly[j2]))
                return false;
        }
    }
    return true;
}

/// Full ingestion-time validation of a region against image dims.
inline void validate_region(const RegionShape& shape, const Dims& dims) {
    detail::require_dims(dims);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PixelPoint>) {
                detail::require_point_in(s, dims);
            } else if constexpr (std::is_same_v<T, PixelBox>) {
                detail::require_box_in(s, dims);
            } else {
                if (s.size() < 3)
                    throw InvalidPolygonError("polygon needs at least 3 vertices");
                for (const auto& v : s) detail::require_vertex_in(v, dims);
                if (!polygon_is_simple(s))
                    throw InvalidPolygonError("polygon is self-intersecting");
            }
        },
        shape);
}

/// Maps a pixel coordinate onto the 0..999 token grid by truncation:
/// floor(coord * 1000 / extent), clamped so coord == extent stays at 999.
inline int normalize_coord(double coord, int extent) {
    const int v = static_cast<int>(std::floor(coord * kNormRange / extent));
    return std::clamp(v, 0, kNormRange - 1);
}

/// Inverse map using cell centers: (value + 0.5) * extent / 1000. Together
/// with truncation above this makes normalize(denormalize(n)) == n exact.
inline double denormalize_coord(int value, int extent) {
    return (value + 0.5) * extent / kNormRange;
}

inline NormShape normalize_shape(const RegionShape& shape, const Dims& dims) {
    detail::require_dims(dims);
    return std::visit(
        [&](const auto& s) -> NormShape {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, PixelPoint>) {
                detail::require_point_in(s, dims);
                return NormPoint{normalize_coord(s.x, dims.width),
                                 normalize_coord(s.y, dims.height)};
            } else {
                PixelBox box;
                if constexpr (std::is_same_v<T, PixelBox>) {
                    box = s;
                } else {
                    // Discrete coordinates degrade to the bounding box; the
                    // fine shape is carried by the continuous feature.
                    if (s.size() < 3)
                        throw InvalidPolygonError("polygon needs at least 3 vertices");
                    for (const auto& v : s) detail::require_vertex_in(v, dims);
                    box = polygon_bbox(s);
                }
                detail::require_box_in(box, dims);
                return NormBox{normalize_coord(box.x_min, dims.width),
                               normalize_coord(box.y_min, dims.height),
                               normalize_coord(box.x_max, dims.width),
                               normalize_coord(box.y_max, dims.height)};
            }
        },
        shape);
}

inline RegionShape denormalize_shape(const NormShape& nshape, const Dims& dims) {
    detail::require_dims(dims);
    return std::visit(
        [&](const auto& s) -> RegionShape {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, NormPoint>) {
                return PixelPoint{denormalize_coord(s.x, dims.width),
                                  denormalize_coord(s.y, dims.height)};
            } else {
                return PixelBox{denormalize_coord(s.x_min, dims.width),
                                denormalize_coord(s.y_min, dims.height),
                                denormalize_coord(s.x_max, dims.width),
                                denormalize_coord(s.y_max, dims.height)};
            }
        },
        nshape);
}

/// Intersection over union. Undefined (throws) when both boxes have zero
/// area: a silent 0 there would hide annotation bugs.
inline double iou(const PixelBox& a, const PixelBox& b) {
    if (a.x_min > a.x_max || a.y_min > a.y_max || b.x_min > b.x_max ||
        b.y_min > b.y_max)
        throw ShapeError("box min exceeds max");
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    const double inter = (ix > 0.0 && iy > 0.0) ? ix * iy : 0.0;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) throw UndefinedIouError("both boxes have zero area");
    return inter / uni;
}

/// Even-odd scanline fill; pixel (x, y) is set iff its center
/// (x + 0.5, y + 0.5) lies inside the polygon.
inline BinaryMask rasterize_polygon(const Polygon& poly, const Dims& dims) {
    detail::require_dims(dims);
    if (poly.size() < 3)
        throw InvalidPolygonError("polygon needs at least 3 vertices");

    BinaryMask mask{dims, std::vector<bool>(
                              static_cast<std::size_t>(dims.width) * dims.height,
                              false)};
    std::vector<double> xs;
    for (int y = 0; y < dims.height; ++y) {
        const double yc = y + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const PixelPoint& p = poly[i];
            const PixelPoint& q = poly[(i + 1) % poly.size()];
            if ((p.y > yc) != (q.y > yc))
                xs.push_back(p.x + (yc - p.y) * (q.x - p.x) / (q.y - p.y));
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            // centers x + 0.5 in [xs[k], xs[k+1])
            int x0 = static_cast<int>(std::ceil(xs[k] - 0.5));
            int x1 = static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1;
            x0 = std::max(x0, 0);
            x1 = std::min(x1, dims.width - 1);
            for (int x = x0; x <= x1; ++x)
                mask.bits[static_cast<std::size_t>(y) * dims.width + x] = true;
        }
    }
    return mask;
}

/// Top-to-bottom, left-to-right object ordering. The full sort key is
/// (y_min, x_min, x_max, y_max, input index), so the order is total and
/// stable for identical boxes.
inline std::vector<std::size_t> raster_scan_order(const std::vector<PixelBox>& boxes) {
    std::vector<std::size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const PixelBox& ba = boxes[a];
        const PixelBox& bb = boxes[b];
        return std::tie(ba.y_min, ba.x_min, ba.x_max, ba.y_max, a) <
               std::tie(bb.y_min, bb.x_min, bb.x_max, bb.y_max, b);
    });
    return order;
}

}  // namespace anyref
