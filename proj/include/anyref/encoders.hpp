#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "anyref/error.hpp"
#include "anyref/featuremap.hpp"
#include "anyref/raster.hpp"
#include "anyref/rng.hpp"

namespace anyref {

/// GLOBAL mirrors a coarse semantic tower (color/luminance statistics,
/// strictly cell-local). LOCAL mirrors a fine-texture tower (edge/texture
/// statistics whose gradients see across cell borders).
enum class StatProfile { GLOBAL, LOCAL };

struct EncoderConfig {
    int patch_size = 14;
    int c_raw = 8;
    std::uint64_t seed = 0;  // base seed for downstream projector init
};

struct ProjectorWeights {
    int c_in = 0;
    int c_hidden = 0;
    int c_out = 0;
    std::vector<double> w1;  // c_in x c_hidden, row-major
    std::vector<double> b1;  // c_hidden
    std::vector<double> w2;  // c_hidden x c_out, row-major
    std::vector<double> b2;  // c_out
};

inline bool operator==(const ProjectorWeights& a, const ProjectorWeights& b) {
    return a.c_in == b.c_in && a.c_hidden == b.c_hidden && a.c_out == b.c_out &&
           a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
}

namespace detail {

inline double luminance(const Raster& img, int x, int y) {
    return (0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) +
            0.114 * img.at(x, y, 2)) /
           255.0;
}

}  // namespace detail

/// Per-cell statistics over patch_size x patch_size pixel blocks; output is
/// (width/patch) x (height/patch) x c_raw. Channel layout:
///   GLOBAL: mean R, G, B; luminance mean; luminance std; mean of 3x3
///           box-blurred luminance (blur confined to the cell); zeros.
///   LOCAL:  mean R, G, B; mean |dx|; mean |dy|; squared-gradient energy in
///           the |dx|>=|dy| and |dy|>|dx| orientation bins; luminance std.
/// Gradients are image-wide central differences with replicated borders, so
/// LOCAL cells see their neighbors; every GLOBAL statistic is cell-local.
/// Extra channels beyond the 8 statistics are zero.
inline FeatureMap encode_stats(const Raster& image, StatProfile profile,
                               const EncoderConfig& cfg = {}) {
    if (cfg.patch_size < 1) throw ConfigError("patch_size must be positive");
    if (cfg.c_raw < 1) throw ConfigError("c_raw must be positive");
    const int width = image.dims.width;
    const int height = image.dims.height;
    if (width % cfg.patch_size != 0 || height % cfg.patch_size != 0)
        throw TilingError("image dims not divisible by patch_size");

    const int p = cfg.patch_size;
    const int cw = width / p;
    const int ch = height / p;
    FeatureMap out(cw, ch, cfg.c_raw);

    std::vector<double> lum(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            lum[static_cast<std::size_t>(y) * width + x] =
                detail::luminance(image, x, y);

    std::vector<double> dx, dy;
    if (profile == StatProfile::LOCAL) {
        dx.resize(lum.size());
        dy.resize(lum.size());
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const auto idx = static_cast<std::size_t>(y) * width + x;
                const int xm = std::max(x - 1, 0), xp = std::min(x + 1, width - 1);
                const int ym = std::max(y - 1, 0), yp = std::min(y + 1, height - 1);
                dx[idx] = (lum[static_cast<std::size_t>(y) * width + xp] -
                           lum[static_cast<std::size_t>(y) * width + xm]) /
                          2.0;
                dy[idx] = (lum[static_cast<std::size_t>(yp) * width + x] -
                           lum[static_cast<std::size_t>(ym) * width + x]) /
                          2.0;
            }
    }

    const double n = static_cast<double>(p) * p;
    std::array<double, 8> stats{};
    for (int cy = 0; cy < ch; ++cy) {
        for (int cx = 0; cx < cw; ++cx) {
            stats.fill(0.0);
            double lum_sum = 0.0;
            for (int y = cy * p; y < (cy + 1) * p; ++y)
                for (int x = cx * p; x < (cx + 1) * p; ++x) {
                    const auto idx = static_cast<std::size_t>(y) * width + x;
                    stats[0] += image.at(x, y, 0) / 255.0;
                    stats[1] += image.at(x, y, 1) / 255.0;
                    stats[2] += image.at(x, y, 2) / 255.0;
                    lum_sum += lum[idx];
                    if (profile == StatProfile::LOCAL) {
                        stats[3] += std::abs(dx[idx]);
                        stats[4] += std::abs(dy[idx]);
                        const double energy = dx[idx] * dx[idx] + dy[idx] * dy[idx];
                        if (std::abs(dx[idx]) >= std::abs(dy[idx]))
                            stats[5] += energy;
                        else
                            stats[6] += energy;
                    }
                }
            stats[0] /= n;
            stats[1] /= n;
            stats[2] /= n;
            const double lum_mean = lum_sum / n;
            // two-pass variance: the shortcut form cancels badly on flat cells
            double lum_dev_sq = 0.0;
            for (int y = cy * p; y < (cy + 1) * p; ++y)
                for (int x = cx * p; x < (cx + 1) * p; ++x) {
                    const double d = lum[static_cast<std::size_t>(y) * width + x] - lum_mean;
                    lum_dev_sq += d * d;
                }
            const double lum_std = std::sqrt(lum_dev_sq / n);
            if (profile == StatProfile::GLOBAL) {
                stats[3] = lum_mean;
                stats[4] = lum_std;
                // 3x3 box blur with replicate border, confined to the cell
                double blur_sum = 0.0;
                const int x0 = cx * p, y0 = cy * p;
                for (int y = 0; y < p; ++y)
                    for (int x = 0; x < p; ++x) {
                        double acc = 0.0;
                        for (int oy = -1; oy <= 1; ++oy)
                            for (int ox = -1; ox <= 1; ++ox) {
                                const int bx = std::clamp(x + ox, 0, p - 1);
                                const int by = std::clamp(y + oy, 0, p - 1);
                                acc += lum[static_cast<std::size_t>(y0 + by) * width +
                                           (x0 + bx)];
                            }
                        blur_sum += acc / 9.0;
                    }
                stats[5] = blur_sum / n;
            } else {
                stats[3] /= n;
                stats[4] /= n;
                stats[5] /= n;
                stats[6] /= n;
                stats[7] = lum_std;
            }
            for (int k = 0; k < std::min(cfg.c_raw, 8); ++k)
                out.at(cx, cy, k) = stats[static_cast<std::size_t>(k)];
        }
    }
    return out;
}

/// Two-layer per-cell MLP: y = W2 * relu(W1 * x + b1) + b2.
inline FeatureMap project(const FeatureMap& fm, const ProjectorWeights& weights) {
    if (fm.c != weights.c_in)
        throw ShapeError("feature channels do not match projector input dim");
    if (weights.w1.size() !=
            static_cast<std::size_t>(weights.c_in) * weights.c_hidden ||
        weights.b1.size() != static_cast<std::size_t>(weights.c_hidden) ||
        weights.w2.size() !=
            static_cast<std::size_t>(weights.c_hidden) * weights.c_out ||
        weights.b2.size() != static_cast<std::size_t>(weights.c_out))
        throw ShapeError("projector weight shapes inconsistent");

    FeatureMap out(fm.w, fm.h, weights.c_out);
    std::vector<double> hidden(static_cast<std::size_t>(weights.c_hidden));
    for (std::size_t cell = 0; cell < fm.cells(); ++cell) {
        const double* x = &fm.data[cell * fm.c];
        for (int j = 0; j < weights.c_hidden; ++j) {
            double acc = weights.b1[static_cast<std::size_t>(j)];
            for (int i = 0; i < weights.c_in; ++i)
                acc += x[i] * weights.w1[static_cast<std::size_t>(i) * weights.c_hidden + j];
            hidden[static_cast<std::size_t>(j)] = std::max(acc, 0.0);
        }
        double* y = &out.data[cell * static_cast<std::size_t>(weights.c_out)];
        for (int k = 0; k < weights.c_out; ++k) {
            double acc = weights.b2[static_cast<std::size_t>(k)];
            for (int j = 0; j < weights.c_hidden; ++j)
                acc += hidden[static_cast<std::size_t>(j)] *
                       weights.w2[static_cast<std::size_t>(j) * weights.c_out + k];
            y[k] = acc;
        }
    }
    return out;
}

/// Seeded uniform[-0.1, 0.1] weights; generation order W1, b1, W2, b2.
inline ProjectorWeights init_projector(std::uint64_t seed, int c_in,
                                       int c_hidden, int c_out) {
    if (c_in < 1 || c_hidden < 1 || c_out < 1)
        throw ConfigError("projector dims must be positive");
    ProjectorWeights w;
    w.c_in = c_in;
    w.c_hidden = c_hidden;
    w.c_out = c_out;
    Xoshiro256 rng(seed);
    auto draw = [&rng](std::vector<double>& dst, std::size_t count) {
        dst.resize(count);
        for (double& v : dst) v = rng.uniform(-0.1, 0.1);
    };
    draw(w.w1, static_cast<std::size_t>(c_in) * c_hidden);
    draw(w.b1, static_cast<std::size_t>(c_hidden));
    draw(w.w2, static_cast<std::size_t>(c_hidden) * c_out);
    draw(w.b2, static_cast<std::size_t>(c_out));
    return w;
}

namespace detail {

inline void write_u32le(std::ostream& out, std::uint32_t v) {
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes, 4);
}

inline std::uint32_t read_u32le(std::istream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

inline void write_f64le(std::ostream& out, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

inline double read_f64le(std::istream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace detail

inline constexpr char kWeightsMagic[4] = {'F', 'V', '2', 'W'};

inline void save_projector(const ProjectorWeights& w, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(kWeightsMagic, 4);
    detail::write_u32le(out, static_cast<std::uint32_t>(w.c_in));
    detail::write_u32le(out, static_cast<std::uint32_t>(w.c_hidden));
    detail::write_u32le(out, static_cast<std::uint32_t>(w.c_out));
    for (const auto* vec : {&w.w1, &w.b1, &w.w2, &w.b2})
        for (double v : *vec) detail::write_f64le(out, v);
    if (!out) throw IoError("write failed: " + path);
}

inline ProjectorWeights load_projector(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kWeightsMagic, 4) != 0)
        throw IoError("bad weights magic: " + path);
    ProjectorWeights w;
    w.c_in = static_cast<int>(detail::read_u32le(in));
    w.c_hidden = static_cast<int>(detail::read_u32le(in));
    w.c_out = static_cast<int>(detail::read_u32le(in));
    if (!in || w.c_in < 1 || w.c_hidden < 1 || w.c_out < 1)
        throw IoError("bad weights header: " + path);
    auto read_vec = [&](std::vector<double>& dst, std::size_t count) {
        dst.resize(count);
        for (double& v : dst) v = detail::read_f64le(in);
    };
    read_vec(w.w1, static_cast<std::size_t>(w.c_in) * w.c_hidden);
    read_vec(w.b1, static_cast<std::size_t>(w.c_hidden));
    read_vec(w.w2, static_cast<std::size_t>(w.c_hidden) * w.c_out);
    read_vec(w.b2, static_cast<std::size_t>(w.c_out));
    if (!in) throw IoError("truncated weights file: " + path);
    for (const auto* vec : {&w.w1, &w.b1, &w.w2, &w.b2})
        for (double v : *vec)
            if (!std::isfinite(v)) throw IoError("non-finite weight in " + path);
    return w;
}

}  // namespace anyref
