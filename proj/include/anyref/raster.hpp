#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "anyref/error.hpp"
#include "anyref/geometry.hpp"

namespace anyref {

/// 8-bit RGB image, interleaved row-major (the PPM P6 layout).
struct Raster {
    Dims dims;
    std::vector<std::uint8_t> data;  // width*height*3 bytes

    Raster() = default;
    Raster(int width, int height) : dims{width, height} {
        if (width < 1 || height < 1) throw ShapeError("raster dims must be positive");
        data.assign(static_cast<std::size_t>(width) * height * 3, 0);
    }

    std::uint8_t& at(int x, int y, int ch) {
        return data[(static_cast<std::size_t>(y) * dims.width + x) * 3 + ch];
    }
    std::uint8_t at(int x, int y, int ch) const {
        return data[(static_cast<std::size_t>(y) * dims.width + x) * 3 + ch];
    }

    void fill(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        for (std::size_t i = 0; i < data.size(); i += 3) {
            data[i] = r;
            data[i + 1] = g;
            data[i + 2] = b;
        }
    }
};

inline bool operator==(const Raster& a, const Raster& b) {
    return a.dims == b.dims && a.data == b.data;
}

/// Bilinear resize, align-corners=false (half-pixel centers), channels
/// resampled independently, source reads clamped at borders. An exact-fit
/// target reproduces the input byte for byte.
inline Raster resize_bilinear(const Raster& src, int target_w, int target_h) {
    if (target_w < 1 || target_h < 1)
        throw ShapeError("resize target must be positive");
    Raster dst(target_w, target_h);
    const double sx = static_cast<double>(src.dims.width) / target_w;
    const double sy = static_cast<double>(src.dims.height) / target_h;
    for (int y = 0; y < target_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        const double wy = fy - y0;
        int y1 = std::min(y0 + 1, src.dims.height - 1);
        y0 = std::max(y0, 0);
        for (int x = 0; x < target_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            const double wx = fx - x0;
            int x1 = std::min(x0 + 1, src.dims.width - 1);
            x0 = std::max(x0, 0);
            for (int ch = 0; ch < 3; ++ch) {
                const double top = src.at(x0, y0, ch) * (1.0 - wx) +
                                   src.at(x1, y0, ch) * wx;
                const double bot = src.at(x0, y1, ch) * (1.0 - wx) +
                                   src.at(x1, y1, ch) * wx;
                const double v = top * (1.0 - wy) + bot * wy;
                dst.at(x, y, ch) = static_cast<std::uint8_t>(
                    std::min(255L, std::max(0L, std::lround(v))));
            }
        }
    }
    return dst;
}

inline Raster crop(const Raster& src, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w < 1 || h < 1 || x0 + w > src.dims.width ||
        y0 + h > src.dims.height)
        throw ShapeError("crop window outside raster");
    Raster dst(w, h);
    for (int y = 0; y < h; ++y)
        std::memcpy(&dst.data[static_cast<std::size_t>(y) * w * 3],
                    &src.data[((static_cast<std::size_t>(y0) + y) * src.dims.width + x0) * 3],
                    static_cast<std::size_t>(w) * 3);
    return dst;
}

inline void save_ppm(const Raster& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "P6\n" << img.dims.width << " " << img.dims.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) throw IoError("write failed: " + path);
}

inline Raster load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw IoError("not a binary PPM (P6): " + path);
    auto next_int = [&in, &path]() {
        // skip whitespace and '#' comment lines
        int c = in.get();
        while (c == '#' || std::isspace(c)) {
            if (c == '#')
                while (c != '\n' && c != EOF) c = in.get();
            c = in.get();
        }
        int value = 0;
        bool any = false;
        while (c >= '0' && c <= '9') {
            value = value * 10 + (c - '0');
            any = true;
            c = in.get();
        }
        if (!any) throw IoError("malformed PPM header: " + path);
        return value;
    };
    const int width = next_int();
    const int height = next_int();
    const int maxval = next_int();
    if (width < 1 || height < 1 || maxval != 255)
        throw IoError("unsupported PPM geometry or maxval: " + path);
    Raster img(width, height);
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size()))
        throw IoError("truncated PPM payload: " + path);
    return img;
}

}  // namespace anyref
