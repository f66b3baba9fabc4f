// Copyright 2026 The nucfuse Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Per-element bodies shared by the serial and parallel kernels. The two
// translation units differ only in how they iterate.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nucfuse/core.hpp"
#include "nucfuse/kernels.hpp"
#include "nucfuse/rng.hpp"

namespace nucfuse::kernels::detail {

inline std::uint8_t clamp_round(double v) {
    if (!(v > 0.0)) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(std::lround(v));
}

inline int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

inline void check_geometry(int src_w, int src_h, const ResampleGeometry& g) {
    if (g.out_width < 0 || g.out_height < 0) throw std::invalid_argument("negative output size");
    if (g.scaled_width <= 0 || g.scaled_height <= 0) throw std::invalid_argument("scaled size must be positive");
    if (src_w <= 0 || src_h <= 0) throw std::invalid_argument("empty source raster");
}

/// Scaled-space coordinate of output pixel (x, y), or false when it falls in padding.
inline bool to_scaled(const ResampleGeometry& g, int x, int y, int& sx, int& sy) {
    sx = x + g.offset_x;
    sy = y + g.offset_y;
    return sx >= 0 && sy >= 0 && sx < g.scaled_width && sy < g.scaled_height;
}

template <typename T>
inline T nearest_at(const Raster<T>& src, const ResampleGeometry& g, int x, int y) {
    int sx = 0;
    int sy = 0;
    if (!to_scaled(g, x, y, sx, sy)) return T{};
    // floor((sx + 0.5) * src / scaled) in exact integer arithmetic
    const long long fx = ((2LL * sx + 1) * src.width) / (2LL * g.scaled_width);
    const long long fy = ((2LL * sy + 1) * src.height) / (2LL * g.scaled_height);
    return src.at(clamp_index(static_cast<int>(fx), src.width), clamp_index(static_cast<int>(fy), src.height));
}

inline void bilinear_at(const RgbImage& src, const ResampleGeometry& g, int x, int y, std::uint8_t* out) {
    int sx = 0;
    int sy = 0;
    if (!to_scaled(g, x, y, sx, sy)) {
        out[0] = out[1] = out[2] = 0;
        return;
    }
    const double rx = static_cast<double>(src.width) / g.scaled_width;
    const double ry = static_cast<double>(src.height) / g.scaled_height;
    const double fx = std::clamp((sx + 0.5) * rx - 0.5, 0.0, static_cast<double>(src.width - 1));
    const double fy = std::clamp((sy + 0.5) * ry - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int x0 = static_cast<int>(fx);
    const int y0 = static_cast<int>(fy);
    const int x1 = std::min(x0 + 1, src.width - 1);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double ax = fx - x0;
    const double ay = fy - y0;
    const std::uint8_t* p00 = src.at(x0, y0);
    const std::uint8_t* p10 = src.at(x1, y0);
    const std::uint8_t* p01 = src.at(x0, y1);
    const std::uint8_t* p11 = src.at(x1, y1);
    for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + ax * (p10[c] - p00[c]);
        const double bottom = p01[c] + ax * (p11[c] - p01[c]);
        out[c] = clamp_round(top + ay * (bottom - top));
    }
}

inline std::vector<double> gaussian_taps(int ksize, double sigma) {
    if (ksize < 1 || ksize % 2 == 0) throw std::invalid_argument("gaussian kernel size must be odd and positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian sigma must be positive");
    std::vector<double> taps(static_cast<std::size_t>(ksize));
    const int r = ksize / 2;
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        taps[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += taps[static_cast<std::size_t>(i + r)];
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

/// Horizontal pass for one row into a double buffer (3 values per pixel).
inline void gaussian_row(const RgbImage& img, const std::vector<double>& taps, int y, double* out) {
    const int r = static_cast<int>(taps.size()) / 2;
    for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int k = -r; k <= r; ++k)
                acc += taps[static_cast<std::size_t>(k + r)] * img.at(clamp_index(x + k, img.width), y)[c];
            out[static_cast<std::size_t>(x) * 3 + c] = acc;
        }
    }
}

/// Vertical pass for one output row from the horizontal buffer.
inline void gaussian_column(const std::vector<double>& horiz, int width, int height,
                            const std::vector<double>& taps, int y, std::uint8_t* out) {
    const int r = static_cast<int>(taps.size()) / 2;
    const std::size_t stride = static_cast<std::size_t>(width) * 3;
    for (std::size_t i = 0; i < stride; ++i) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k)
            acc += taps[static_cast<std::size_t>(k + r)] * horiz[static_cast<std::size_t>(clamp_index(y + k, height)) * stride + i];
        out[i] = clamp_round(acc);
    }
}

inline void median_row(const RgbImage& img, int ksize, int y, std::uint8_t* out) {
    const int r = ksize / 2;
    std::array<std::uint8_t, 49> window{};
    const std::size_t n = static_cast<std::size_t>(ksize) * ksize;
    for (int x = 0; x < img.width; ++x) {
        for (int c = 0; c < 3; ++c) {
            std::size_t k = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx)
                    window[k++] = img.at(clamp_index(x + dx, img.width), clamp_index(y + dy, img.height))[c];
            std::nth_element(window.begin(), window.begin() + n / 2, window.begin() + n);
            out[static_cast<std::size_t>(x) * 3 + c] = window[n / 2];
        }
    }
}

inline void check_median(int ksize) {
    if (ksize < 1 || ksize % 2 == 0 || ksize > 7)
        throw std::invalid_argument("median kernel size must be odd and in [1, 7]");
}

inline std::uint8_t noisy_value(std::uint8_t v, double sigma, std::uint64_t seed, std::size_t i) {
    return clamp_round(v + sigma * counter_normal(seed, i));
}

inline double box_iou_at(std::span<const BBox> rows, std::span<const BBox> cols, std::size_t i, std::size_t j) {
    return bbox_iou(rows[i], cols[j]);
}

}  // namespace nucfuse::kernels::detail
