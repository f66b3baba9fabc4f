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

#include <omp.h>

#include "pixel_ops.hpp"

namespace nucfuse::kernels {

void set_num_threads(int n) {
    if (n > 0) {
        omp_set_num_threads(n);
    } else {
        omp_set_num_threads(omp_get_num_procs());
    }
}

int num_threads() { return omp_get_max_threads(); }

namespace parallel {

using namespace detail;

std::vector<double> pairwise_bbox_iou(std::span<const BBox> rows, std::span<const BBox> cols) {
    std::vector<double> out(rows.size() * cols.size());
    const auto n_rows = static_cast<long long>(rows.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n_rows; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out[static_cast<std::size_t>(i) * cols.size() + j] = box_iou_at(rows, cols, static_cast<std::size_t>(i), j);
    return out;
}

RgbImage resample_bilinear(const RgbImage& src, const ResampleGeometry& g) {
    check_geometry(src.width, src.height, g);
    RgbImage out(g.out_width, g.out_height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < g.out_height; ++y)
        for (int x = 0; x < g.out_width; ++x) bilinear_at(src, g, x, y, out.at(x, y));
    return out;
}

template <typename T>
static Raster<T> nearest_impl(const Raster<T>& src, const ResampleGeometry& g) {
    check_geometry(src.width, src.height, g);
    Raster<T> out(g.out_width, g.out_height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < g.out_height; ++y)
        for (int x = 0; x < g.out_width; ++x) out.at(x, y) = nearest_at(src, g, x, y);
    return out;
}

InstanceRaster resample_nearest(const InstanceRaster& src, const ResampleGeometry& g) { return nearest_impl(src, g); }
ClassRaster resample_nearest(const ClassRaster& src, const ResampleGeometry& g) { return nearest_impl(src, g); }

RgbImage gaussian_blur(const RgbImage& img, int ksize, double sigma) {
    const auto taps = gaussian_taps(ksize, sigma);
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
    std::vector<double> horiz(stride * img.height);
    RgbImage out(img.width, img.height);
#pragma omp parallel
    {
#pragma omp for schedule(static)
        for (int y = 0; y < img.height; ++y) gaussian_row(img, taps, y, &horiz[y * stride]);
#pragma omp for schedule(static)
        for (int y = 0; y < img.height; ++y)
            gaussian_column(horiz, img.width, img.height, taps, y, &out.pixels[y * stride]);
    }
    return out;
}

RgbImage median_blur(const RgbImage& img, int ksize) {
    check_median(ksize);
    RgbImage out(img.width, img.height);
    const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height; ++y) median_row(img, ksize, y, &out.pixels[y * stride]);
    return out;
}

RgbImage add_gaussian_noise(const RgbImage& img, double sigma, std::uint64_t seed) {
    RgbImage out(img.width, img.height);
    const auto n = static_cast<long long>(img.pixels.size());
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.pixels[k] = noisy_value(img.pixels[k], sigma, seed, k);
    }
    return out;
}

}  // namespace parallel
}  // namespace nucfuse::kernels
