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

// Data-parallel inner loops. Every kernel exists twice with the same
// signature: `serial` is the reference kept for tests and benchmarks,
// `parallel` is the OpenMP version used by the library. Each output element
// is computed by the same per-element function in both, so results are
// bit-identical for any thread count.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nucfuse/core.hpp"

namespace nucfuse::kernels {

enum class Execution { serial, parallel };

/// Maps an output raster onto a source raster that has been virtually
/// rescaled to scaled_width x scaled_height and then cropped at
/// (offset_x, offset_y). Output pixels outside the scaled source are zero.
struct ResampleGeometry {
    int out_width = 0;
    int out_height = 0;
    int scaled_width = 0;
    int scaled_height = 0;
    int offset_x = 0;
    int offset_y = 0;
};

/// Sets or queries the worker count used by the parallel kernels.
/// Zero restores the OpenMP default.
void set_num_threads(int n);
int num_threads();

// pairwise_bbox_iou: row-major |rows| x |cols| IoU matrix.
// gaussian_blur: separable, replicated border, odd ksize.
// median_blur: per-channel median over a ksize x ksize window, replicated border.
// add_gaussian_noise: value i gets sigma * counter_normal(seed, i), rounded and clamped.

namespace serial {
std::vector<double> pairwise_bbox_iou(std::span<const BBox> rows, std::span<const BBox> cols);
RgbImage resample_bilinear(const RgbImage& src, const ResampleGeometry& g);
InstanceRaster resample_nearest(const InstanceRaster& src, const ResampleGeometry& g);
ClassRaster resample_nearest(const ClassRaster& src, const ResampleGeometry& g);
RgbImage gaussian_blur(const RgbImage& img, int ksize, double sigma);
RgbImage median_blur(const RgbImage& img, int ksize);
RgbImage add_gaussian_noise(const RgbImage& img, double sigma, std::uint64_t seed);
}  // namespace serial

namespace parallel {
std::vector<double> pairwise_bbox_iou(std::span<const BBox> rows, std::span<const BBox> cols);
RgbImage resample_bilinear(const RgbImage& src, const ResampleGeometry& g);
InstanceRaster resample_nearest(const InstanceRaster& src, const ResampleGeometry& g);
ClassRaster resample_nearest(const ClassRaster& src, const ResampleGeometry& g);
RgbImage gaussian_blur(const RgbImage& img, int ksize, double sigma);
RgbImage median_blur(const RgbImage& img, int ksize);
RgbImage add_gaussian_noise(const RgbImage& img, double sigma, std::uint64_t seed);
}  // namespace parallel

}  // namespace nucfuse::kernels
