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

// Seeded four-step augmentation for image/label pairs:
//   1. enlarge 2x (bilinear image, nearest-neighbour labels)
//   2. random rescale in [0.8, 1.2] followed by a target_size crop with zero padding
//   3. random horizontal / vertical flip
//   4. one randomly chosen image-only perturbation (Gaussian blur, median blur, additive noise)
// Labels are only ever moved, never interpolated.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nucfuse/core.hpp"
#include "nucfuse/rng.hpp"

namespace nucfuse::augment {

enum class NoiseOp { gaussian_blur, median_blur, additive_gaussian_noise };

struct AugmentConfig {
    int target_size = 512;
    double scale_low = 0.8;
    double scale_high = 1.2;
    bool flip_horizontal = true;
    bool flip_vertical = true;
    std::vector<NoiseOp> noise_ops{NoiseOp::gaussian_blur, NoiseOp::median_blur, NoiseOp::additive_gaussian_noise};
    std::vector<int> blur_kernel_sizes{3, 5};
    double noise_sigma_low = 0.0;
    double noise_sigma_high = 0.05 * 255.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Sample {
    RgbImage image;
    LabeledScene scene;
};

Sample upscale_2x(const RgbImage& image, const LabeledScene& scene);

/// Deterministic core of step 2: rescale by `scale` then take a size x size
/// window whose top-left corner sits at (offset_x, offset_y) in the rescaled
/// frame. Offsets may be negative; uncovered pixels are zero.
Sample scale_and_crop(const RgbImage& image, const LabeledScene& scene, double scale, int offset_x, int offset_y,
                      int size);

struct ScaleCropDraw {
    double scale = 1.0;
    int offset_x = 0;
    int offset_y = 0;
};

/// Draws scale ~ U[scale_low, scale_high] then each offset uniformly over
/// [min(0, scaled - target), max(0, scaled - target)].
ScaleCropDraw draw_scale_crop(int width, int height, const AugmentConfig& cfg, CounterRng& rng);
Sample random_scale_crop(const RgbImage& image, const LabeledScene& scene, const AugmentConfig& cfg, CounterRng& rng);

struct FlipDraw {
    bool horizontal = false;
    bool vertical = false;
};

Sample apply_flip(const RgbImage& image, const LabeledScene& scene, FlipDraw flip);
FlipDraw draw_flip(const AugmentConfig& cfg, CounterRng& rng);
Sample random_flip(const RgbImage& image, const LabeledScene& scene, const AugmentConfig& cfg, CounterRng& rng);

struct NoiseDraw {
    NoiseOp op = NoiseOp::gaussian_blur;
    int kernel_size = 3;
    double sigma = 0.0;
    std::uint64_t noise_seed = 0;
};

std::optional<NoiseDraw> draw_noise(const AugmentConfig& cfg, CounterRng& rng);
RgbImage apply_noise(const RgbImage& image, const NoiseDraw& draw);
RgbImage random_noise(const RgbImage& image, const AugmentConfig& cfg, CounterRng& rng);

/// All four steps with a fresh stream seeded from cfg.seed.
Sample augment(const RgbImage& image, const LabeledScene& scene, const AugmentConfig& cfg);

/// Per-image seed for dataset-wide runs.
inline std::uint64_t image_seed(std::uint64_t seed, std::uint64_t index) { return seed ^ index; }

}  // namespace nucfuse::augment
