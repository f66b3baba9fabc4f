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

#include "nucfuse/augment.hpp"

#include <algorithm>
#include <cmath>

#include "nucfuse/kernels.hpp"

namespace nucfuse::augment {

namespace {

void check_pair(const RgbImage& image, const LabeledScene& scene) {
    if (image.width != scene.width || image.height != scene.height)
        throw ValidationError("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                              " but labels are " + std::to_string(scene.width) + "x" + std::to_string(scene.height));
    if (scene.width <= 0 || scene.height <= 0) throw ValidationError("cannot augment an empty scene");
}

Sample resample(const RgbImage& image, const LabeledScene& scene, const kernels::ResampleGeometry& g) {
    Sample out;
    out.image = kernels::parallel::resample_bilinear(image, g);
    out.scene.width = g.out_width;
    out.scene.height = g.out_height;
    out.scene.instance_map = kernels::parallel::resample_nearest(scene.instance_map, g);
    out.scene.class_map = kernels::parallel::resample_nearest(scene.class_map, g);
    return out;
}

int scaled_extent(int n, double scale) { return std::max(1, static_cast<int>(std::lround(n * scale))); }

// Matches the usual imgaug/OpenCV choice of sigma for a given kernel size.
double sigma_for_kernel(int ksize) { return 0.3 * ((ksize - 1) * 0.5 - 1.0) + 0.8; }

}  // namespace

void AugmentConfig::validate() const {
    if (target_size <= 0) throw ValidationError("target size must be positive");
    if (!(scale_low > 0.0) || !(scale_low <= scale_high))
        throw ValidationError("scale range must satisfy 0 < low <= high");
    if (noise_sigma_low < 0.0 || noise_sigma_low > noise_sigma_high)
        throw ValidationError("noise sigma range must satisfy 0 <= low <= high");
    if (blur_kernel_sizes.empty()) throw ValidationError("at least one blur kernel size is required");
    for (int k : blur_kernel_sizes)
        if (k < 1 || k % 2 == 0 || k > 7) throw ValidationError("blur kernel sizes must be odd and in [1, 7]");
}

Sample upscale_2x(const RgbImage& image, const LabeledScene& scene) {
    check_pair(image, scene);
    const kernels::ResampleGeometry g{2 * scene.width, 2 * scene.height, 2 * scene.width, 2 * scene.height, 0, 0};
    return resample(image, scene, g);
}

Sample scale_and_crop(const RgbImage& image, const LabeledScene& scene, double scale, int offset_x, int offset_y,
                      int size) {
    check_pair(image, scene);
    if (!(scale > 0.0)) throw ValidationError("scale must be positive");
    if (size <= 0) throw ValidationError("crop size must be positive");
    const kernels::ResampleGeometry g{size, size, scaled_extent(scene.width, scale), scaled_extent(scene.height, scale),
                                      offset_x, offset_y};
    return resample(image, scene, g);
}

ScaleCropDraw draw_scale_crop(int width, int height, const AugmentConfig& cfg, CounterRng& rng) {
    ScaleCropDraw d;
    d.scale = rng.uniform(cfg.scale_low, cfg.scale_high);
    const int slack_x = scaled_extent(width, d.scale) - cfg.target_size;
    const int slack_y = scaled_extent(height, d.scale) - cfg.target_size;
    d.offset_x = static_cast<int>(rng.uniform_int(std::min(0, slack_x), std::max(0, slack_x)));
    d.offset_y = static_cast<int>(rng.uniform_int(std::min(0, slack_y), std::max(0, slack_y)));
    return d;
}

Sample random_scale_crop(const RgbImage& image, const LabeledScene& scene, const AugmentConfig& cfg, CounterRng& rng) {
    cfg.validate();
    const auto d = draw_scale_crop(scene.width, scene.height, cfg, rng);
    return scale_and_crop(image, scene, d.scale, d.offset_x, d.offset_y, cfg.target_size);
}

Sample apply_flip(const RgbImage& image, const LabeledScene& scene, FlipDraw flip) {
    check_pair(image, scene);
    const int w = scene.width;
    const int h = scene.height;
    Sample out{RgbImage(w, h), LabeledScene(w, h)};
    for (int y = 0; y < h; ++y) {
        const int sy = flip.vertical ? h - 1 - y : y;
        for (int x = 0; x < w; ++x) {
            const int sx = flip.horizontal ? w - 1 - x : x;
            std::copy_n(image.at(sx, sy), 3, out.image.at(x, y));
            out.scene.instance_map.at(x, y) = scene.instance_map.at(sx, sy);
            out.scene.class_map.at(x, y) = scene.class_map.at(sx, sy);
        }
    }
    return out;
}

FlipDraw draw_flip(const AugmentConfig& cfg, CounterRng& rng) {
    // Both coins are always tossed so the stream position does not depend on cfg.
    const bool h = rng.bernoulli(0.5);
    const bool v = rng.bernoulli(0.5);
    return {cfg.flip_horizontal && h, cfg.flip_vertical && v};
}

Sample random_flip(const RgbImage& image, const LabeledScene& scene, const AugmentConfig& cfg, CounterRng& rng) {
    return apply_flip(image, scene, draw_flip(cfg, rng));
}

std::optional<NoiseDraw> draw_noise(const AugmentConfig& cfg, CounterRng& rng) {
    NoiseDraw d;
    const auto op_slot = rng.uniform_index(std::max<std::size_t>(cfg.noise_ops.size(), 1));
    const auto k_slot = rng.uniform_index(std::max<std::size_t>(cfg.blur_kernel_sizes.size(), 1));
    d.sigma = rng.uniform(cfg.noise_sigma_low, cfg.noise_sigma_high);
    d.noise_seed = rng.next_u64();
    if (cfg.noise_ops.empty()) return std::nullopt;
    d.op = cfg.noise_ops[op_slot];
    d.kernel_size = cfg.blur_kernel_sizes.empty() ? 3 : cfg.blur_kernel_sizes[k_slot];
    return d;
}

RgbImage apply_noise(const RgbImage& image, const NoiseDraw& draw) {
    switch (draw.op) {
        case NoiseOp::gaussian_blur:
            return kernels::parallel::gaussian_blur(image, draw.kernel_size, sigma_for_kernel(draw.kernel_size));
        case NoiseOp::median_blur:
            return kernels::parallel::median_blur(image, draw.kernel_size);
        case NoiseOp::additive_gaussian_noise:
            return kernels::parallel::add_gaussian_noise(image, draw.sigma, draw.noise_seed);
    }
    return image;
}

RgbImage random_noise(const RgbImage& image, const AugmentConfig& cfg, CounterRng& rng) {
    const auto draw = draw_noise(cfg, rng);
    if (!draw) return image;
    return apply_noise(image, *draw);
}

Sample augment(const RgbImage& image, const LabeledScene& scene, const AugmentConfig& cfg) {
    cfg.validate();
    CounterRng rng(cfg.seed);
    auto big = upscale_2x(image, scene);
    auto cropped = random_scale_crop(big.image, big.scene, cfg, rng);
    auto flipped = random_flip(cropped.image, cropped.scene, cfg, rng);
    flipped.image = random_noise(flipped.image, cfg, rng);
    return flipped;
}

}  // namespace nucfuse::augment
