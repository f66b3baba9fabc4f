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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "nucfuse/kernels.hpp"
#include "nucfuse/rng.hpp"
#include "oracles.hpp"

namespace nucfuse::kernels {
namespace {

RgbImage random_image(int w, int h, std::uint64_t seed) {
    RgbImage img(w, h);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(counter_hash(seed, i) & 0xFF);
    return img;
}

InstanceRaster random_ids(int w, int h, std::uint64_t seed) {
    InstanceRaster r(w, h);
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] = static_cast<std::uint32_t>(counter_hash(seed, i) % 70000);
    return r;
}

std::vector<BBox> random_boxes(std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    std::vector<BBox> out;
    for (std::size_t i = 0; i < n; ++i) {
        const int x0 = static_cast<int>(rng.uniform_int(0, 60));
        const int y0 = static_cast<int>(rng.uniform_int(0, 60));
        out.push_back({x0, y0, x0 + static_cast<int>(rng.uniform_int(1, 20)), y0 + static_cast<int>(rng.uniform_int(1, 20))});
    }
    return out;
}

class ThreadCounts : public ::testing::TestWithParam<int> {
protected:
    void SetUp() override { set_num_threads(GetParam()); }
    void TearDown() override { set_num_threads(0); }
};

TEST_P(ThreadCounts, PairwiseIouIdentical) {
    const auto a = random_boxes(37, 1);
    const auto b = random_boxes(23, 2);
    EXPECT_EQ(parallel::pairwise_bbox_iou(a, b), serial::pairwise_bbox_iou(a, b));
}

TEST_P(ThreadCounts, ResampleIdentical) {
    const auto img = random_image(53, 41, 3);
    const auto ids = random_ids(53, 41, 4);
    ClassRaster cls(53, 41);
    for (std::size_t i = 0; i < cls.data.size(); ++i) cls.data[i] = static_cast<std::uint8_t>(ids.data[i] % 7);
    for (const ResampleGeometry g : {ResampleGeometry{106, 82, 106, 82, 0, 0}, ResampleGeometry{64, 64, 47, 90, -5, 13},
                                     ResampleGeometry{30, 30, 60, 50, 20, 10}}) {
        EXPECT_EQ(parallel::resample_bilinear(img, g), serial::resample_bilinear(img, g));
        EXPECT_EQ(parallel::resample_nearest(ids, g), serial::resample_nearest(ids, g));
        EXPECT_EQ(parallel::resample_nearest(cls, g), serial::resample_nearest(cls, g));
    }
}

TEST_P(ThreadCounts, FiltersIdentical) {
    const auto img = random_image(67, 31, 5);
    for (int k : {1, 3, 5, 7}) {
        EXPECT_EQ(parallel::gaussian_blur(img, k, 1.1), serial::gaussian_blur(img, k, 1.1));
        EXPECT_EQ(parallel::median_blur(img, k), serial::median_blur(img, k));
    }
    EXPECT_EQ(parallel::add_gaussian_noise(img, 9.5, 77), serial::add_gaussian_noise(img, 9.5, 77));
}

INSTANTIATE_TEST_SUITE_P(Kernels, ThreadCounts, ::testing::Values(1, 2, 4, 7));

TEST(PairwiseIou, MatchesPixelOracle) {
    const auto a = random_boxes(12, 8);
    const auto b = random_boxes(9, 9);
    const auto m = serial::pairwise_bbox_iou(a, b);
    ASSERT_EQ(m.size(), a.size() * b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) EXPECT_DOUBLE_EQ(m[i * b.size() + j], oracle::box_iou_by_pixels(a[i], b[j]));
    EXPECT_TRUE(serial::pairwise_bbox_iou({}, b).empty());
}

TEST(ResampleNearest, DoublingReplicatesEachPixel) {
    const auto ids = random_ids(9, 7, 10);
    const auto up = serial::resample_nearest(ids, {18, 14, 18, 14, 0, 0});
    for (int y = 0; y < 14; ++y)
        for (int x = 0; x < 18; ++x) EXPECT_EQ(up.at(x, y), ids.at(x / 2, y / 2));
}

TEST(ResampleNearest, CentreSamplingMatchesFloatingFormula) {
    const auto ids = random_ids(23, 17, 11);
    const ResampleGeometry g{40, 40, 31, 29, -3, 2};
    const auto out = serial::resample_nearest(ids, g);
    for (int y = 0; y < 40; ++y)
        for (int x = 0; x < 40; ++x) {
            const int sx = x - 3, sy = y + 2;
            if (sx < 0 || sy < 0 || sx >= 31 || sy >= 29) {
                EXPECT_EQ(out.at(x, y), 0u);
                continue;
            }
            const int fx = static_cast<int>(std::floor((sx + 0.5) * 23.0 / 31.0));
            const int fy = static_cast<int>(std::floor((sy + 0.5) * 17.0 / 29.0));
            EXPECT_EQ(out.at(x, y), ids.at(fx, fy));
        }
}

TEST(ResampleBilinear, IdentityGeometryIsExact) {
    const auto img = random_image(19, 11, 12);
    EXPECT_EQ(serial::resample_bilinear(img, {19, 11, 19, 11, 0, 0}), img);
}

TEST(ResampleBilinear, ConstantImageStaysConstant) {
    const RgbImage img(13, 9, 200);
    const auto out = serial::resample_bilinear(img, {26, 18, 26, 18, 0, 0});
    for (auto v : out.pixels) EXPECT_EQ(v, 200);
}

TEST(ResampleBilinear, OutputBetweenNeighbourExtremes) {
    const auto img = random_image(15, 15, 13);
    const auto out = serial::resample_bilinear(img, {30, 30, 30, 30, 0, 0});
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 30; ++x)
            for (int c = 0; c < 3; ++c) {
                int lo = 255, hi = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int sx = std::clamp(x / 2 + dx, 0, 14), sy = std::clamp(y / 2 + dy, 0, 14);
                        lo = std::min<int>(lo, img.at(sx, sy)[c]);
                        hi = std::max<int>(hi, img.at(sx, sy)[c]);
                    }
                EXPECT_GE(out.at(x, y)[c], lo);
                EXPECT_LE(out.at(x, y)[c], hi);
            }
}

TEST(GaussianBlur, MatchesDirectTwoDimensionalConvolution) {
    const auto img = random_image(21, 14, 14);
    for (int k : {3, 5}) {
        const double sigma = 0.9 + 0.2 * k;
        const auto out = serial::gaussian_blur(img, k, sigma);
        const int r = k / 2;
        double norm = 0;
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) norm += std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < 3; ++c) {
                    double acc = 0;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx)
                            acc += std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) *
                                   img.at(std::clamp(x + dx, 0, img.width - 1), std::clamp(y + dy, 0, img.height - 1))[c];
                    // Separable and direct sums round differently only at .5 boundaries.
                    EXPECT_NEAR(out.at(x, y)[c], acc / norm, 0.5 + 1e-9);
                }
    }
}

TEST(MedianBlur, MatchesSortedWindow) {
    const auto img = random_image(17, 12, 15);
    for (int k : {3, 5}) {
        const auto out = serial::median_blur(img, k);
        const int r = k / 2;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                for (int c = 0; c < 3; ++c) {
                    std::vector<int> win;
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx)
                            win.push_back(img.at(std::clamp(x + dx, 0, img.width - 1), std::clamp(y + dy, 0, img.height - 1))[c]);
                    std::sort(win.begin(), win.end());
                    EXPECT_EQ(out.at(x, y)[c], win[win.size() / 2]);
                }
    }
    EXPECT_THROW(serial::median_blur(img, 4), std::invalid_argument);
    EXPECT_THROW(serial::median_blur(img, 9), std::invalid_argument);
}

TEST(AddGaussianNoise, ZeroSigmaIsIdentity) {
    const auto img = random_image(16, 16, 16);
    EXPECT_EQ(serial::add_gaussian_noise(img, 0.0, 1), img);
}

TEST(AddGaussianNoise, MomentsOfResidual) {
    const RgbImage img(128, 128, 128);
    const double sigma = 10.0;
    const auto out = serial::add_gaussian_noise(img, sigma, 42);
    double mean = 0, var = 0;
    for (auto v : out.pixels) mean += v - 128.0;
    mean /= static_cast<double>(out.pixels.size());
    for (auto v : out.pixels) var += (v - 128.0 - mean) * (v - 128.0 - mean);
    var /= static_cast<double>(out.pixels.size());
    // 49152 samples: standard error of the mean is about 0.045; rounding adds 1/12 to the variance.
    EXPECT_NEAR(mean, 0.0, 0.2);
    EXPECT_NEAR(var, sigma * sigma + 1.0 / 12, 3.0);
}

}  // namespace
}  // namespace nucfuse::kernels
