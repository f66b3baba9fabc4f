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

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nucfuse {

/// Number of nucleus categories (background excluded).
inline constexpr int kNumClasses = 6;

/// Raised when a scene, detection set or configuration violates its contract.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nucleus category. 0 is background, 1..6 are
/// neutrophil, epithelial, lymphocyte, plasma, eosinophil, connective.
class ClassId {
public:
    constexpr ClassId() = default;
    explicit constexpr ClassId(int value) : value_(static_cast<std::uint8_t>(value)) {
        if (value < 0 || value > kNumClasses)
            throw ValidationError("class id out of range: " + std::to_string(value));
    }

    constexpr int value() const { return value_; }
    constexpr bool is_background() const { return value_ == 0; }
    /// Zero-based slot for per-class vectors; only valid for foreground ids.
    constexpr std::size_t index() const { return static_cast<std::size_t>(value_ - 1); }

    static constexpr ClassId from_index(std::size_t i) { return ClassId(static_cast<int>(i) + 1); }

    friend constexpr auto operator<=>(ClassId, ClassId) = default;

private:
    std::uint8_t value_ = 0;
};

std::string_view class_name(ClassId c);

enum class Source : std::uint8_t { semantic, instance, fused };

std::string_view to_string(Source s);
Source source_from_string(std::string_view s);

/// Dense row-major raster.
template <typename T>
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Raster() = default;
    Raster(int w, int h, T fill = T{})
        : width(w), height(h), data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {
        if (w < 0 || h < 0) throw ValidationError("negative raster dimensions");
    }

    std::size_t size() const { return data.size(); }
    T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

    friend bool operator==(const Raster&, const Raster&) = default;
};

using InstanceRaster = Raster<std::uint32_t>;
using ClassRaster = Raster<std::uint8_t>;

/// Instance-id raster paired with a class raster. Instance id 0 is background
/// and a pixel has id 0 iff its class is 0.
struct LabeledScene {
    int width = 0;
    int height = 0;
    InstanceRaster instance_map;
    ClassRaster class_map;

    LabeledScene() = default;
    LabeledScene(int w, int h) : width(w), height(h), instance_map(w, h), class_map(w, h) {}

    friend bool operator==(const LabeledScene&, const LabeledScene&) = default;
};

/// Throws ValidationError naming the first offending pixel.
void validate_scene(const LabeledScene& scene);

/// 8-bit RGB image, interleaved row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* at(int x, int y) const {
        return &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
    }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

struct Pixel {
    int x = 0;
    int y = 0;

    // Row-major: y first.
    friend constexpr auto operator<=>(const Pixel& a, const Pixel& b) {
        if (auto c = a.y <=> b.y; c != 0) return c;
        return a.x <=> b.x;
    }
    friend constexpr bool operator==(const Pixel&, const Pixel&) = default;
};

/// Sparse pixel set, kept sorted in row-major order without duplicates.
using PixelSet = std::vector<Pixel>;

/// Half-open box [x0, x1) x [y0, y1).
struct BBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    long long area() const { return static_cast<long long>(x1 - x0) * (y1 - y0); }
    bool contains(Pixel p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }

    friend constexpr bool operator==(const BBox&, const BBox&) = default;
};

/// Tight bound of a non-empty pixel set.
BBox tight_bbox(std::span<const Pixel> mask);

PixelSet set_union(std::span<const Pixel> a, std::span<const Pixel> b);
std::size_t intersection_size(std::span<const Pixel> a, std::span<const Pixel> b);

struct Detection {
    std::uint32_t id = 0;
    PixelSet mask;
    BBox bbox;
    ClassId label;
    Source source = Source::semantic;
};

/// Strict weak order used everywhere a deterministic ordering of detections
/// is needed: (bbox.y0, bbox.x0, first mask pixel, source, id).
bool canonical_less(const Detection& a, const Detection& b);

struct DetectionSet {
    int width = 0;
    int height = 0;
    std::vector<Detection> detections;
};

void sort_canonical(std::vector<Detection>& detections);

/// One detection per distinct nonzero instance id. Label is the majority
/// class over the instance's pixels (ties go to the smaller class id).
DetectionSet extract_detections(const LabeledScene& scene, Source source);

/// Inverse of extract_detections for pairwise-disjoint sets: writes each
/// detection's id and label into a fresh scene.
LabeledScene rasterize(const DetectionSet& set);

double bbox_iou(const BBox& a, const BBox& b);
double mask_iou(std::span<const Pixel> a, std::span<const Pixel> b);

/// 4-connected components of same-class nonzero regions, numbered 1..N in
/// row-major order of each component's first pixel.
LabeledScene relabel_components(const ClassRaster& class_only);

}  // namespace nucfuse
