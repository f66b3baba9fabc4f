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

// Scene packages on disk:
//
//   <dir>/image.png     8-bit RGB (optional)
//   <dir>/instance.png  16-bit grayscale, value = instance id
//   <dir>/class.png     8-bit grayscale, value = class id
//   <dir>/meta.json     {"format_version": 1, "width": W, "height": H, "producer": "..."}
//
// PNGs are written with fixed zlib settings and no time chunk, so identical
// inputs always produce identical bytes.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nucfuse/core.hpp"
#include "nucfuse/metrics.hpp"

namespace nucfuse::io {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = 1;
inline constexpr std::uint32_t kMaxInstanceId = 65535;

/// Known producer tags: ground_truth, semantic, instance, fused, augmented, synthetic.
struct ScenePackage {
    LabeledScene scene;
    std::optional<RgbImage> image;
    std::string producer = "ground_truth";
};

/// Throws IoError for missing files and unsupported formats, ValidationError
/// for dimension mismatches and instance/class inconsistencies.
ScenePackage read_scene(const std::filesystem::path& dir);
void write_scene(const std::filesystem::path& dir, const LabeledScene& scene, const RgbImage* image = nullptr,
                 const std::string& producer = "ground_truth");

// Single-raster PNG codecs. Gray readers accept 8- or 16-bit input.
std::vector<std::uint8_t> encode_png_rgb(const RgbImage& image);
std::vector<std::uint8_t> encode_png_gray8(const ClassRaster& raster);
std::vector<std::uint8_t> encode_png_gray16(const InstanceRaster& raster);
RgbImage decode_png_rgb(const std::vector<std::uint8_t>& bytes);
InstanceRaster decode_png_gray(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Scene package names (subdirectories holding meta.json), sorted.
std::vector<std::string> list_scenes(const std::filesystem::path& dir);

/// {pq, pq_plus:[6 | null], mpq_plus, r2:[6 | null], r2_mean, per_scene_counts:[[6]]}
std::string report_to_json(const metrics::MetricsReport& report);
/// scene_id,c1..c6
std::string counts_to_csv(const std::vector<std::string>& scene_ids, const std::vector<metrics::CountVector>& counts);
std::string detections_to_json(const DetectionSet& set, Source source);

/// Class palette used for overlays, indexed by ClassId::index().
inline constexpr std::array<std::array<std::uint8_t, 3>, kNumClasses> kPalette = {{
    {0xFF, 0x00, 0x00},  // neutrophil  #FF0000
    {0x00, 0xFF, 0x00},  // epithelial  #00FF00
    {0x00, 0x00, 0xFF},  // lymphocyte  #0000FF
    {0xFF, 0x80, 0x00},  // plasma      #FF8000
    {0xFF, 0x00, 0xFF},  // eosinophil  #FF00FF
    {0x00, 0xFF, 0xFF},  // connective  #00FFFF
}};
inline constexpr double kOverlayAlpha = 0.4;

/// Instance interiors are blended with their class colour at kOverlayAlpha;
/// boundary pixels (a 4-neighbour outside the instance) get the solid colour.
RgbImage render_overlay(const RgbImage& image, const LabeledScene& scene);

/// True if (x, y) belongs to an instance and a 4-neighbour does not.
bool is_boundary(const LabeledScene& scene, int x, int y);

}  // namespace nucfuse::io
