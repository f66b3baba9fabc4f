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

#include "nucfuse/core.hpp"

#include <algorithm>
#include <deque>
#include <tuple>
#include <unordered_map>

namespace nucfuse {

std::string_view class_name(ClassId c) {
    static constexpr std::array<std::string_view, kNumClasses + 1> names = {
        "background", "neutrophil", "epithelial", "lymphocyte", "plasma", "eosinophil", "connective"};
    return names[static_cast<std::size_t>(c.value())];
}

std::string_view to_string(Source s) {
    switch (s) {
        case Source::semantic: return "semantic";
        case Source::instance: return "instance";
        case Source::fused: return "fused";
    }
    return "unknown";
}

Source source_from_string(std::string_view s) {
    if (s == "semantic") return Source::semantic;
    if (s == "instance") return Source::instance;
    if (s == "fused") return Source::fused;
    throw ValidationError("unknown source tag: " + std::string(s));
}

void validate_scene(const LabeledScene& scene) {
    const auto& inst = scene.instance_map;
    const auto& cls = scene.class_map;
    if (inst.width != scene.width || inst.height != scene.height || cls.width != scene.width ||
        cls.height != scene.height) {
        throw ValidationError("dimension mismatch: instance raster " + std::to_string(inst.width) + "x" +
                              std::to_string(inst.height) + ", class raster " + std::to_string(cls.width) +
                              "x" + std::to_string(cls.height) + ", scene " + std::to_string(scene.width) +
                              "x" + std::to_string(scene.height));
    }
    if (inst.size() != static_cast<std::size_t>(scene.width) * scene.height || cls.size() != inst.size())
        throw ValidationError("raster storage does not match declared dimensions");
    for (int y = 0; y < scene.height; ++y) {
        for (int x = 0; x < scene.width; ++x) {
            const auto id = inst.at(x, y);
            const auto c = cls.at(x, y);
            if (c > kNumClasses) {
                throw ValidationError("class value " + std::to_string(c) + " out of range at (" +
                                      std::to_string(x) + "," + std::to_string(y) + ")");
            }
            if ((id == 0) != (c == 0)) {
                throw ValidationError("instance/class mismatch at (" + std::to_string(x) + "," +
                                      std::to_string(y) + "): instance " + std::to_string(id) + ", class " +
                                      std::to_string(c));
            }
        }
    }
}

BBox tight_bbox(std::span<const Pixel> mask) {
    if (mask.empty()) throw ValidationError("bounding box of an empty mask");
    BBox b{mask.front().x, mask.front().y, mask.front().x + 1, mask.front().y + 1};
    for (const auto& p : mask) {
        b.x0 = std::min(b.x0, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.x1 = std::max(b.x1, p.x + 1);
        b.y1 = std::max(b.y1, p.y + 1);
    }
    return b;
}

PixelSet set_union(std::span<const Pixel> a, std::span<const Pixel> b) {
    PixelSet out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::size_t intersection_size(std::span<const Pixel> a, std::span<const Pixel> b) {
    std::size_t n = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

bool canonical_less(const Detection& a, const Detection& b) {
    const Pixel fa = a.mask.empty() ? Pixel{} : a.mask.front();
    const Pixel fb = b.mask.empty() ? Pixel{} : b.mask.front();
    return std::tuple(a.bbox.y0, a.bbox.x0, fa.y, fa.x, a.source, a.id) <
           std::tuple(b.bbox.y0, b.bbox.x0, fb.y, fb.x, b.source, b.id);
}

void sort_canonical(std::vector<Detection>& detections) {
    std::sort(detections.begin(), detections.end(), canonical_less);
}

DetectionSet extract_detections(const LabeledScene& scene, Source source) {
    validate_scene(scene);

    struct Accum {
        PixelSet mask;
        std::array<std::size_t, kNumClasses + 1> votes{};
    };
    std::unordered_map<std::uint32_t, Accum> by_id;
    for (int y = 0; y < scene.height; ++y) {
        for (int x = 0; x < scene.width; ++x) {
            const auto id = scene.instance_map.at(x, y);
            if (id == 0) continue;
            auto& acc = by_id[id];
            acc.mask.push_back({x, y});  // row-major scan keeps the mask sorted
            ++acc.votes[scene.class_map.at(x, y)];
        }
    }

    DetectionSet out{scene.width, scene.height, {}};
    out.detections.reserve(by_id.size());
    for (auto& [id, acc] : by_id) {
        int best = 0;
        // votes[0] is always zero after validation; strict > keeps the smaller id on ties.
        for (int c = 1; c <= kNumClasses; ++c)
            if (acc.votes[c] > acc.votes[best]) best = c;
        if (best == 0)
            throw ValidationError("instance " + std::to_string(id) + " has only background-class pixels");
        Detection d;
        d.id = id;
        d.bbox = tight_bbox(acc.mask);
        d.mask = std::move(acc.mask);
        d.label = ClassId(best);
        d.source = source;
        out.detections.push_back(std::move(d));
    }
    sort_canonical(out.detections);
    return out;
}

LabeledScene rasterize(const DetectionSet& set) {
    LabeledScene scene(set.width, set.height);
    for (const auto& d : set.detections) {
        if (d.label.is_background()) throw ValidationError("detection with background label");
        for (const auto& p : d.mask) {
            if (!scene.instance_map.contains(p.x, p.y))
                throw ValidationError("detection pixel outside scene bounds");
            scene.instance_map.at(p.x, p.y) = d.id;
            scene.class_map.at(p.x, p.y) = static_cast<std::uint8_t>(d.label.value());
        }
    }
    return scene;
}

double bbox_iou(const BBox& a, const BBox& b) {
    const long long iw = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
    const long long ih = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
    const long long inter = iw * ih;
    const long long uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double mask_iou(std::span<const Pixel> a, std::span<const Pixel> b) {
    const std::size_t inter = intersection_size(a, b);
    const std::size_t uni = a.size() + b.size() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

LabeledScene relabel_components(const ClassRaster& class_only) {
    LabeledScene scene(class_only.width, class_only.height);
    scene.class_map = class_only;
    std::uint32_t next_id = 0;
    std::deque<Pixel> queue;
    constexpr std::array<Pixel, 4> steps = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
    for (int y = 0; y < class_only.height; ++y) {
        for (int x = 0; x < class_only.width; ++x) {
            const auto c = class_only.at(x, y);
            if (c == 0 || scene.instance_map.at(x, y) != 0) continue;
            if (c > kNumClasses) throw ValidationError("class value out of range in class raster");
            const std::uint32_t id = ++next_id;
            scene.instance_map.at(x, y) = id;
            queue.push_back({x, y});
            while (!queue.empty()) {
                const Pixel p = queue.front();
                queue.pop_front();
                for (const auto& s : steps) {
                    const int nx = p.x + s.x;
                    const int ny = p.y + s.y;
                    if (!class_only.contains(nx, ny)) continue;
                    if (class_only.at(nx, ny) != c || scene.instance_map.at(nx, ny) != 0) continue;
                    scene.instance_map.at(nx, ny) = id;
                    queue.push_back({nx, ny});
                }
            }
        }
    }
    return scene;
}

}  // namespace nucfuse
