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

#include "nucfuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nucfuse/rng.hpp"

namespace nucfuse::synth {

namespace {

constexpr std::array<std::array<double, 3>, kNumClasses> kStain = {{
    {95, 40, 130},   // neutrophil
    {120, 70, 160},  // epithelial
    {60, 30, 110},   // lymphocyte
    {100, 50, 120},  // plasma
    {150, 60, 120},  // eosinophil
    {130, 90, 170},  // connective
}};
constexpr std::array<double, 3> kBackground = {232, 196, 214};

std::size_t draw_categorical(std::span<const double> weights, CounterRng& rng) {
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        last_positive = i;
        if (u < acc) return i;
    }
    return last_positive;
}

void check_probability_vector(std::span<const double> v, const char* what) {
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= 0.0)) throw ValidationError(std::string(what) + " has a negative entry");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError(std::string(what) + " must sum to 1");
}

}  // namespace

void SynthConfig::validate() const {
    if (width <= 0 || height <= 0) throw ValidationError("synthetic scene dimensions must be positive");
    if (n_cells < 0) throw ValidationError("cell count must be non-negative");
    if (!(radius_min >= 1.0) || radius_max < radius_min) throw ValidationError("radius range must satisfy 1 <= min <= max");
    if (max_attempts_per_cell <= 0) throw ValidationError("placement attempts must be positive");
    check_probability_vector(class_frequencies, "class frequencies");
}

SynthScene generate_scene(const SynthConfig& cfg) {
    cfg.validate();
    CounterRng rng(cfg.seed);
    SynthScene out{RgbImage(cfg.width, cfg.height), LabeledScene(cfg.width, cfg.height)};
    auto& inst = out.scene.instance_map;

    std::vector<Pixel> cell;
    for (int n = 1; n <= cfg.n_cells; ++n) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_attempts_per_cell && !placed; ++attempt) {
            const double rx = rng.uniform(cfg.radius_min, cfg.radius_max);
            const double ry = rng.uniform(cfg.radius_min, cfg.radius_max);
            const int reach_x = static_cast<int>(std::floor(rx));
            const int reach_y = static_cast<int>(std::floor(ry));
            const long long cx = rng.uniform_int(reach_x, cfg.width - 1 - reach_x);
            const long long cy = rng.uniform_int(reach_y, cfg.height - 1 - reach_y);
            if (cfg.width - 1 - reach_x < reach_x || cfg.height - 1 - reach_y < reach_y) continue;

            cell.clear();
            bool clear = true;
            for (int y = static_cast<int>(cy) - reach_y; y <= cy + reach_y && clear; ++y) {
                for (int x = static_cast<int>(cx) - reach_x; x <= cx + reach_x; ++x) {
                    const double dx = (x - cx) / rx;
                    const double dy = (y - cy) / ry;
                    if (dx * dx + dy * dy > 1.0) continue;
                    for (int ny = y - 1; ny <= y + 1 && clear; ++ny)
                        for (int nx = x - 1; nx <= x + 1; ++nx)
                            if (inst.contains(nx, ny) && inst.at(nx, ny) != 0) {
                                clear = false;
                                break;
                            }
                    if (!clear) break;
                    cell.push_back({x, y});
                }
            }
            if (!clear || cell.empty()) continue;

            const auto cls = static_cast<std::uint8_t>(draw_categorical(cfg.class_frequencies, rng) + 1);
            for (const auto& p : cell) {
                inst.at(p.x, p.y) = static_cast<std::uint32_t>(n);
                out.scene.class_map.at(p.x, p.y) = cls;
            }
            placed = true;
        }
        if (!placed)
            throw ValidationError("could not place cell " + std::to_string(n) + " of " + std::to_string(cfg.n_cells) +
                                  " after " + std::to_string(cfg.max_attempts_per_cell) + " attempts");
    }

    const std::uint64_t texture_seed = rng.next_u64();
    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            const auto c = out.scene.class_map.at(x, y);
            const auto& base = c == 0 ? kBackground : kStain[c - 1];
            const std::size_t i = static_cast<std::size_t>(y) * cfg.width + x;
            const double jitter = 6.0 * counter_normal(texture_seed, i);
            auto* px = out.image.at(x, y);
            for (int ch = 0; ch < 3; ++ch)
                px[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(base[ch] + jitter), 0L, 255L));
        }
    }
    return out;
}

ConfusionMatrix identity_confusion() {
    ConfusionMatrix m{};
    for (std::size_t i = 0; i < m.size(); ++i) m[i][i] = 1.0;
    return m;
}

void PerturbConfig::validate() const {
    if (magnitude < 0) throw ValidationError("mask noise magnitude must be non-negative");
    if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) throw ValidationError("drop rate must lie in [0, 1]");
    for (const auto& row : label_confusion) check_probability_vector(row, "confusion row");
}

namespace {

struct Cell {
    std::uint32_t id;
    std::uint8_t label;
    PixelSet mask;
};

PixelSet erode_once(const PixelSet& mask) {
    PixelSet out;
    auto has = [&](Pixel p) { return std::binary_search(mask.begin(), mask.end(), p); };
    for (const auto& p : mask) {
        if (has({p.x + 1, p.y}) && has({p.x - 1, p.y}) && has({p.x, p.y + 1}) && has({p.x, p.y - 1}))
            out.push_back(p);
    }
    return out;
}

}  // namespace

LabeledScene perturb(const LabeledScene& scene, const PerturbConfig& cfg) {
    cfg.validate();
    const auto detections = extract_detections(scene, Source::semantic);
    CounterRng rng(cfg.seed);

    std::vector<Cell> cells;
    for (const auto& d : detections.detections) {
        const bool drop = rng.bernoulli(cfg.drop_rate);
        const auto label = static_cast<std::uint8_t>(draw_categorical(cfg.label_confusion[d.label.index()], rng) + 1);
        if (drop) continue;
        PixelSet mask = d.mask;
        if (cfg.mask_noise == MaskNoise::erode)
            for (int i = 0; i < cfg.magnitude && !mask.empty(); ++i) mask = erode_once(mask);
        if (mask.empty()) continue;
        cells.push_back({d.id, label, std::move(mask)});
    }

    LabeledScene out(scene.width, scene.height);
    for (const auto& c : cells) {
        for (const auto& p : c.mask) {
            out.instance_map.at(p.x, p.y) = c.id;
            out.class_map.at(p.x, p.y) = c.label;
        }
    }

    if (cfg.mask_noise == MaskNoise::dilate) {
        constexpr std::array<Pixel, 4> steps = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (int iter = 0; iter < cfg.magnitude; ++iter) {
            // Each round grows from the masks as they stood at the start of the round.
            std::vector<PixelSet> grown(cells.size());
            for (std::size_t k = 0; k < cells.size(); ++k) {
                for (const auto& p : cells[k].mask) {
                    for (const auto& s : steps) {
                        const Pixel q{p.x + s.x, p.y + s.y};
                        if (out.instance_map.contains(q.x, q.y) && out.instance_map.at(q.x, q.y) == 0)
                            grown[k].push_back(q);
                    }
                }
            }
            for (std::size_t k = 0; k < cells.size(); ++k) {
                for (const auto& q : grown[k]) {
                    if (out.instance_map.at(q.x, q.y) != 0) continue;
                    out.instance_map.at(q.x, q.y) = cells[k].id;
                    out.class_map.at(q.x, q.y) = cells[k].label;
                    cells[k].mask.push_back(q);
                }
                std::sort(cells[k].mask.begin(), cells[k].mask.end());
            }
        }
    }
    return out;
}

PerturbConfig semantic_like_perturbation(std::uint64_t seed) {
    PerturbConfig cfg;
    cfg.mask_noise = MaskNoise::erode;
    cfg.magnitude = 1;
    cfg.seed = seed;
    return cfg;
}

PerturbConfig instance_like_perturbation(std::uint64_t seed) {
    PerturbConfig cfg;
    cfg.seed = seed;
    ConfusionMatrix m{};
    constexpr std::array<std::size_t, 3> common = {1, 2, 5};  // epithelial, lymphocyte, connective
    constexpr std::array<std::size_t, 3> rare = {0, 3, 4};    // neutrophil, plasma, eosinophil
    for (auto r : rare) {
        m[r][r] = 0.5;
        for (auto c : common) m[r][c] = 0.5 / 3.0;
    }
    for (auto r : common) {
        m[r][r] = 0.9;
        for (auto c : common)
            if (c != r) m[r][c] = 0.05;
    }
    cfg.label_confusion = m;
    return cfg;
}

EnsembleScenario make_ensemble_scenario(const SynthConfig& cfg) {
    const auto base = generate_scene(cfg);
    EnsembleScenario s;
    s.image = base.image;
    s.ground_truth = base.scene;
    s.semantic = perturb(base.scene, semantic_like_perturbation(splitmix64_mix(cfg.seed ^ 0x5e3a)));
    s.instance = perturb(base.scene, instance_like_perturbation(splitmix64_mix(cfg.seed ^ 0x1257)));
    return s;
}

}  // namespace nucfuse::synth
