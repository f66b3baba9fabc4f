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

// Synthetic nuclei scenes and producer emulators for desk-scale testing.

#pragma once

#include <array>
#include <cstdint>

#include "nucfuse/core.hpp"

namespace nucfuse::synth {

struct SynthConfig {
    int width = 256;
    int height = 256;
    int n_cells = 30;
    double radius_min = 4.0;
    double radius_max = 9.0;
    std::array<double, kNumClasses> class_frequencies{0.02, 0.40, 0.25, 0.08, 0.02, 0.23};
    std::uint64_t seed = 0;
    int max_attempts_per_cell = 500;

    void validate() const;
};

/// Axis-aligned elliptical nuclei separated by at least one background pixel
/// (8-neighbourhood), ids 1..n_cells in placement order, over a noisy stain
/// background. Throws ValidationError if a cell cannot be placed.
struct SynthScene {
    RgbImage image;
    LabeledScene scene;
};

SynthScene generate_scene(const SynthConfig& cfg);

enum class MaskNoise { none, erode, dilate };

using ConfusionMatrix = std::array<std::array<double, kNumClasses>, kNumClasses>;

ConfusionMatrix identity_confusion();

struct PerturbConfig {
    MaskNoise mask_noise = MaskNoise::none;
    int magnitude = 1;
    ConfusionMatrix label_confusion = identity_confusion();
    double drop_rate = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per cell, in canonical order: drop with drop_rate, resample the label from
/// the confusion row, then erode (4-neighbourhood, cells that vanish are
/// dropped) or dilate into background (earlier canonical cells claim first).
/// Instance ids are preserved.
LabeledScene perturb(const LabeledScene& scene, const PerturbConfig& cfg);

/// Producer emulators for the ensemble scenario. The semantic one keeps labels
/// but erodes masks by one pixel; the instance one keeps masks but confuses
/// the rare classes (neutrophil, plasma, eosinophil) half the time and the
/// common ones a little, always towards another common class.
PerturbConfig semantic_like_perturbation(std::uint64_t seed);
PerturbConfig instance_like_perturbation(std::uint64_t seed);

struct EnsembleScenario {
    RgbImage image;
    LabeledScene ground_truth;
    LabeledScene semantic;
    LabeledScene instance;
};

EnsembleScenario make_ensemble_scenario(const SynthConfig& cfg);

}  // namespace nucfuse::synth
