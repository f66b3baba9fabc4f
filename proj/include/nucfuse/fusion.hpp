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

// Overlap-merging NMS ensemble of a semantic and an instance producer.
//
// Cross-producer detections whose boxes overlap at or above the IoU threshold
// are linked; each connected component of those links becomes one nucleus
// whose mask is the union of its members and whose label is decided by a
// per-producer, per-class weighted vote. Detections that link to nothing pass
// through unchanged unless the configuration drops their producer.

#pragma once

#include <array>
#include <span>
#include <vector>

#include "nucfuse/core.hpp"

namespace nucfuse::fusion {

/// Per-class vote weights for each producer, indexed by ClassId::index().
struct VotingWeights {
    std::array<double, kNumClasses> semantic{2.0, 1.0, 1.0, 2.0, 2.0, 1.0};
    std::array<double, kNumClasses> instance{1.5, 1.5, 1.5, 1.5, 1.5, 1.5};

    double weight(Source source, ClassId label) const;
    /// Throws ValidationError unless every weight is finite and positive.
    void validate() const;
};

enum class TieBreak {
    /// Among tied labels prefer one held by a semantic member, then the lowest class id.
    prefer_semantic_then_lower_class,
};

struct FusionConfig {
    double iou_threshold = 0.5;
    bool keep_unmatched_semantic = true;
    bool keep_unmatched_instance = true;
    TieBreak tie_break = TieBreak::prefer_semantic_then_lower_class;

    void validate() const;
};

struct FusionGroup {
    std::vector<Detection> members;  // semantic first, then instance; canonical within each
    PixelSet merged_mask;
    BBox merged_bbox;
    std::array<double, kNumClasses> scores{};
    ClassId winner;
};

struct OverlapGroups {
    std::vector<FusionGroup> groups;
    std::vector<Detection> unmatched;  // canonical order
};

struct Vote {
    ClassId label;
    Source source;
};

ClassId vote_label(std::span<const Vote> members, const VotingWeights& weights,
                   TieBreak tie_break = TieBreak::prefer_semantic_then_lower_class);

/// Summed weight per class for a set of votes.
std::array<double, kNumClasses> vote_scores(std::span<const Vote> members, const VotingWeights& weights);

/// Links every (semantic, instance) pair with bbox IoU >= threshold and returns
/// the connected components with at least two members, scored and voted with
/// `weights`. Groups are ordered by (merged_bbox.y0, merged_bbox.x0, first pixel).
OverlapGroups build_overlap_groups(const DetectionSet& semantic, const DetectionSet& instance,
                                   const FusionConfig& cfg, const VotingWeights& weights = {});

/// Full ensemble: groups become one instance each, kept singletons pass
/// through, ids are renumbered 1..N in canonical order and a pixel claimed by
/// several outputs goes to the earliest one.
LabeledScene fuse(const DetectionSet& semantic, const DetectionSet& instance, const VotingWeights& weights = {},
                  const FusionConfig& cfg = {});

}  // namespace nucfuse::fusion
