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

#include "nucfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "nucfuse/kernels.hpp"

namespace nucfuse::fusion {

double VotingWeights::weight(Source source, ClassId label) const {
    if (label.is_background()) throw ValidationError("cannot vote for background");
    switch (source) {
        case Source::semantic: return semantic[label.index()];
        case Source::instance: return instance[label.index()];
        case Source::fused: break;
    }
    throw ValidationError("fused detections do not carry a vote weight");
}

void VotingWeights::validate() const {
    for (std::size_t i = 0; i < semantic.size(); ++i) {
        if (!std::isfinite(semantic[i]) || semantic[i] <= 0.0 || !std::isfinite(instance[i]) || instance[i] <= 0.0)
            throw ValidationError("voting weights must be finite and positive (class " + std::to_string(i + 1) + ")");
    }
}

void FusionConfig::validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
        throw ValidationError("iou threshold must lie in (0, 1], got " + std::to_string(iou_threshold));
}

std::array<double, kNumClasses> vote_scores(std::span<const Vote> members, const VotingWeights& weights) {
    std::array<double, kNumClasses> scores{};
    for (const auto& m : members) scores[m.label.index()] += weights.weight(m.source, m.label);
    return scores;
}

ClassId vote_label(std::span<const Vote> members, const VotingWeights& weights, TieBreak tie_break) {
    if (members.empty()) throw ValidationError("vote over an empty group");
    const auto scores = vote_scores(members, weights);
    const double best = *std::max_element(scores.begin(), scores.end());

    std::array<bool, kNumClasses> tied{};
    std::array<bool, kNumClasses> held_by_semantic{};
    for (std::size_t c = 0; c < scores.size(); ++c) tied[c] = scores[c] == best;
    for (const auto& m : members)
        if (m.source == Source::semantic) held_by_semantic[m.label.index()] = true;

    switch (tie_break) {
        case TieBreak::prefer_semantic_then_lower_class:
            for (std::size_t c = 0; c < scores.size(); ++c)
                if (tied[c] && held_by_semantic[c]) return ClassId::from_index(c);
            break;
    }
    for (std::size_t c = 0; c < scores.size(); ++c)
        if (tied[c]) return ClassId::from_index(c);
    throw ValidationError("vote produced no winner");
}

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

void check_dims(const DetectionSet& a, const DetectionSet& b) {
    if (a.width != b.width || a.height != b.height) {
        throw ValidationError("detection sets differ in size: " + std::to_string(a.width) + "x" +
                              std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                              std::to_string(b.height));
    }
}

std::vector<BBox> boxes_of(const std::vector<Detection>& ds) {
    std::vector<BBox> out;
    out.reserve(ds.size());
    for (const auto& d : ds) out.push_back(d.bbox);
    return out;
}

std::vector<Detection> canonical_copy(const DetectionSet& set, Source source) {
    std::vector<Detection> out = set.detections;
    for (auto& d : out) {
        if (d.mask.empty()) throw ValidationError("detection " + std::to_string(d.id) + " has an empty mask");
        if (d.label.is_background()) throw ValidationError("detection " + std::to_string(d.id) + " has background label");
        std::sort(d.mask.begin(), d.mask.end());
        d.mask.erase(std::unique(d.mask.begin(), d.mask.end()), d.mask.end());
        d.bbox = tight_bbox(d.mask);
        d.source = source;
    }
    sort_canonical(out);
    return out;
}

bool group_less(const FusionGroup& a, const FusionGroup& b) {
    const Pixel fa = a.merged_mask.front();
    const Pixel fb = b.merged_mask.front();
    return std::tuple(a.merged_bbox.y0, a.merged_bbox.x0, fa.y, fa.x, a.members.front().id) <
           std::tuple(b.merged_bbox.y0, b.merged_bbox.x0, fb.y, fb.x, b.members.front().id);
}

}  // namespace

OverlapGroups build_overlap_groups(const DetectionSet& semantic, const DetectionSet& instance,
                                   const FusionConfig& cfg, const VotingWeights& weights) {
    check_dims(semantic, instance);
    cfg.validate();
    weights.validate();

    const auto sem = canonical_copy(semantic, Source::semantic);
    const auto inst = canonical_copy(instance, Source::instance);
    const auto sem_boxes = boxes_of(sem);
    const auto inst_boxes = boxes_of(inst);
    const auto iou = kernels::parallel::pairwise_bbox_iou(sem_boxes, inst_boxes);

    // Node i < sem.size() is semantic detection i; the rest are instance detections.
    DisjointSets sets(sem.size() + inst.size());
    std::vector<bool> linked(sem.size() + inst.size(), false);
    for (std::size_t i = 0; i < sem.size(); ++i) {
        for (std::size_t j = 0; j < inst.size(); ++j) {
            if (iou[i * inst.size() + j] >= cfg.iou_threshold) {
                sets.unite(i, sem.size() + j);
                linked[i] = linked[sem.size() + j] = true;
            }
        }
    }

    OverlapGroups out;
    std::vector<std::size_t> group_of_root(sem.size() + inst.size(), SIZE_MAX);
    auto node = [&](std::size_t k) -> const Detection& { return k < sem.size() ? sem[k] : inst[k - sem.size()]; };
    // Node order is semantic-canonical then instance-canonical, which is the member order we want.
    for (std::size_t k = 0; k < sem.size() + inst.size(); ++k) {
        if (!linked[k]) {
            out.unmatched.push_back(node(k));
            continue;
        }
        const std::size_t root = sets.find(k);
        if (group_of_root[root] == SIZE_MAX) {
            group_of_root[root] = out.groups.size();
            out.groups.emplace_back();
        }
        out.groups[group_of_root[root]].members.push_back(node(k));
    }

    std::vector<Vote> votes;
    for (auto& g : out.groups) {
        votes.clear();
        for (const auto& m : g.members) {
            g.merged_mask = set_union(g.merged_mask, m.mask);
            votes.push_back({m.label, m.source});
        }
        g.merged_bbox = tight_bbox(g.merged_mask);
        g.scores = vote_scores(votes, weights);
        g.winner = vote_label(votes, weights, cfg.tie_break);
    }
    std::sort(out.groups.begin(), out.groups.end(), group_less);
    sort_canonical(out.unmatched);
    return out;
}

LabeledScene fuse(const DetectionSet& semantic, const DetectionSet& instance, const VotingWeights& weights,
                  const FusionConfig& cfg) {
    auto overlap = build_overlap_groups(semantic, instance, cfg, weights);

    std::vector<Detection> outputs;
    outputs.reserve(overlap.groups.size() + overlap.unmatched.size());
    for (auto& g : overlap.groups) {
        Detection d;
        d.id = g.members.front().id;
        d.mask = std::move(g.merged_mask);
        d.bbox = g.merged_bbox;
        d.label = g.winner;
        d.source = Source::fused;
        outputs.push_back(std::move(d));
    }
    for (auto& d : overlap.unmatched) {
        const bool keep = d.source == Source::semantic ? cfg.keep_unmatched_semantic : cfg.keep_unmatched_instance;
        if (keep) outputs.push_back(std::move(d));
    }
    sort_canonical(outputs);

    LabeledScene scene(semantic.width, semantic.height);
    std::uint32_t next_id = 0;
    std::vector<Pixel> claimed;
    for (const auto& d : outputs) {
        claimed.clear();
        for (const auto& p : d.mask) {
            if (!scene.instance_map.contains(p.x, p.y)) throw ValidationError("detection pixel outside scene bounds");
            if (scene.instance_map.at(p.x, p.y) == 0) claimed.push_back(p);
        }
        if (claimed.empty()) continue;
        ++next_id;
        for (const auto& p : claimed) {
            scene.instance_map.at(p.x, p.y) = next_id;
            scene.class_map.at(p.x, p.y) = static_cast<std::uint8_t>(d.label.value());
        }
    }
    return scene;
}

}  // namespace nucfuse::fusion
