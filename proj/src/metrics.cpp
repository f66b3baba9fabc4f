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

#include "nucfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <tuple>

namespace nucfuse::metrics {

ProbabilityMap::ProbabilityMap(std::size_t pixels, std::size_t categories, std::vector<double> values)
    : pixels_(pixels), categories_(categories), values_(std::move(values)) {
    if (categories_ == 0) throw ValidationError("probability map needs at least one category");
    if (values_.size() != pixels_ * categories_)
        throw ValidationError("probability map holds " + std::to_string(values_.size()) + " values, expected " +
                              std::to_string(pixels_ * categories_));
    for (std::size_t m = 0; m < pixels_; ++m) {
        double sum = 0.0;
        for (std::size_t k = 0; k < categories_; ++k) {
            const double v = at(m, k);
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError("probability out of [0,1] at pixel " + std::to_string(m));
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw ValidationError("probabilities at pixel " + std::to_string(m) + " sum to " + std::to_string(sum));
    }
}

OneHotLabelMap::OneHotLabelMap(std::size_t categories, std::vector<std::uint32_t> labels)
    : categories_(categories), labels_(std::move(labels)) {
    for (std::size_t m = 0; m < labels_.size(); ++m)
        if (labels_[m] >= categories_)
            throw ValidationError("label " + std::to_string(labels_[m]) + " at pixel " + std::to_string(m) +
                                  " exceeds category count " + std::to_string(categories_));
}

namespace {

void check_shapes(const OneHotLabelMap& y, const ProbabilityMap& p) {
    if (y.pixels() != p.pixels() || y.categories() != p.categories())
        throw ValidationError("shape mismatch: labels " + std::to_string(y.pixels()) + "x" +
                              std::to_string(y.categories()) + ", probabilities " + std::to_string(p.pixels()) +
                              "x" + std::to_string(p.categories()));
    if (y.pixels() == 0) throw ValidationError("cross entropy over zero pixels");
}

}  // namespace

double cross_entropy(const OneHotLabelMap& y, const ProbabilityMap& p) {
    check_shapes(y, p);
    double sum = 0.0;
    for (std::size_t m = 0; m < y.pixels(); ++m) sum += std::log(std::max(p.at(m, y.label(m)), kProbabilityFloor));
    return -sum / static_cast<double>(y.pixels() * y.categories());
}

std::vector<double> cross_entropy_gradient(const OneHotLabelMap& y, const ProbabilityMap& p) {
    check_shapes(y, p);
    const double scale = static_cast<double>(y.pixels() * y.categories());
    std::vector<double> grad(y.pixels() * y.categories(), 0.0);
    for (std::size_t m = 0; m < y.pixels(); ++m) {
        const double v = p.at(m, y.label(m));
        if (v > kProbabilityFloor) grad[m * y.categories() + y.label(m)] = -1.0 / (scale * v);
    }
    return grad;
}

MatchResult match_instances(const DetectionSet& gt, const DetectionSet& pred) {
    if (gt.width != pred.width || gt.height != pred.height)
        throw ValidationError("cannot match scenes of different size");

    std::vector<Detection> g = gt.detections;
    std::vector<Detection> p = pred.detections;
    sort_canonical(g);
    sort_canonical(p);

    struct Candidate {
        double iou;
        std::size_t gi;
        std::size_t pi;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (bbox_iou(g[i].bbox, p[j].bbox) == 0.0) continue;
            const double iou = mask_iou(g[i].mask, p[j].mask);
            if (iou > 0.5) candidates.push_back({iou, i, j});
        }
    }
    // Disjoint masks admit at most one partner above 0.5; the ordering only
    // matters for malformed, overlapping inputs.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(b.iou, a.gi, a.pi) < std::tie(a.iou, b.gi, b.pi);
    });

    std::vector<std::size_t> gt_partner(g.size(), SIZE_MAX);
    std::vector<bool> pred_taken(p.size(), false);
    std::vector<double> gt_iou(g.size(), 0.0);
    for (const auto& c : candidates) {
        if (gt_partner[c.gi] != SIZE_MAX || pred_taken[c.pi]) continue;
        gt_partner[c.gi] = c.pi;
        gt_iou[c.gi] = c.iou;
        pred_taken[c.pi] = true;
    }

    MatchResult out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (gt_partner[i] == SIZE_MAX) {
            out.unmatched_gt.push_back(g[i].id);
        } else {
            out.pairs.push_back({g[i].id, p[gt_partner[i]].id, gt_iou[i]});
        }
    }
    for (std::size_t j = 0; j < p.size(); ++j)
        if (!pred_taken[j]) out.unmatched_pred.push_back(p[j].id);
    return out;
}

double PqStats::quality() const {
    if (empty()) return 1.0;
    return iou_sum / (static_cast<double>(tp) + 0.5 * static_cast<double>(fp) + 0.5 * static_cast<double>(fn));
}

PqStats pq_stats(const MatchResult& m) {
    PqStats s;
    for (const auto& pair : m.pairs) s.iou_sum += pair.iou;
    s.tp = static_cast<std::int64_t>(m.pairs.size());
    s.fp = static_cast<std::int64_t>(m.unmatched_pred.size());
    s.fn = static_cast<std::int64_t>(m.unmatched_gt.size());
    return s;
}

double panoptic_quality(const MatchResult& m) { return pq_stats(m).quality(); }

CountVector count_cells(const LabeledScene& scene) {
    CountVector counts{};
    for (const auto& d : extract_detections(scene, Source::semantic).detections) ++counts[d.label.index()];
    return counts;
}

namespace {

struct SceneEval {
    PqStats binary;
    std::array<PqStats, kNumClasses> per_class;
    CountVector gt_counts{};
    CountVector pred_counts{};
};

DetectionSet only_class(const DetectionSet& set, std::size_t class_index) {
    DetectionSet out{set.width, set.height, {}};
    for (const auto& d : set.detections)
        if (d.label.index() == class_index) out.detections.push_back(d);
    return out;
}

SceneEval evaluate_scene(const LabeledScene& gt, const LabeledScene& pred) {
    if (gt.width != pred.width || gt.height != pred.height)
        throw ValidationError("scene size mismatch: gt " + std::to_string(gt.width) + "x" + std::to_string(gt.height) +
                              ", pred " + std::to_string(pred.width) + "x" + std::to_string(pred.height));
    const auto g = extract_detections(gt, Source::semantic);
    const auto p = extract_detections(pred, Source::instance);

    SceneEval e;
    e.binary = pq_stats(match_instances(g, p));
    for (std::size_t c = 0; c < kNumClasses; ++c)
        e.per_class[c] = pq_stats(match_instances(only_class(g, c), only_class(p, c)));
    for (const auto& d : g.detections) ++e.gt_counts[d.label.index()];
    for (const auto& d : p.detections) ++e.pred_counts[d.label.index()];
    return e;
}

std::vector<SceneEval> evaluate_scenes(std::span<const LabeledScene> gt, std::span<const LabeledScene> pred,
                                       kernels::Execution exec) {
    if (gt.size() != pred.size())
        throw ValidationError("dataset size mismatch: " + std::to_string(gt.size()) + " gt scenes, " +
                              std::to_string(pred.size()) + " predicted scenes");
    std::vector<SceneEval> out(gt.size());
    std::vector<std::exception_ptr> errors(gt.size());
    const auto n = static_cast<long long>(gt.size());
#pragma omp parallel for schedule(dynamic) if (exec == kernels::Execution::parallel)
    for (long long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = evaluate_scene(gt[k], pred[k]);
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

PqPlusResult reduce_pq_plus(const std::vector<SceneEval>& scenes) {
    PqPlusResult r;
    for (const auto& s : scenes)
        for (std::size_t c = 0; c < kNumClasses; ++c) r.stats[c] += s.per_class[c];
    double sum = 0.0;
    int defined = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (r.stats[c].empty()) continue;
        r.pq_plus[c] = r.stats[c].quality();
        sum += *r.pq_plus[c];
        ++defined;
    }
    r.mpq_plus = defined > 0 ? sum / defined : 1.0;
    return r;
}

}  // namespace

PqPlusResult multiclass_pq_plus(std::span<const LabeledScene> gt, std::span<const LabeledScene> pred,
                                kernels::Execution exec) {
    return reduce_pq_plus(evaluate_scenes(gt, pred, exec));
}

R2Result multiclass_r2(std::span<const CountVector> gt_counts, std::span<const CountVector> pred_counts) {
    if (gt_counts.size() != pred_counts.size())
        throw ValidationError("count list length mismatch: " + std::to_string(gt_counts.size()) + " vs " +
                              std::to_string(pred_counts.size()));
    if (gt_counts.empty()) throw ValidationError("R2 over an empty dataset");

    // n * SS_tot = n * sum(g^2) - (sum g)^2 keeps the variance term in exact integers.
    const auto n = static_cast<std::int64_t>(gt_counts.size());
    R2Result r;
    double sum = 0.0;
    int defined = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::int64_t sum_g = 0;
        std::int64_t sum_g2 = 0;
        std::int64_t ss_res = 0;
        for (std::size_t i = 0; i < gt_counts.size(); ++i) {
            const std::int64_t g = gt_counts[i][c];
            const std::int64_t d = g - pred_counts[i][c];
            sum_g += g;
            sum_g2 += g * g;
            ss_res += d * d;
        }
        const std::int64_t n_ss_tot = n * sum_g2 - sum_g * sum_g;
        if (n_ss_tot > 0) {
            r.r2[c] = 1.0 - static_cast<double>(n * ss_res) / static_cast<double>(n_ss_tot);
        } else if (ss_res == 0) {
            r.r2[c] = 1.0;
        } else {
            continue;
        }
        sum += *r.r2[c];
        ++defined;
    }
    if (defined > 0) r.mean = sum / defined;
    return r;
}

MetricsReport evaluate(std::span<const LabeledScene> gt, std::span<const LabeledScene> pred, kernels::Execution exec) {
    if (gt.empty()) throw ValidationError("evaluation over an empty dataset");
    const auto scenes = evaluate_scenes(gt, pred, exec);

    MetricsReport report;
    double pq_sum = 0.0;
    for (const auto& s : scenes) {
        pq_sum += s.binary.quality();
        report.gt_counts.push_back(s.gt_counts);
        report.pred_counts.push_back(s.pred_counts);
    }
    report.pq = pq_sum / static_cast<double>(scenes.size());

    const auto plus = reduce_pq_plus(scenes);
    report.pq_plus = plus.pq_plus;
    report.mpq_plus = plus.mpq_plus;

    const auto r2 = multiclass_r2(report.gt_counts, report.pred_counts);
    report.r2 = r2.r2;
    report.r2_mean = r2.mean;
    return report;
}

}  // namespace nucfuse::metrics
