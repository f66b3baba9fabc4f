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
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nucfuse/core.hpp"
#include "nucfuse/kernels.hpp"

namespace nucfuse::metrics {

/// Per-pixel class probabilities, M rows of K values.
class ProbabilityMap {
public:
    /// Validates that each row lies in [0,1] and sums to 1 within 1e-6.
    ProbabilityMap(std::size_t pixels, std::size_t categories, std::vector<double> values);

    std::size_t pixels() const { return pixels_; }
    std::size_t categories() const { return categories_; }
    double at(std::size_t m, std::size_t k) const { return values_[m * categories_ + k]; }
    std::span<const double> values() const { return values_; }

private:
    std::size_t pixels_;
    std::size_t categories_;
    std::vector<double> values_;
};

/// One-hot ground truth stored as the index of the hot category per pixel.
class OneHotLabelMap {
public:
    OneHotLabelMap(std::size_t categories, std::vector<std::uint32_t> labels);

    std::size_t pixels() const { return labels_.size(); }
    std::size_t categories() const { return categories_; }
    std::uint32_t label(std::size_t m) const { return labels_[m]; }
    double at(std::size_t m, std::size_t k) const { return labels_[m] == k ? 1.0 : 0.0; }

private:
    std::size_t categories_;
    std::vector<std::uint32_t> labels_;
};

/// Probabilities are floored here before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

/// Mean element-wise cross entropy over all pixels and all categories.
double cross_entropy(const OneHotLabelMap& y, const ProbabilityMap& p);

/// d(cross_entropy)/d(p[m][k]) for every entry; nonzero only on true classes.
std::vector<double> cross_entropy_gradient(const OneHotLabelMap& y, const ProbabilityMap& p);

struct MatchedPair {
    std::uint32_t gt_id = 0;
    std::uint32_t pred_id = 0;
    double iou = 0.0;
};

struct MatchResult {
    std::vector<MatchedPair> pairs;  // in canonical ground-truth order
    std::vector<std::uint32_t> unmatched_gt;
    std::vector<std::uint32_t> unmatched_pred;
};

/// Pairs ground truth and prediction instances whose mask IoU exceeds 0.5.
MatchResult match_instances(const DetectionSet& gt, const DetectionSet& pred);

/// Sufficient statistics for panoptic quality.
struct PqStats {
    double iou_sum = 0.0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    PqStats& operator+=(const PqStats& o) {
        iou_sum += o.iou_sum;
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool empty() const { return tp == 0 && fp == 0 && fn == 0; }
    /// iou_sum / (tp + fp/2 + fn/2); 1.0 when there is nothing to compare.
    double quality() const;
};

PqStats pq_stats(const MatchResult& m);
double panoptic_quality(const MatchResult& m);

using ClassVector = std::array<std::optional<double>, kNumClasses>;
using CountVector = std::array<std::int64_t, kNumClasses>;

struct PqPlusResult {
    ClassVector pq_plus;
    double mpq_plus = 1.0;
    std::array<PqStats, kNumClasses> stats;
};

/// Per-class PQ with TP/FP/FN/IoU statistics summed across the whole dataset
/// before dividing. mPQ+ averages the classes seen in gt or pred anywhere.
PqPlusResult multiclass_pq_plus(std::span<const LabeledScene> gt, std::span<const LabeledScene> pred,
                                kernels::Execution exec = kernels::Execution::parallel);

/// Instances per class, labelled by majority class.
CountVector count_cells(const LabeledScene& scene);

struct R2Result {
    ClassVector r2;
    std::optional<double> mean;
};

/// Per-class coefficient of determination across scenes. A class whose gt
/// counts never vary scores 1 when every residual is zero and is left
/// undefined otherwise; the mean covers defined classes.
R2Result multiclass_r2(std::span<const CountVector> gt_counts, std::span<const CountVector> pred_counts);

struct MetricsReport {
    double pq = 1.0;  // class-agnostic PQ, averaged over scenes
    ClassVector pq_plus;
    double mpq_plus = 1.0;
    ClassVector r2;
    std::optional<double> r2_mean;
    std::vector<CountVector> gt_counts;
    std::vector<CountVector> pred_counts;
};

/// Per-scene work (extraction, matching, counting) runs in parallel; the
/// reduction is always performed in scene order.
MetricsReport evaluate(std::span<const LabeledScene> gt, std::span<const LabeledScene> pred,
                       kernels::Execution exec = kernels::Execution::parallel);

}  // namespace nucfuse::metrics
