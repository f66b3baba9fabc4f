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

// Serial reference kernels against their OpenMP counterparts.
// Thread count comes from OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "nucfuse/kernels.hpp"
#include "nucfuse/metrics.hpp"
#include "nucfuse/synth.hpp"

namespace {

using namespace nucfuse;
using kernels::Execution;

synth::SynthScene scene(int side, int cells, std::uint64_t seed) {
    synth::SynthConfig cfg;
    cfg.width = side;
    cfg.height = side;
    cfg.n_cells = cells;
    cfg.seed = seed;
    return synth::generate_scene(cfg);
}

template <Execution E>
void BM_BboxIou(benchmark::State& state) {
    const auto s = scene(1024, static_cast<int>(state.range(0)), 1);
    std::vector<BBox> boxes;
    for (const auto& d : extract_detections(s.scene, Source::semantic).detections) boxes.push_back(d.bbox);
    for (auto _ : state) {
        auto m = E == Execution::serial ? kernels::serial::pairwise_bbox_iou(boxes, boxes)
                                        : kernels::parallel::pairwise_bbox_iou(boxes, boxes);
        benchmark::DoNotOptimize(m.data());
    }
}

template <Execution E>
void BM_Bilinear(benchmark::State& state) {
    const auto s = scene(256, 40, 2);
    const kernels::ResampleGeometry g{512, 512, 563, 563, 20, 30};
    for (auto _ : state) {
        auto out = E == Execution::serial ? kernels::serial::resample_bilinear(s.image, g)
                                          : kernels::parallel::resample_bilinear(s.image, g);
        benchmark::DoNotOptimize(out.pixels.data());
    }
}

template <Execution E>
void BM_GaussianBlur(benchmark::State& state) {
    const auto s = scene(512, 80, 3);
    for (auto _ : state) {
        auto out = E == Execution::serial ? kernels::serial::gaussian_blur(s.image, 5, 1.1)
                                          : kernels::parallel::gaussian_blur(s.image, 5, 1.1);
        benchmark::DoNotOptimize(out.pixels.data());
    }
}

template <Execution E>
void BM_MedianBlur(benchmark::State& state) {
    const auto s = scene(512, 80, 4);
    for (auto _ : state) {
        auto out = E == Execution::serial ? kernels::serial::median_blur(s.image, 5)
                                          : kernels::parallel::median_blur(s.image, 5);
        benchmark::DoNotOptimize(out.pixels.data());
    }
}

template <Execution E>
void BM_Noise(benchmark::State& state) {
    const auto s = scene(512, 80, 5);
    for (auto _ : state) {
        auto out = E == Execution::serial ? kernels::serial::add_gaussian_noise(s.image, 6.0, 9)
                                          : kernels::parallel::add_gaussian_noise(s.image, 6.0, 9);
        benchmark::DoNotOptimize(out.pixels.data());
    }
}

template <Execution E>
void BM_Evaluate(benchmark::State& state) {
    std::vector<LabeledScene> gt, pred;
    for (std::uint64_t i = 0; i < 8; ++i) {
        gt.push_back(scene(256, 50, 100 + i).scene);
        pred.push_back(synth::perturb(gt.back(), synth::instance_like_perturbation(i)));
    }
    for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate(gt, pred, E).pq);
}

BENCHMARK(BM_BboxIou<Execution::serial>)->Arg(200)->Arg(800);
BENCHMARK(BM_BboxIou<Execution::parallel>)->Arg(200)->Arg(800);
BENCHMARK(BM_Bilinear<Execution::serial>);
BENCHMARK(BM_Bilinear<Execution::parallel>);
BENCHMARK(BM_GaussianBlur<Execution::serial>);
BENCHMARK(BM_GaussianBlur<Execution::parallel>);
BENCHMARK(BM_MedianBlur<Execution::serial>);
BENCHMARK(BM_MedianBlur<Execution::parallel>);
BENCHMARK(BM_Noise<Execution::serial>);
BENCHMARK(BM_Noise<Execution::parallel>);
BENCHMARK(BM_Evaluate<Execution::serial>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate<Execution::parallel>)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
