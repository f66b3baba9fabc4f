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

// End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per criterion
// and exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "nucfuse/augment.hpp"
#include "nucfuse/fusion.hpp"
#include "nucfuse/io.hpp"
#include "nucfuse/metrics.hpp"
#include "nucfuse/synth.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace {

using namespace nucfuse;
namespace fs = std::filesystem;

struct Outcome {
    bool ok = true;
    std::string detail;
};

class Check {
public:
    void expect(bool cond, const std::string& what) {
        if (!cond && out_.ok) {
            out_.ok = false;
            out_.detail = what;
        }
    }
    void note(const std::string& s) {
        if (out_.ok) out_.detail = s;
    }
    Outcome result() const { return out_; }

private:
    Outcome out_;
};

int failures = 0;

void run(int number, const std::string& name, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0 && secs > budget_s && o.ok) {
        o.ok = false;
        o.detail = "over time budget";
    }
    if (!o.ok) ++failures;
    std::printf("[%s] %d. %s (%.2fs)%s%s\n", o.ok ? "PASS" : "FAIL", number, name.c_str(), secs,
                o.detail.empty() ? "" : ": ", o.detail.c_str());
    std::fflush(stdout);
}

Outcome voting_fidelity() {
    Check c;
    const fusion::VotingWeights w;
    const oracle::WeightTable table;
    int agree = 0;
    for (int s = 1; s <= 6; ++s)
        for (int i = 1; i <= 6; ++i) {
            const std::vector<fusion::Vote> v{{ClassId(s), Source::semantic}, {ClassId(i), Source::instance}};
            const int got = fusion::vote_label(v, w).value();
            c.expect(got == oracle::weighted_vote({s, i}, {0, 1}, table),
                     "pair (" + std::to_string(s) + "," + std::to_string(i) + ") disagrees with table");
            if (s != i) c.expect(table.semantic[s - 1] != table.instance[i - 1], "tie in a two-member group");
            agree += got == oracle::weighted_vote({s, i}, {0, 1}, table);
        }
    const std::vector<fusion::Vote> worked{{ClassId(1), Source::semantic}, {ClassId(2), Source::instance}};
    c.expect(fusion::vote_label(worked, w) == ClassId(1), "neutrophil vs epithelial did not give neutrophil");
    c.note(std::to_string(agree) + "/36 pairs agree, worked case neutrophil");
    return c.result();
}

Outcome fusion_equivalence() {
    Check c;
    int identical = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto gt = testing::random_scene(seed * 7919 + 1, 50, 256).scene;
        const auto a = oracle::scramble_producer(gt, seed * 2 + 11);
        const auto b = oracle::scramble_producer(gt, seed * 2 + 12);
        const double threshold = std::array<double, 4>{0.5, 0.3, 0.7, 0.9}[seed % 4];
        const bool keep_sem = seed % 5 != 3;
        const bool keep_inst = seed % 7 != 5;
        fusion::FusionConfig cfg;
        cfg.iou_threshold = threshold;
        cfg.keep_unmatched_semantic = keep_sem;
        cfg.keep_unmatched_instance = keep_inst;
        const auto got = fusion::fuse(extract_detections(a, Source::semantic), extract_detections(b, Source::instance),
                                      {}, cfg);
        const bool same = got == oracle::reference_fuse(a, b, threshold, keep_sem, keep_inst);
        c.expect(same, "scene seed " + std::to_string(seed) + " differs from reference");
        identical += same;
    }
    c.note(std::to_string(identical) + "/100 scenes bit-identical");
    return c.result();
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9; }

bool same_optional(const std::optional<double>& a, const std::optional<double>& b) {
    return a.has_value() == b.has_value() && (!a || close(*a, *b));
}

Outcome metric_equivalence() {
    Check c;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::vector<LabeledScene> gt, pred;
        const auto n = 1 + seed % 4;
        for (std::uint64_t i = 0; i < n; ++i) {
            gt.push_back(testing::random_scene(seed * 31 + i + 5000, 50, 256).scene);
            if (seed % 3 == 0) {
                pred.push_back(synth::perturb(gt.back(), synth::instance_like_perturbation(seed + i)));
            } else {
                pred.push_back(oracle::scramble_producer(gt.back(), seed * 131 + i, 0.1 * (seed % 5)));
            }
        }
        const auto r = metrics::evaluate(gt, pred);
        const auto o = oracle::dataset_metrics(gt, pred);
        bool ok = close(r.pq, o.pq) && close(r.mpq_plus, o.mpq_plus) && same_optional(r.r2_mean, o.r2_mean);
        for (int k = 0; k < 6; ++k) ok = ok && same_optional(r.pq_plus[k], o.pq_plus[k]) && same_optional(r.r2[k], o.r2[k]);
        c.expect(ok, "dataset " + std::to_string(seed) + " disagrees with oracle");
    }

    using testing::rect;
    using testing::scene_from;
    auto dets = [](const LabeledScene& s) { return extract_detections(s, Source::semantic); };
    {
        const auto gt = scene_from(20, 10, {{1, 3, rect(0, 0, 5, 2)}, {2, 3, rect(10, 5, 15, 7)}});
        const auto pred = scene_from(20, 10, {{1, 3, rect(0, 0, 3, 2)}});
        c.expect(metrics::panoptic_quality(metrics::match_instances(dets(gt), dets(pred))) == 0.6 / 1.5,
                 "PQ fixture is not 0.4");
    }
    {
        const std::vector<LabeledScene> g{scene_from(20, 10, {{1, 1, rect(0, 0, 5, 2)}}),
                                          scene_from(20, 10, {{1, 1, rect(3, 3, 6, 6)}})};
        const std::vector<LabeledScene> p{scene_from(20, 10, {{1, 1, rect(0, 0, 4, 2)}}), LabeledScene(20, 10)};
        const auto r = metrics::multiclass_pq_plus(g, p);
        c.expect(r.pq_plus[0] == 0.8 / 1.5, "PQ+ aggregation fixture is not 0.8/1.5");
    }
    {
        const std::vector<metrics::CountVector> g{{3, 0, 0, 0, 0, 0}, {1, 0, 0, 0, 0, 0}, {2, 0, 0, 0, 0, 0}};
        const std::vector<metrics::CountVector> p{{3, 0, 0, 0, 0, 0}, {1, 0, 0, 0, 0, 0}, {3, 0, 0, 0, 0, 0}};
        c.expect(metrics::multiclass_r2(g, p).r2[0] == 0.5, "R2 fixture is not 0.5");
    }
    c.note("50 datasets within 1e-9, fixtures 0.4 / 0.5333 / 0.5 exact");
    return c.result();
}

Outcome cross_entropy_fidelity() {
    Check c;
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        CounterRng rng(seed + 77);
        const std::size_t m = 1 + rng.uniform_index(200), k = 2 + rng.uniform_index(9);
        std::vector<std::uint32_t> labels(m);
        std::vector<double> probs(m * k);
        for (std::size_t i = 0; i < m; ++i) {
            labels[i] = static_cast<std::uint32_t>(rng.uniform_index(k));
            double sum = 0;
            for (std::size_t j = 0; j < k; ++j) sum += probs[i * k + j] = rng.uniform(1e-3, 1.0);
            for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= sum;
        }
        double direct = 0;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < k; ++j) direct -= (labels[i] == j) * std::log(probs[i * k + j]);
        direct /= static_cast<double>(m * k);
        const double v = metrics::cross_entropy(metrics::OneHotLabelMap(k, labels), metrics::ProbabilityMap(m, k, probs));
        worst = std::max(worst, std::abs(v - direct));
    }
    c.expect(worst <= 1e-12, "direct summation mismatch");

    const std::size_t m7 = 33;
    std::vector<std::uint32_t> l7(m7);
    for (std::size_t i = 0; i < m7; ++i) l7[i] = static_cast<std::uint32_t>(i % 7);
    const double u = metrics::cross_entropy(metrics::OneHotLabelMap(7, l7),
                                            metrics::ProbabilityMap(m7, 7, std::vector<double>(m7 * 7, 1.0 / 7)));
    c.expect(std::abs(u - std::log(7.0) / 7.0) <= 1e-12, "uniform closed form mismatch");

    double worst_rel = 0;
    CounterRng rng(4242);
    for (int point = 0; point < 20; ++point) {
        const std::size_t m = 1 + rng.uniform_index(8), k = 2 + rng.uniform_index(6);
        std::vector<std::uint32_t> labels(m);
        std::vector<double> probs(m * k);
        for (std::size_t i = 0; i < m; ++i) {
            labels[i] = static_cast<std::uint32_t>(rng.uniform_index(k));
            double sum = 0;
            for (std::size_t j = 0; j < k; ++j) sum += probs[i * k + j] = rng.uniform(0.05, 1.0);
            for (std::size_t j = 0; j < k; ++j) probs[i * k + j] /= sum;
        }
        const std::size_t row = rng.uniform_index(m);
        const metrics::OneHotLabelMap y(k, labels);
        const auto grad = metrics::cross_entropy_gradient(y, metrics::ProbabilityMap(m, k, probs));
        const double p0 = probs[row * k + labels[row]];
        const double h = 1e-6 * p0;
        auto loss = [&](double v) {
            double s = 0;
            for (std::size_t i = 0; i < m; ++i) s += std::log(i == row ? v : probs[i * k + labels[i]]);
            return -s / static_cast<double>(m * k);
        };
        const double fd = (loss(p0 + h) - loss(p0 - h)) / (2 * h);
        const double g = grad[row * k + labels[row]];
        worst_rel = std::max(worst_rel, std::abs(fd - g) / std::abs(g));
    }
    c.expect(worst_rel <= 1e-6, "finite-difference gradient mismatch");
    std::ostringstream os;
    os << "max abs err " << worst << ", gradient max rel err " << worst_rel;
    c.note(os.str());
    return c.result();
}

Outcome ensemble_improves() {
    Check c;
    int wins = 0;
    double margin = 1e9;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        synth::SynthConfig cfg;
        cfg.seed = seed + 1000;
        const auto s = synth::make_ensemble_scenario(cfg);
        const auto fused = fusion::fuse(extract_detections(s.semantic, Source::semantic),
                                        extract_detections(s.instance, Source::instance));
        const std::vector<LabeledScene> gt{s.ground_truth}, sem{s.semantic}, inst{s.instance}, fu{fused};
        const double f = metrics::multiclass_pq_plus(gt, fu).mpq_plus;
        const double a = metrics::multiclass_pq_plus(gt, sem).mpq_plus;
        const double b = metrics::multiclass_pq_plus(gt, inst).mpq_plus;
        const bool win = f >= a && f >= b;
        c.expect(win, "seed " + std::to_string(seed) + " fused mPQ+ below a producer");
        wins += win;
        margin = std::min(margin, f - std::max(a, b));
    }
    std::ostringstream os;
    os << wins << "/20 seeds, smallest margin " << margin;
    c.note(os.str());
    return c.result();
}

/// Byte content of every regular file under `root`, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    if (!fs::exists(root)) return out;
    if (fs::is_regular_file(root)) {
        out["."] = testing::slurp(root);
        return out;
    }
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testing::slurp(e.path());
    return out;
}

Outcome determinism_and_round_trip() {
    Check c;
    const auto dir = testing::temp_dir("acceptance");
    auto q = [&](const std::string& rel) { return "'" + (dir / rel).string() + "'"; };

    // Shared inputs.
    c.expect(testing::run_cli("synth --output " + q("in") + " --count 4 --cells 30 --seed 21 --scenario").exit_code == 0,
             "synth for inputs failed");
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"synth", "synth --count 4 --cells 30 --seed 21 --scenario --output "},
        {"extract", "extract --input " + q("in/instance/scene_0001") + " --source instance --output "},
        {"fuse", "fuse --semantic " + q("in/semantic/scene_0002") + " --instance " + q("in/instance/scene_0002") + " --output "},
        {"eval", "eval --gt " + q("in/gt") + " --pred " + q("in/instance") + " --output "},
        {"counts", "counts --input " + q("in/semantic") + " --output "},
        {"augment", "augment --input " + q("in/gt") + " --seed 99 --output "},
        {"render", "render --input " + q("in/gt/scene_0003") + " --output "},
    };
    int deterministic = 0;
    for (const auto& [name, cmd] : commands) {
        std::map<std::string, std::string> first;
        bool same = true;
        for (const char* threads : {"1", "4"}) {
            const std::string out = name + "_t" + threads;
            const auto r = testing::run_cli(std::string("--threads ") + threads + " " + cmd + q(out));
            c.expect(r.exit_code == 0, name + " exited with " + std::to_string(r.exit_code) + ": " + r.err);
            const auto t = tree(dir / out);
            c.expect(!t.empty(), name + " produced no output");
            if (std::string(threads) == "1") {
                first = t;
            } else {
                same = t == first;
            }
        }
        // A second run at the same thread count must also match.
        const auto r = testing::run_cli("--threads 4 " + cmd + q(name + "_again"));
        same = same && r.exit_code == 0 && tree(dir / (name + "_again")) == first;
        c.expect(same, name + " output differs between runs");
        deterministic += same;
    }

    int round_trips = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto s = testing::random_scene(seed + 9000, 50, 256);
        const auto pkg = dir / "rt" / std::to_string(seed);
        io::write_scene(pkg, s.scene, &s.image);
        const auto back = io::read_scene(pkg);
        const bool ok = back.scene == s.scene && back.image && *back.image == s.image;
        c.expect(ok, "round trip " + std::to_string(seed) + " differs");
        round_trips += ok;
    }
    fs::remove_all(dir);
    c.note(std::to_string(deterministic) + "/" + std::to_string(commands.size()) +
           " subcommands byte-identical at 1 and 4 threads, " + std::to_string(round_trips) + "/100 round trips");
    return c.result();
}

Outcome augmentation_contract() {
    Check c;
    CounterRng rng(31337);
    int runs = 0;
    for (int trial = 0; trial < 12; ++trial) {
        const int w = trial == 0 ? 1 : static_cast<int>(rng.uniform_int(1, 400));
        const int h = trial == 0 ? 1 : static_cast<int>(rng.uniform_int(1, 400));
        synth::SynthConfig sc;
        sc.width = w;
        sc.height = h;
        sc.n_cells = w >= 40 && h >= 40 ? 8 : 0;
        sc.radius_min = 3;
        sc.radius_max = 6;
        sc.seed = rng.next_u64();
        auto s = synth::generate_scene(sc);
        if (w * h == 1) {
            s.scene.instance_map.data[0] = 1;
            s.scene.class_map.data[0] = 5;
        }
        augment::AugmentConfig cfg;
        cfg.seed = rng.next_u64();
        const auto a = augment::augment(s.image, s.scene, cfg);
        const auto b = augment::augment(s.image, s.scene, cfg);
        c.expect(a.image.width == 512 && a.image.height == 512 && a.scene.width == 512 && a.scene.height == 512 &&
                     a.scene.instance_map.width == 512 && a.scene.class_map.height == 512,
                 "output is not 512x512 for input " + std::to_string(w) + "x" + std::to_string(h));
        std::set<std::uint32_t> ids(s.scene.instance_map.data.begin(), s.scene.instance_map.data.end());
        std::set<std::uint8_t> classes(s.scene.class_map.data.begin(), s.scene.class_map.data.end());
        ids.insert(0);
        classes.insert(0);
        for (auto v : a.scene.instance_map.data) c.expect(ids.count(v) > 0, "new instance value appeared");
        for (auto v : a.scene.class_map.data) c.expect(classes.count(v) > 0, "new class value appeared");
        validate_scene(a.scene);
        c.expect(a.image == b.image && a.scene == b.scene, "same seed gave different output");
        ++runs;
    }
    c.note(std::to_string(runs) + " inputs from 1x1 to 400x400");
    return c.result();
}

}  // namespace

int main() {
    run(1, "voting fidelity over 36 label pairs", 1.0, voting_fidelity);
    run(2, "fusion equals brute-force reference on 100 scenes", 30.0, fusion_equivalence);
    run(3, "PQ / PQ+ / mPQ+ / R2 match direct recomputation", 0, metric_equivalence);
    run(4, "cross entropy value, closed form and gradient", 0, cross_entropy_fidelity);
    run(5, "fused mPQ+ >= both producers on the constructed scenario", 0, ensemble_improves);
    run(6, "CLI determinism across thread counts and package round trips", 0, determinism_and_round_trip);
    run(7, "augmentation output size, label values and reproducibility", 0, augmentation_contract);
    std::printf("%d of 7 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
