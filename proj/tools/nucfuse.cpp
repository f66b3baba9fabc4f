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

// nucfuse: extract / fuse / eval / counts / augment / synth / render.
//
// Exit codes: 0 success, 1 internal error, 2 input or validation error.

#include <algorithm>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nucfuse/augment.hpp"
#include "nucfuse/core.hpp"
#include "nucfuse/fusion.hpp"
#include "nucfuse/io.hpp"
#include "nucfuse/kernels.hpp"
#include "nucfuse/metrics.hpp"
#include "nucfuse/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace nucfuse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct Options {
    int threads = 0;
    bool json_errors = false;
    std::string config;

    // extract
    std::string extract_input;
    std::string extract_source;
    std::string extract_output;

    // fuse
    std::string fuse_semantic;
    std::string fuse_instance;
    double iou_threshold = 0.5;
    std::string weights;
    bool drop_unmatched_semantic = false;
    bool drop_unmatched_instance = false;
    std::string fuse_output;

    // eval
    std::string eval_gt;
    std::string eval_pred;
    std::string eval_output;
    std::string eval_counts_csv;

    // counts
    std::string counts_input;
    std::string counts_output;

    // augment
    std::string augment_input;
    std::string augment_output;
    std::uint64_t augment_seed = 0;
    int target_size = 512;
    double scale_low = 0.8;
    double scale_high = 1.2;
    bool no_hflip = false;
    bool no_vflip = false;
    std::vector<std::string> noise_ops{"gaussian-blur", "median-blur", "additive-gaussian-noise"};
    std::vector<int> blur_sizes{3, 5};
    double noise_sigma_high = 0.05 * 255.0;

    // synth
    std::string synth_output;
    int synth_count = 1;
    int synth_width = 256;
    int synth_height = 256;
    int synth_cells = 30;
    double radius_min = 4.0;
    double radius_max = 9.0;
    std::uint64_t synth_seed = 0;
    bool scenario = false;

    // render
    std::string render_input;
    std::string render_output;
};

std::unique_ptr<CLI::App> make_app(Options& o) {
    auto app = std::make_unique<CLI::App>("Nuclei segmentation ensemble and evaluation toolkit", "nucfuse");
    app->fallthrough();
    app->require_subcommand(1);
    app->add_option("--threads", o.threads, "Worker threads for parallel kernels (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
    app->add_flag("--json-errors", o.json_errors, "Print errors on stderr as JSON lines");
    app->add_option("--config", o.config, "JSON object of option values; command-line flags take precedence");

    auto* extract = app->add_subcommand("extract", "List the detections of a scene package as JSON");
    extract->add_option("--input", o.extract_input, "Scene package directory")->required();
    extract->add_option("--source", o.extract_source, "Producer tag")
        ->required()
        ->check(CLI::IsMember({"semantic", "instance"}));
    extract->add_option("--output", o.extract_output, "Detections JSON file")->required();

    auto* fuse = app->add_subcommand("fuse", "Merge a semantic and an instance prediction");
    fuse->add_option("--semantic", o.fuse_semantic, "Semantic producer package")->required();
    fuse->add_option("--instance", o.fuse_instance, "Instance producer package")->required();
    fuse->add_option("--iou-threshold", o.iou_threshold, "Box IoU needed to link two detections")
        ->capture_default_str();
    fuse->add_option("--weights", o.weights, "JSON file {\"semantic\": [6], \"instance\": [6]}");
    fuse->add_flag("--drop-unmatched-semantic", o.drop_unmatched_semantic,
                   "Discard semantic detections that overlap nothing");
    fuse->add_flag("--drop-unmatched-instance", o.drop_unmatched_instance,
                   "Discard instance detections that overlap nothing");
    fuse->add_option("--output", o.fuse_output, "Output package directory")->required();

    auto* eval = app->add_subcommand("eval", "Score predictions against ground truth");
    eval->add_option("--gt", o.eval_gt, "Directory of ground-truth packages")->required();
    eval->add_option("--pred", o.eval_pred, "Directory of predicted packages (paired by name)")->required();
    eval->add_option("--output", o.eval_output, "Report JSON file")->required();
    eval->add_option("--counts-csv", o.eval_counts_csv, "Optional per-scene predicted counts CSV");

    auto* counts = app->add_subcommand("counts", "Per-class nucleus counts as CSV");
    counts->add_option("--input", o.counts_input, "Package or directory of packages")->required();
    counts->add_option("--output", o.counts_output, "CSV file")->required();

    auto* augment = app->add_subcommand("augment", "Seeded enlarge / scale-crop / flip / noise augmentation");
    augment->add_option("--input", o.augment_input, "Package or directory of packages")->required();
    augment->add_option("--output", o.augment_output, "Output directory")->required();
    augment->add_option("--seed", o.augment_seed, "Base seed; image i uses seed XOR i")->capture_default_str();
    augment->add_option("--target-size", o.target_size)->capture_default_str()->check(CLI::PositiveNumber);
    augment->add_option("--scale-low", o.scale_low)->capture_default_str();
    augment->add_option("--scale-high", o.scale_high)->capture_default_str();
    augment->add_flag("--no-hflip", o.no_hflip);
    augment->add_flag("--no-vflip", o.no_vflip);
    augment->add_option("--noise-ops", o.noise_ops, "Subset of gaussian-blur, median-blur, additive-gaussian-noise")
        ->capture_default_str()
        ->check(CLI::IsMember({"gaussian-blur", "median-blur", "additive-gaussian-noise", "none"}));
    augment->add_option("--blur-sizes", o.blur_sizes)->capture_default_str();
    augment->add_option("--noise-sigma-max", o.noise_sigma_high)->capture_default_str();

    auto* synth = app->add_subcommand("synth", "Generate synthetic ground truth (and producer emulations)");
    synth->add_option("--output", o.synth_output, "Output directory")->required();
    synth->add_option("--count", o.synth_count, "Number of scenes")->capture_default_str()->check(CLI::NonNegativeNumber);
    synth->add_option("--width", o.synth_width)->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--height", o.synth_height)->capture_default_str()->check(CLI::PositiveNumber);
    synth->add_option("--cells", o.synth_cells, "Nuclei per scene")->capture_default_str()->check(CLI::NonNegativeNumber);
    synth->add_option("--radius-min", o.radius_min)->capture_default_str();
    synth->add_option("--radius-max", o.radius_max)->capture_default_str();
    synth->add_option("--seed", o.synth_seed, "Base seed; scene i uses seed XOR i")->capture_default_str();
    synth->add_flag("--scenario", o.scenario, "Also write semantic/ and instance/ producer emulations");

    auto* render = app->add_subcommand("render", "Draw a class-coloured overlay of a package");
    render->add_option("--input", o.render_input, "Scene package")->required();
    render->add_option("--output", o.render_output, "PNG file")->required();

    return app;
}

std::string scalar_token(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) return v.dump();
    throw ValidationError("config values must be strings, numbers, booleans or arrays of those");
}

/// Command-line tokens for every config key not already given on the command line.
std::vector<std::string> config_tokens(const std::string& path, CLI::App& app) {
    const auto bytes = io::read_file(path);
    json cfg;
    try {
        cfg = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw ValidationError("malformed config " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw ValidationError("config " + path + " must be a JSON object");

    CLI::App* sub = app.get_subcommands().front();
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
        const std::string name = "--" + key;
        CLI::Option* opt = sub->get_option_no_throw(name);
        if (!opt) opt = app.get_option_no_throw(name);
        if (!opt || key == "config") throw ValidationError("unknown config key '" + key + "' for " + sub->get_name());
        if (opt->count() > 0) continue;
        if (opt->get_expected_max() == 0) {
            if (!value.is_boolean()) throw ValidationError("config key '" + key + "' expects a boolean");
            if (value.get<bool>()) tokens.push_back(name);
            continue;
        }
        tokens.push_back(name);
        if (value.is_array()) {
            for (const auto& v : value) tokens.push_back(scalar_token(v));
        } else {
            tokens.push_back(scalar_token(value));
        }
    }
    return tokens;
}

fusion::VotingWeights load_weights(const std::string& path) {
    const auto bytes = io::read_file(path);
    fusion::VotingWeights w;
    try {
        const json j = json::parse(bytes.begin(), bytes.end());
        if (!j.is_object()) throw ValidationError("weights file must hold a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key != "semantic" && key != "instance") throw ValidationError("unknown weights key '" + key + "'");
            if (!value.is_array() || value.size() != kNumClasses)
                throw ValidationError("weights '" + key + "' must be an array of 6 numbers");
            auto& target = key == "semantic" ? w.semantic : w.instance;
            for (std::size_t i = 0; i < kNumClasses; ++i) {
                if (!value[i].is_number()) throw ValidationError("weights '" + key + "' must be numeric");
                target[i] = value[i].get<double>();
            }
        }
    } catch (const json::exception& e) {
        throw ValidationError("malformed weights file " + path + ": " + e.what());
    }
    w.validate();
    return w;
}

/// Packages under `path`, or `path` itself when it is a package.
std::vector<std::pair<std::string, fs::path>> packages_in(const fs::path& path) {
    std::vector<std::pair<std::string, fs::path>> out;
    if (fs::exists(path / "meta.json")) {
        out.emplace_back(path.filename().string(), path);
        return out;
    }
    for (const auto& name : io::list_scenes(path)) out.emplace_back(name, path / name);
    return out;
}

template <typename F>
void parallel_for_each_index(std::size_t n, F&& body) {
    std::vector<std::exception_ptr> errors(n);
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

int cmd_extract(const Options& o) {
    const auto pkg = io::read_scene(o.extract_input);
    const auto source = source_from_string(o.extract_source);
    const auto set = extract_detections(pkg.scene, source);
    io::write_text(o.extract_output, io::detections_to_json(set, source));
    return kExitOk;
}

int cmd_fuse(const Options& o) {
    fusion::FusionConfig cfg;
    cfg.iou_threshold = o.iou_threshold;
    cfg.keep_unmatched_semantic = !o.drop_unmatched_semantic;
    cfg.keep_unmatched_instance = !o.drop_unmatched_instance;
    cfg.validate();
    const auto weights = o.weights.empty() ? fusion::VotingWeights{} : load_weights(o.weights);

    const auto sem = io::read_scene(o.fuse_semantic);
    const auto inst = io::read_scene(o.fuse_instance);
    if (sem.scene.width != inst.scene.width || sem.scene.height != inst.scene.height)
        throw ValidationError("semantic package is " + std::to_string(sem.scene.width) + "x" +
                              std::to_string(sem.scene.height) + " but instance package is " +
                              std::to_string(inst.scene.width) + "x" + std::to_string(inst.scene.height));

    const auto fused = fusion::fuse(extract_detections(sem.scene, Source::semantic),
                                    extract_detections(inst.scene, Source::instance), weights, cfg);
    const RgbImage* image = sem.image ? &*sem.image : inst.image ? &*inst.image : nullptr;
    io::write_scene(o.fuse_output, fused, image, "fused");
    return kExitOk;
}

int cmd_eval(const Options& o) {
    const auto gt_names = io::list_scenes(o.eval_gt);
    const auto pred_names = io::list_scenes(o.eval_pred);
    const std::set<std::string> gt_set(gt_names.begin(), gt_names.end());
    const std::set<std::string> pred_set(pred_names.begin(), pred_names.end());
    std::vector<std::string> unpaired;
    for (const auto& n : gt_names)
        if (!pred_set.count(n)) unpaired.push_back("gt:" + n);
    for (const auto& n : pred_names)
        if (!gt_set.count(n)) unpaired.push_back("pred:" + n);
    if (!unpaired.empty()) {
        std::string msg = "unpaired scenes:";
        for (const auto& u : unpaired) msg += " " + u;
        throw ValidationError(msg);
    }
    if (gt_names.empty()) throw ValidationError("no scene packages found in " + o.eval_gt);

    std::vector<LabeledScene> gt(gt_names.size());
    std::vector<LabeledScene> pred(gt_names.size());
    parallel_for_each_index(gt_names.size(), [&](std::size_t i) {
        gt[i] = io::read_scene(fs::path(o.eval_gt) / gt_names[i]).scene;
        pred[i] = io::read_scene(fs::path(o.eval_pred) / gt_names[i]).scene;
    });

    const auto report = metrics::evaluate(gt, pred);
    io::write_text(o.eval_output, io::report_to_json(report));
    if (!o.eval_counts_csv.empty()) io::write_text(o.eval_counts_csv, io::counts_to_csv(gt_names, report.pred_counts));
    return kExitOk;
}

int cmd_counts(const Options& o) {
    const auto pkgs = packages_in(o.counts_input);
    if (pkgs.empty()) throw ValidationError("no scene packages found in " + o.counts_input);
    std::vector<std::string> names;
    std::vector<metrics::CountVector> counts(pkgs.size());
    for (const auto& p : pkgs) names.push_back(p.first);
    parallel_for_each_index(pkgs.size(),
                            [&](std::size_t i) { counts[i] = metrics::count_cells(io::read_scene(pkgs[i].second).scene); });
    io::write_text(o.counts_output, io::counts_to_csv(names, counts));
    return kExitOk;
}

augment::NoiseOp parse_noise_op(const std::string& s) {
    if (s == "gaussian-blur") return augment::NoiseOp::gaussian_blur;
    if (s == "median-blur") return augment::NoiseOp::median_blur;
    if (s == "additive-gaussian-noise") return augment::NoiseOp::additive_gaussian_noise;
    throw ValidationError("unknown noise op " + s);
}

int cmd_augment(const Options& o) {
    augment::AugmentConfig base;
    base.target_size = o.target_size;
    base.scale_low = o.scale_low;
    base.scale_high = o.scale_high;
    base.flip_horizontal = !o.no_hflip;
    base.flip_vertical = !o.no_vflip;
    base.noise_ops.clear();
    for (const auto& op : o.noise_ops)
        if (op != "none") base.noise_ops.push_back(parse_noise_op(op));
    base.blur_kernel_sizes = o.blur_sizes;
    base.noise_sigma_high = o.noise_sigma_high;
    base.validate();

    const auto pkgs = packages_in(o.augment_input);
    if (pkgs.empty()) throw ValidationError("no scene packages found in " + o.augment_input);
    fs::create_directories(o.augment_output);
    parallel_for_each_index(pkgs.size(), [&](std::size_t i) {
        const auto pkg = io::read_scene(pkgs[i].second);
        const RgbImage image = pkg.image ? *pkg.image : RgbImage(pkg.scene.width, pkg.scene.height);
        auto cfg = base;
        cfg.seed = augment::image_seed(o.augment_seed, i);
        const auto out = augment::augment(image, pkg.scene, cfg);
        io::write_scene(fs::path(o.augment_output) / pkgs[i].first, out.scene, &out.image, "augmented");
    });
    return kExitOk;
}

int cmd_synth(const Options& o) {
    synth::SynthConfig base;
    base.width = o.synth_width;
    base.height = o.synth_height;
    base.n_cells = o.synth_cells;
    base.radius_min = o.radius_min;
    base.radius_max = o.radius_max;
    base.validate();

    const fs::path root(o.synth_output);
    const auto n = static_cast<std::size_t>(o.synth_count);
    std::vector<std::string> names(n);
    std::vector<metrics::CountVector> counts(n);
    std::vector<std::uint64_t> seeds(n);
    fs::create_directories(root);
    if (o.scenario)
        for (const char* sub : {"gt", "semantic", "instance"}) fs::create_directories(root / sub);
    parallel_for_each_index(n, [&](std::size_t i) {
        char name[32];
        std::snprintf(name, sizeof(name), "scene_%04zu", i);
        names[i] = name;
        auto cfg = base;
        cfg.seed = seeds[i] = o.synth_seed ^ i;
        if (o.scenario) {
            const auto s = synth::make_ensemble_scenario(cfg);
            io::write_scene(root / "gt" / name, s.ground_truth, &s.image, "ground_truth");
            io::write_scene(root / "semantic" / name, s.semantic, &s.image, "semantic");
            io::write_scene(root / "instance" / name, s.instance, &s.image, "instance");
            counts[i] = metrics::count_cells(s.ground_truth);
        } else {
            const auto s = synth::generate_scene(cfg);
            io::write_scene(root / name, s.scene, &s.image, "synthetic");
            counts[i] = metrics::count_cells(s.scene);
        }
    });

    json scenes = json::array();
    for (std::size_t i = 0; i < n; ++i)
        scenes.push_back({{"name", names[i]}, {"seed", seeds[i]}, {"cells", base.n_cells}, {"class_counts", counts[i]}});
    json manifest = {{"seed", o.synth_seed},
                     {"width", base.width},
                     {"height", base.height},
                     {"cells_per_scene", base.n_cells},
                     {"radius_range", {base.radius_min, base.radius_max}},
                     {"class_frequencies", base.class_frequencies},
                     {"scenario", o.scenario},
                     {"scenes", scenes}};
    io::write_text(root / "manifest.json", manifest.dump(2) + "\n");
    return kExitOk;
}

int cmd_render(const Options& o) {
    const auto pkg = io::read_scene(o.render_input);
    const RgbImage image = pkg.image ? *pkg.image : RgbImage(pkg.scene.width, pkg.scene.height);
    io::write_file(o.render_output, io::encode_png_rgb(io::render_overlay(image, pkg.scene)));
    return kExitOk;
}

int dispatch(const CLI::App& app, const Options& o) {
    kernels::set_num_threads(o.threads);
    if (app.got_subcommand("extract")) return cmd_extract(o);
    if (app.got_subcommand("fuse")) return cmd_fuse(o);
    if (app.got_subcommand("eval")) return cmd_eval(o);
    if (app.got_subcommand("counts")) return cmd_counts(o);
    if (app.got_subcommand("augment")) return cmd_augment(o);
    if (app.got_subcommand("synth")) return cmd_synth(o);
    if (app.got_subcommand("render")) return cmd_render(o);
    return kExitInput;
}

int report_error(bool as_json, int code, const std::string& message) {
    if (as_json) {
        std::cerr << json{{"error", message}, {"exit_code", code}}.dump() << "\n";
    } else {
        std::cerr << "nucfuse: " << message << "\n";
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);  // CLI11 consumes from the back
    const bool json_errors = std::find(args.begin(), args.end(), "--json-errors") != args.end();

    Options opts;
    auto app = make_app(opts);
    try {
        auto first_pass = args;
        app->parse(first_pass);
        if (!opts.config.empty()) {
            auto extra = config_tokens(opts.config, *app);
            if (!extra.empty()) {
                // Extra tokens go after everything else, i.e. to the front of the reversed list.
                std::reverse(extra.begin(), extra.end());
                extra.insert(extra.end(), args.begin(), args.end());
                opts = Options{};
                app = make_app(opts);
                app->parse(extra);
            }
        }
    } catch (const CLI::CallForHelp& e) {
        return app->exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app->exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(json_errors, kExitInput, e.what());
    } catch (const ValidationError& e) {
        return report_error(json_errors, kExitInput, e.what());
    } catch (const io::IoError& e) {
        return report_error(json_errors, kExitInput, e.what());
    }

    try {
        return dispatch(*app, opts);
    } catch (const ValidationError& e) {
        return report_error(opts.json_errors, kExitInput, e.what());
    } catch (const io::IoError& e) {
        return report_error(opts.json_errors, kExitInput, e.what());
    } catch (const std::invalid_argument& e) {
        return report_error(opts.json_errors, kExitInput, e.what());
    } catch (const std::exception& e) {
        return report_error(opts.json_errors, kExitInternal, e.what());
    }
}
