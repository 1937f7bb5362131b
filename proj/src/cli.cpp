#include "slidemil/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "slidemil/augment.hpp"
#include "slidemil/checkpoint.hpp"
#include "slidemil/config.hpp"
#include "slidemil/errors.hpp"
#include "slidemil/experiment.hpp"
#include "slidemil/heatmap.hpp"
#include "slidemil/hyperparams.hpp"
#include "slidemil/metrics.hpp"
#include "slidemil/numeric.hpp"
#include "slidemil/parallel.hpp"
#include "slidemil/preprocess.hpp"
#include "slidemil/presets.hpp"
#include "slidemil/rng.hpp"
#include "slidemil/stain.hpp"
#include "slidemil/stats.hpp"

namespace slidemil {

namespace {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<fs::path> collect_pngs(const std::string& input) {
    std::vector<fs::path> files;
    const fs::path p(input);
    if (fs::is_regular_file(p)) {
        files.push_back(p);
    } else if (fs::is_directory(p)) {
        for (const auto& entry : fs::directory_iterator(p)) {
            if (entry.is_regular_file() && entry.path().extension() == ".png") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
    } else {
        throw io_error("input '" + input + "' is neither a file nor a directory");
    }
    return files;
}

// Shared flag bundle for train/tune; tracks which flags were set so the
// resolution order defaults < preset < config file < flags holds.
struct TrainFlags {
    std::string preset;
    std::string config_file;
    std::map<std::string, std::string> flag_values;  // canonical name -> value

    void add_options(CLI::App* cmd) {
        cmd->add_option("--preset", preset, "named built-in configuration");
        cmd->add_option("--config", config_file, "key=value config file");
        static const std::vector<std::pair<std::string, std::string>> flags = {
            {"--learning-rate", "learning_rate"},
            {"--weight-decay", "weight_decay"},
            {"--beta1", "beta1"},
            {"--beta2", "beta2"},
            {"--epsilon", "epsilon"},
            {"--lr-decay-patience", "lr_decay_patience"},
            {"--lr-decay-factor", "lr_decay_factor"},
            {"--model-size", "model_size"},
            {"--dropout", "dropout"},
            {"--max-patches", "max_patches"},
            {"--max-epochs", "max_epochs"},
        };
        for (const auto& [flag, name] : flags) {
            const std::string key = name;
            cmd->add_option_function<std::string>(
                flag, [this, key](const std::string& v) { flag_values[key] = v; },
                "training hyperparameter " + key);
        }
    }

    // Returns the resolved config and the leftover (non-training) config
    // file keys, e.g. grid.* for tune. A run directory's config.kv echo is
    // consumable here: run.* provenance keys are skipped and `folds` feeds
    // the fold count unless the flag was given.
    std::pair<TrainConfig, std::map<std::string, std::string>> resolve(
        std::uint64_t seed, bool seed_given, int* folds = nullptr,
        bool folds_given = false) const {
        TrainConfig config;
        if (!preset.empty()) {
            if (!is_preset_name(preset)) {
                throw config_error("unknown preset '" + preset + "'; known: " + [] {
                    std::string all;
                    for (const auto& n : preset_names()) all += all.empty() ? n : ", " + n;
                    return all;
                }());
            }
            config = preset_config(preset);
        }
        std::map<std::string, std::string> leftovers;
        if (!config_file.empty()) {
            auto kv = parse_kv_file(config_file);
            for (auto it = kv.begin(); it != kv.end();) {
                if (is_hyperparameter_name(it->first) || it->first == "max_epochs" ||
                    it->first == "seed") {
                    std::map<std::string, std::string> one{{it->first, it->second}};
                    config = train_config_from_kv(one, config);
                    it = kv.erase(it);
                } else if (it->first == "folds") {
                    if (folds != nullptr && !folds_given) {
                        *folds = std::stoi(it->second);
                    }
                    it = kv.erase(it);
                } else if (it->first.rfind("run.", 0) == 0) {
                    it = kv.erase(it);  // provenance echo, not configuration
                } else {
                    ++it;
                }
            }
            leftovers = std::move(kv);
        }
        for (const auto& [name, value] : flag_values) {
            std::map<std::string, std::string> one{{name, value}};
            config = train_config_from_kv(one, config);
        }
        if (seed_given || config.seed == 0) {
            config.seed = seed;
        }
        validate_train_config(config);
        return {config, leftovers};
    }
};

std::vector<HoldoutSet> load_holdouts(const std::vector<std::string>& paths) {
    std::vector<HoldoutSet> holdouts;
    for (const auto& p : paths) {
        HoldoutSet h;
        h.tag = fs::path(p).stem().string();
        h.records = load_manifest(p);
        holdouts.push_back(std::move(h));
    }
    return holdouts;
}

// ---------------------------------------------------------------------------
// preprocess
// ---------------------------------------------------------------------------

struct PreprocessArgs {
    std::string mode;
    std::string method = "fixed";  // segment: fixed|otsu; normalise: reinhard|macenko
    int threshold = 8;
    int otsu_offset = 0;
    bool median_filter = false;
    std::string reference;
    std::vector<double> target_stats;  // reinhard lab means/stds as 6 numbers
    int copies = 1;
    double brightness = 0.25;
    double contrast = 0.25;
    double saturation = 0.25;
    double hue = 0.04;
    std::string input;
    std::string output;
};

int run_preprocess(const PreprocessArgs& args, std::uint64_t seed, int workers) {
    if (args.mode != "segment" && args.mode != "normalise" && args.mode != "augment") {
        throw config_error("--mode must be segment, normalise or augment");
    }
    const auto files = collect_pngs(args.input);
    fs::create_directories(args.output);
    if (files.empty()) {
        std::cerr << "warning: no PNG files found in '" << args.input << "'\n";
        return kExitOk;
    }

    std::optional<LabStats> reinhard_target;
    StainReference macenko_ref = default_stain_reference();
    if (args.mode == "normalise") {
        if (args.method == "reinhard") {
            if (!args.target_stats.empty()) {
                if (args.target_stats.size() != 6) {
                    throw config_error(
                        "--target needs 6 values: l,alpha,beta means then stds");
                }
                LabStats stats;
                for (int c = 0; c < 3; ++c) {
                    stats.mean[c] = args.target_stats[static_cast<std::size_t>(c)];
                    stats.std[c] = args.target_stats[static_cast<std::size_t>(c + 3)];
                    if (stats.std[c] <= 0.0) {
                        throw config_error("--target stds must be positive");
                    }
                }
                reinhard_target = stats;
            } else if (!args.reference.empty()) {
                reinhard_target = measure_lab_stats(read_png(args.reference));
            } else {
                throw config_error("reinhard normalisation needs --reference TILE or --target");
            }
        } else if (args.method == "macenko") {
            if (!args.reference.empty()) {
                macenko_ref = stain_reference_from_tile(read_png(args.reference));
            }
        } else {
            throw config_error("--method must be reinhard or macenko for normalise");
        }
    }
    if (args.mode == "segment" && args.method != "fixed" && args.method != "otsu") {
        throw config_error("--method must be fixed or otsu for segment");
    }

    // Tiles are independent; summaries collect into per-file slots so the
    // printed output stays in filename order for any worker count.
    struct FileResult {
        std::string summary;
        std::string error;
        bool io_failed = false;
    };
    std::vector<FileResult> results(files.size());
    parallel_for(files.size(), workers, [&](std::size_t f) {
        const auto& file = files[f];
        const std::string stem = file.stem().string();
        FileResult& res = results[f];
        try {
            const RgbTile tile = read_png(file.string());
            if (args.mode == "segment") {
                SegmentOptions opts;
                opts.median_filter = args.median_filter;
                const TissueMask mask =
                    args.method == "otsu"
                        ? segment_tissue_otsu(tile, args.otsu_offset, opts)
                        : segment_tissue_fixed(tile, args.threshold, opts);
                write_mask_png(mask, args.output + "/" + stem + "_mask.png");
                write_png(segmentation_preview(tile, mask),
                          args.output + "/" + stem + "_preview.png");
                long tissue = 0;
                for (auto v : mask.values) tissue += v;
                res.summary = file.filename().string() + ": tissue fraction " +
                              format_double(static_cast<double>(tissue) /
                                            static_cast<double>(mask.values.size()));
            } else if (args.mode == "normalise") {
                const RgbTile out = reinhard_target
                                        ? reinhard_normalise(tile, *reinhard_target)
                                        : macenko_normalise(tile, macenko_ref);
                write_png(out, args.output + "/" + stem + "_norm.png");
                res.summary = file.filename().string() + ": normalised (" + args.method + ")";
            } else {
                for (int j = 0; j < args.copies; ++j) {
                    AugmentParams params;
                    params.brightness_delta = args.brightness;
                    params.contrast_factor = args.contrast;
                    params.saturation_factor = args.saturation;
                    params.hue_shift = args.hue;
                    params.seed = derive_seed(derive_seed(seed, fnv1a(file.filename().string())),
                                              static_cast<std::uint64_t>(j));
                    write_png(colour_augment(tile, params),
                              args.output + "/" + stem + "_aug" + std::to_string(j) + ".png");
                }
                res.summary = file.filename().string() + ": " + std::to_string(args.copies) +
                              " copies";
            }
        } catch (const io_error& e) {
            res.error = e.what();
            res.io_failed = true;
        } catch (const std::exception& e) {
            res.error = e.what();
        }
    });

    int io_failures = 0, runtime_failures = 0;
    for (std::size_t f = 0; f < files.size(); ++f) {
        if (results[f].error.empty()) {
            std::cout << results[f].summary << "\n";
        } else {
            std::cerr << "error: " << files[f].string() << ": " << results[f].error << "\n";
            (results[f].io_failed ? io_failures : runtime_failures) += 1;
        }
    }
    if (runtime_failures > 0) return kExitRuntime;
    if (io_failures > 0) return kExitIo;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train / tune
// ---------------------------------------------------------------------------

int run_train(const std::string& manifest_path, const std::vector<std::string>& holdout_paths,
              const TrainFlags& flags, std::uint64_t seed, bool seed_given, int folds,
              bool folds_given, int workers, const std::string& out_dir) {
    auto [config, leftovers] = flags.resolve(seed, seed_given, &folds, folds_given);
    if (!leftovers.empty()) {
        throw config_error("unknown config key '" + leftovers.begin()->first + "'");
    }
    const auto records = load_manifest(manifest_path);
    const auto holdouts = load_holdouts(holdout_paths);

    ExperimentOptions opts;
    opts.k = folds;
    opts.workers = workers;
    opts.out_dir = out_dir;
    opts.config_echo["run.command"] = "train";
    opts.config_echo["run.manifest"] = manifest_path;
    if (!flags.preset.empty()) opts.config_echo["run.preset"] = flags.preset;
    for (std::size_t i = 0; i < holdout_paths.size(); ++i) {
        opts.config_echo["run.holdout" + std::to_string(i)] = holdout_paths[i];
    }

    const auto result = run_experiment(records, holdouts, config, opts);
    std::cout << "trained " << result.fold_models.size() << " fold models under " << out_dir
              << "\n";
    for (const auto& fm : result.fold_models) {
        std::cout << "  best val loss " << format_double(fm.best_val_loss) << " at epoch "
                  << fm.best_epoch << "\n";
    }
    return kExitOk;
}

int run_tune(const std::string& manifest_path, const std::string& schedule_path,
             const TrainFlags& flags, std::uint64_t seed, bool seed_given, int folds,
             bool folds_given, int workers, const std::string& out_dir) {
    auto [config, leftovers] = flags.resolve(seed, seed_given, &folds, folds_given);
    HyperGrids grids = extract_grids(leftovers);
    if (!leftovers.empty()) {
        throw config_error("unknown config key '" + leftovers.begin()->first + "'");
    }
    if (grids.empty()) {
        throw config_error("tune needs candidate grids (grid.<name>=v1,v2,... in --config)");
    }
    const auto schedule = load_tuning_schedule(schedule_path);
    const auto records = load_manifest(manifest_path);
    const auto bags = load_bags(records);

    fs::create_directories(out_dir);
    const auto evaluator = make_cv_evaluator(records, bags, folds, config.seed);
    const TuningResult result = run_tuning(schedule, grids, config, evaluator, workers);

    write_tuning_trace_csv(result.trace, out_dir + "/tuning_trace.csv");
    auto kv = train_config_to_kv(result.final_config);
    kv["run.command"] = "tune";
    kv["run.manifest"] = manifest_path;
    kv["run.schedule"] = schedule_path;
    kv["folds"] = std::to_string(folds);
    write_kv_file(kv, out_dir + "/config.kv");

    std::cout << "tuned over " << result.trace.iterations.size() << " iterations\n";
    for (const auto& iter : result.trace.iterations) {
        const auto& sel = iter.evaluations[static_cast<std::size_t>(iter.selected_index)];
        std::cout << "  iteration " << iter.iteration << ": " << iter.evaluations.size()
                  << " configs, best loss " << format_double(sel.mean_val_loss) << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate / compare
// ---------------------------------------------------------------------------

int run_evaluate(const std::string& predictions_path, int iterations, std::uint64_t seed,
                 int workers, const std::vector<std::string>& metrics,
                 const std::string& out_dir) {
    const PredictionSet preds = read_predictions_csv(predictions_path);
    const auto& selected = metrics.empty() ? metric_names() : metrics;

    BootstrapOptions opts;
    opts.iterations = iterations;
    opts.seed = seed;
    opts.workers = workers;

    std::ostringstream csv;
    csv << "# bootstrap=percentile iterations=" << iterations << " seed=" << seed << "\n";
    csv << "metric,point,boot_mean,ci_low,ci_high\n";
    for (const auto& name : selected) {
        const auto entry = bootstrap_report(
            preds, name, [&name](const PredictionSet& s) { return metric_by_name(name, s); },
            opts);
        csv << entry.metric << ',' << format_double(entry.point) << ','
            << format_double(entry.boot_mean) << ',' << format_double(entry.ci_low) << ','
            << format_double(entry.ci_high) << "\n";
        std::cout << entry.metric << ": " << format_double(entry.point) << " ["
                  << format_double(entry.ci_low) << ", " << format_double(entry.ci_high) << "]\n";
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out(out_dir + "/report.csv", std::ios::binary);
        if (!out) throw io_error("cannot write report under '" + out_dir + "'");
        out << csv.str();
        std::map<std::string, std::string> kv{{"command", "evaluate"},
                                              {"predictions", predictions_path},
                                              {"bootstrap", std::to_string(iterations)},
                                              {"ci", "percentile"},
                                              {"seed", std::to_string(seed)}};
        for (std::size_t i = 0; i < selected.size(); ++i) {
            kv["metric" + std::to_string(i)] = selected[i];
        }
        write_kv_file(kv, out_dir + "/config.kv");
    }
    return kExitOk;
}

std::vector<PredictionSet> load_fold_predictions(const std::string& run_dir) {
    std::vector<PredictionSet> folds;
    for (int i = 0;; ++i) {
        const std::string path = run_dir + "/fold" + std::to_string(i) + "/predictions_test.csv";
        if (!fs::exists(path)) break;
        folds.push_back(read_predictions_csv(path));
    }
    if (folds.empty()) {
        throw io_error("no fold predictions found under '" + run_dir + "'");
    }
    return folds;
}

int run_compare(const std::vector<std::string>& run_dirs, const std::vector<std::string>& metrics,
                const std::string& out_dir) {
    if (run_dirs.size() < 2) {
        throw config_error("compare needs at least two run directories");
    }
    const auto& selected = metrics.empty() ? metric_names() : metrics;

    std::vector<std::vector<PredictionSet>> runs;
    for (const auto& dir : run_dirs) runs.push_back(load_fold_predictions(dir));
    for (const auto& r : runs) {
        if (r.size() != runs.front().size()) {
            throw validation_error("run directories have different fold counts");
        }
    }

    struct Row {
        std::string pair;
        std::string metric;
        double t;
        double p_raw;
    };
    std::vector<Row> rows;
    for (std::size_t a = 0; a < runs.size(); ++a) {
        for (std::size_t b = a + 1; b < runs.size(); ++b) {
            const std::string pair = fs::path(run_dirs[a]).filename().string() + "_vs_" +
                                     fs::path(run_dirs[b]).filename().string();
            for (const auto& metric : selected) {
                std::vector<double> va, vb;
                for (std::size_t f = 0; f < runs[a].size(); ++f) {
                    va.push_back(metric_by_name(metric, runs[a][f]));
                    vb.push_back(metric_by_name(metric, runs[b][f]));
                }
                const TTestResult res = paired_t_test(va, vb);
                rows.push_back({pair, metric, res.t, res.p});
            }
        }
    }
    std::vector<double> pvals;
    for (const auto& r : rows) pvals.push_back(r.p_raw);
    const std::vector<double> adjusted = bh_fdr(pvals);

    std::ostringstream csv;
    csv << "pair,metric,t,p_raw,p_adjusted\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        csv << rows[i].pair << ',' << rows[i].metric << ',' << format_double(rows[i].t) << ','
            << format_double(rows[i].p_raw) << ',' << format_double(adjusted[i]) << "\n";
        std::cout << rows[i].pair << " " << rows[i].metric << ": t=" << format_double(rows[i].t)
                  << " p=" << format_double(rows[i].p_raw)
                  << " p_adj=" << format_double(adjusted[i]) << "\n";
    }
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out(out_dir + "/comparison.csv", std::ios::binary);
        if (!out) throw io_error("cannot write comparison under '" + out_dir + "'");
        out << csv.str();
        std::map<std::string, std::string> kv{{"command", "compare"},
                                              {"correction", "benjamini-hochberg"}};
        for (std::size_t i = 0; i < run_dirs.size(); ++i) {
            kv["run" + std::to_string(i)] = run_dirs[i];
        }
        for (std::size_t i = 0; i < selected.size(); ++i) {
            kv["metric" + std::to_string(i)] = selected[i];
        }
        write_kv_file(kv, out_dir + "/config.kv");
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// heatmap
// ---------------------------------------------------------------------------

int run_heatmap(const std::string& checkpoint_path, const std::string& bag_path,
                const std::string& out_dir, int patch_px, int stride_px, int downsample,
                const std::string& norm, double opacity, const std::string& background_path,
                const std::string& slide_dims_text) {
    const Checkpoint ckpt = read_checkpoint(checkpoint_path);
    const FeatureBag bag = read_feature_bag(bag_path);

    HeatmapSpec spec;
    spec.patch_px = patch_px > 0 ? patch_px : static_cast<int>(bag.patch_size_px);
    spec.stride_px = stride_px > 0 ? stride_px : std::max(1, spec.patch_px / 2);
    spec.downsample = downsample;
    spec.opacity = opacity;
    if (norm == "percentile") {
        spec.norm = AttentionNorm::Percentile;
    } else if (norm == "minmax") {
        spec.norm = AttentionNorm::MinMax;
    } else {
        throw config_error("--norm must be percentile or minmax");
    }

    std::array<std::uint32_t, 2> dims{0, 0};
    if (!slide_dims_text.empty()) {
        const auto x = slide_dims_text.find('x');
        if (x == std::string::npos) {
            throw config_error("--slide-dims must look like WIDTHxHEIGHT");
        }
        dims[0] = static_cast<std::uint32_t>(std::stoul(slide_dims_text.substr(0, x)));
        dims[1] = static_cast<std::uint32_t>(std::stoul(slide_dims_text.substr(x + 1)));
    } else {
        for (const auto& c : bag.coords) {
            dims[0] = std::max(dims[0], c[0] + static_cast<std::uint32_t>(spec.patch_px));
            dims[1] = std::max(dims[1], c[1] + static_cast<std::uint32_t>(spec.patch_px));
        }
    }

    const ForwardResult res = forward(bag, ckpt.params, false, 0, ckpt.config);
    const std::vector<double> attention(res.attention.data(),
                                        res.attention.data() + res.attention.size());

    std::optional<RgbTile> background;
    if (!background_path.empty()) {
        background = read_png(background_path);
    }

    fs::create_directories(out_dir);
    const RgbTile canvas = render_heatmap(bag.coords, attention, dims, spec, background);
    write_png(canvas, out_dir + "/" + bag.slide_id + "_heatmap.png");
    write_heatmap_sidecar(out_dir + "/" + bag.slide_id + "_heatmap.txt", bag.slide_id, spec,
                          attention_stats(attention), attention.size());
    std::cout << "rendered " << canvas.width << "x" << canvas.height << " heatmap for "
              << bag.slide_id << "\n";
    return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"whole-slide multiple-instance subtype classification pipeline"};
    app.require_subcommand(1);
    // Global flags (--seed, --workers) are accepted after the subcommand too.
    app.fallthrough();

    std::uint64_t seed = 0;
    int workers = default_workers();
    std::string out_dir;
    app.add_option("--seed", seed, "global RNG seed")->capture_default_str();
    app.add_option("--workers", workers, "worker threads for parallel stages")
        ->capture_default_str();

    // preprocess
    PreprocessArgs pre;
    auto* cmd_pre = app.add_subcommand("preprocess", "segment, normalise or augment PNG tiles");
    cmd_pre->add_option("--mode", pre.mode, "segment | normalise | augment")->required();
    cmd_pre->add_option("--method", pre.method, "segment: fixed|otsu; normalise: reinhard|macenko");
    cmd_pre->add_option("--threshold", pre.threshold, "fixed saturation threshold")
        ->capture_default_str();
    cmd_pre->add_option("--otsu-offset", pre.otsu_offset, "offset added to the Otsu threshold")
        ->capture_default_str();
    cmd_pre->add_flag("--median-filter", pre.median_filter, "smooth the mask with a 3x3 majority");
    cmd_pre->add_option("--reference", pre.reference, "reference tile for normalisation");
    cmd_pre->add_option("--target", pre.target_stats,
                        "reinhard target stats: 3 lab means then 3 stds")
        ->expected(6);
    cmd_pre->add_option("--copies", pre.copies, "augmented copies per tile")->capture_default_str();
    cmd_pre->add_option("--brightness", pre.brightness, "brightness jitter half-range")
        ->capture_default_str();
    cmd_pre->add_option("--contrast", pre.contrast, "contrast jitter half-range")
        ->capture_default_str();
    cmd_pre->add_option("--saturation", pre.saturation, "saturation jitter half-range")
        ->capture_default_str();
    cmd_pre->add_option("--hue", pre.hue, "hue jitter half-range")->capture_default_str();
    cmd_pre->add_option("input", pre.input, "input PNG or directory")->required();
    cmd_pre->add_option("output", pre.output, "output directory")->required();

    // train
    std::string train_manifest;
    std::vector<std::string> train_holdouts;
    int folds = 5;
    TrainFlags train_flags;
    auto* cmd_train = app.add_subcommand("train", "cross-validated training run");
    cmd_train->add_option("--manifest", train_manifest, "training manifest CSV")->required();
    cmd_train->add_option("--holdout", train_holdouts,
                          "hold-out manifest(s) for ensembled predictions");
    cmd_train->add_option("--folds", folds, "cross-validation folds")->capture_default_str();
    cmd_train->add_option("--out", out_dir, "run directory")->required();
    train_flags.add_options(cmd_train);

    // tune
    std::string tune_manifest, tune_schedule;
    TrainFlags tune_flags;
    auto* cmd_tune = app.add_subcommand("tune", "iterative grid-search tuning");
    cmd_tune->add_option("--manifest", tune_manifest, "training manifest CSV")->required();
    cmd_tune->add_option("--schedule", tune_schedule, "tuning schedule CSV")->required();
    cmd_tune->add_option("--folds", folds, "cross-validation folds")->capture_default_str();
    cmd_tune->add_option("--out", out_dir, "output directory")->required();
    tune_flags.add_options(cmd_tune);

    // evaluate
    std::string eval_predictions;
    int bootstrap_iterations = 10000;
    std::vector<std::string> eval_metrics;
    auto* cmd_eval = app.add_subcommand("evaluate", "bootstrap metric report");
    cmd_eval->add_option("--predictions", eval_predictions, "predictions CSV")->required();
    cmd_eval->add_option("--bootstrap", bootstrap_iterations, "bootstrap iterations")
        ->capture_default_str();
    cmd_eval->add_option("--metric", eval_metrics, "metric(s); default all");
    cmd_eval->add_option("--out", out_dir, "directory for report.csv");

    // compare
    std::vector<std::string> compare_dirs;
    std::vector<std::string> compare_metrics;
    auto* cmd_compare = app.add_subcommand("compare", "paired t-tests across runs with FDR");
    cmd_compare->add_option("runs", compare_dirs, "run directories")->required()->expected(2, -1);
    cmd_compare->add_option("--metric", compare_metrics, "metric(s); default all");
    cmd_compare->add_option("--out", out_dir, "directory for comparison.csv");

    // heatmap
    std::string hm_checkpoint, hm_bag, hm_norm = "percentile", hm_background, hm_dims;
    int hm_patch = 0, hm_stride = 0, hm_downsample = 32;
    double hm_opacity = 1.0;
    auto* cmd_hm = app.add_subcommand("heatmap", "render attention heatmaps");
    cmd_hm->add_option("--checkpoint", hm_checkpoint, "ABML checkpoint")->required();
    cmd_hm->add_option("--bag", hm_bag, "FBAG feature bag")->required();
    cmd_hm->add_option("--out", out_dir, "output directory")->required();
    cmd_hm->add_option("--patch-px", hm_patch, "patch size (default: from the bag)");
    cmd_hm->add_option("--stride-px", hm_stride, "patch stride (default: patch/2)");
    cmd_hm->add_option("--downsample", hm_downsample, "canvas downsample factor")
        ->capture_default_str();
    cmd_hm->add_option("--norm", hm_norm, "percentile | minmax")->capture_default_str();
    cmd_hm->add_option("--opacity", hm_opacity, "overlay opacity")->capture_default_str();
    cmd_hm->add_option("--background", hm_background, "background PNG at canvas resolution");
    cmd_hm->add_option("--slide-dims", hm_dims, "level-0 WIDTHxHEIGHT (default: from coords)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const bool seed_given = app.count("--seed") > 0;
        if (cmd_pre->parsed()) return run_preprocess(pre, seed, workers);
        if (cmd_train->parsed()) {
            return run_train(train_manifest, train_holdouts, train_flags, seed, seed_given, folds,
                             cmd_train->count("--folds") > 0, workers, out_dir);
        }
        if (cmd_tune->parsed()) {
            return run_tune(tune_manifest, tune_schedule, tune_flags, seed, seed_given, folds,
                            cmd_tune->count("--folds") > 0, workers, out_dir);
        }
        if (cmd_eval->parsed()) {
            return run_evaluate(eval_predictions, bootstrap_iterations, seed, workers,
                                eval_metrics, out_dir);
        }
        if (cmd_compare->parsed()) return run_compare(compare_dirs, compare_metrics, out_dir);
        if (cmd_hm->parsed()) {
            return run_heatmap(hm_checkpoint, hm_bag, out_dir, hm_patch, hm_stride, hm_downsample,
                               hm_norm, hm_opacity, hm_background, hm_dims);
        }
        return kExitUsage;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace slidemil
