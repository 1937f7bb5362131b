#include "slidemil/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "slidemil/checkpoint.hpp"
#include "slidemil/errors.hpp"
#include "slidemil/hyperparams.hpp"
#include "slidemil/numeric.hpp"
#include "slidemil/parallel.hpp"
#include "slidemil/rng.hpp"

namespace slidemil {

namespace fs = std::filesystem;

std::map<std::string, FeatureBag> load_bags(const std::vector<SlideRecord>& records) {
    std::map<std::string, FeatureBag> bags;
    Eigen::Index dim = 0;
    for (const auto& rec : records) {
        FeatureBag bag = read_feature_bag(rec.feature_path);
        bag.slide_id = rec.slide_id;
        validate_bag(bag);
        if (dim == 0) {
            dim = bag.dim();
        } else if (bag.dim() != dim) {
            throw shape_error("feature dim mismatch: slide '" + rec.slide_id + "' has dim " +
                              std::to_string(bag.dim()) + ", dataset has " + std::to_string(dim));
        }
        if (!bags.emplace(rec.slide_id, std::move(bag)).second) {
            throw validation_error("duplicate slide id '" + rec.slide_id + "' across manifests");
        }
    }
    return bags;
}

Eigen::VectorXd ensemble_predict(const std::vector<AbmilParams>& models, const FeatureBag& bag,
                                 const TrainConfig& config) {
    if (models.empty()) {
        throw shape_error("ensemble needs at least one model");
    }
    for (const auto& m : models) {
        if (m.dim() != models.front().dim() || m.k() != models.front().k()) {
            throw shape_error("ensemble members disagree on (dim, k)");
        }
    }
    const Eigen::MatrixXd features = bag.features.cast<double>();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(models.front().k());
    for (const auto& m : models) {
        acc += predict_proba(forward(features, m, false, 0, config).logits);
    }
    return acc / static_cast<double>(models.size());
}

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write history '" + path + "'");
    }
    out << "epoch,train_loss,val_loss,lr\n";
    for (const auto& e : history) {
        out << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.val_loss)
            << ',' << format_double(e.learning_rate) << '\n';
    }
    if (!out) {
        throw io_error("failed writing history '" + path + "'");
    }
}

namespace {

std::vector<BagRef> refs_for(const std::vector<SlideRecord>& records,
                             const std::map<std::string, FeatureBag>& bags) {
    std::vector<BagRef> refs;
    refs.reserve(records.size());
    for (const auto& rec : records) {
        const auto it = bags.find(rec.slide_id);
        if (it == bags.end()) {
            throw validation_error("no feature bag loaded for slide '" + rec.slide_id + "'");
        }
        refs.push_back({&it->second, rec.label});
    }
    return refs;
}

std::vector<SlideRecord> sorted_by_slide(std::vector<SlideRecord> records) {
    std::sort(records.begin(), records.end(),
              [](const SlideRecord& a, const SlideRecord& b) { return a.slide_id < b.slide_id; });
    return records;
}

void write_folds_csv(const std::vector<FoldSplit>& folds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write folds '" + path + "'");
    }
    out << "fold,role,case_id\n";
    for (const auto& fold : folds) {
        for (const auto& c : fold.train_cases) out << fold.fold_index << ",train," << c << '\n';
        for (const auto& c : fold.val_cases) out << fold.fold_index << ",val," << c << '\n';
        for (const auto& c : fold.test_cases) out << fold.fold_index << ",test," << c << '\n';
    }
}

void write_config_kv(const TrainConfig& config, const ExperimentOptions& opts,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw io_error("cannot write config echo '" + path + "'");
    }
    std::map<std::string, std::string> kv = train_config_to_kv(config);
    kv["folds"] = std::to_string(opts.k);
    for (const auto& [key, value] : opts.config_echo) kv[key] = value;
    for (const auto& [key, value] : kv) out << key << '=' << value << '\n';
}

}  // namespace

ExperimentResult run_experiment(const std::vector<SlideRecord>& records,
                                const std::vector<HoldoutSet>& holdouts,
                                const TrainConfig& config, const ExperimentOptions& opts) {
    validate_train_config(config);
    if (records.empty()) {
        throw validation_error("experiment needs a non-empty training manifest");
    }

    // All bags load up front; a hold-out set with a different feature dim
    // fails here, before any training.
    std::vector<SlideRecord> all_records = records;
    for (const auto& h : holdouts) {
        all_records.insert(all_records.end(), h.records.begin(), h.records.end());
    }
    const std::map<std::string, FeatureBag> bags = load_bags(all_records);

    ExperimentResult result;
    result.folds = stratified_case_kfold(records, opts.k, config.seed);

    const bool writing = !opts.out_dir.empty();
    if (writing) {
        fs::create_directories(opts.out_dir);
        write_config_kv(config, opts, opts.out_dir + "/config.kv");
        write_folds_csv(result.folds, opts.out_dir + "/folds.csv");
    }

    result.fold_models.resize(result.folds.size());
    parallel_for(result.folds.size(), opts.workers, [&](std::size_t i) {
        const FoldSplit& fold = result.folds[i];
        TrainConfig fold_config = config;
        fold_config.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
        const auto train_refs = refs_for(slides_for_cases(records, fold.train_cases), bags);
        const auto val_refs = refs_for(slides_for_cases(records, fold.val_cases), bags);
        result.fold_models[i] = train_fold(train_refs, val_refs, fold_config);
    });

    result.fold_test_predictions.resize(result.folds.size());
    result.cv_test_predictions.n_classes = kNumSubtypes;
    for (std::size_t i = 0; i < result.folds.size(); ++i) {
        const auto test_records =
            sorted_by_slide(slides_for_cases(records, result.folds[i].test_cases));
        PredictionSet& preds = result.fold_test_predictions[i];
        preds.n_classes = kNumSubtypes;
        preds.items.resize(test_records.size());
        parallel_for(test_records.size(), opts.workers, [&](std::size_t s) {
            const auto& rec = test_records[s];
            const FeatureBag& bag = bags.at(rec.slide_id);
            const Eigen::VectorXd probs = predict_proba(
                forward(bag, result.fold_models[i].best_params, false, 0, config).logits);
            preds.items[s] =
                make_prediction(rec.slide_id, subtype_code(rec.label),
                                std::vector<double>(probs.data(), probs.data() + probs.size()));
        });
        result.cv_test_predictions.items.insert(result.cv_test_predictions.items.end(),
                                                preds.items.begin(), preds.items.end());

        if (writing) {
            const std::string fold_dir = opts.out_dir + "/fold" + std::to_string(i);
            fs::create_directories(fold_dir);
            TrainConfig fold_config = config;
            fold_config.seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
            write_checkpoint(result.fold_models[i].best_params, fold_config,
                             fold_dir + "/checkpoint.abml");
            write_history_csv(result.fold_models[i].history, fold_dir + "/history.csv");
            write_predictions_csv(preds, fold_dir + "/predictions_test.csv");
        }
    }
    if (writing) {
        write_predictions_csv(result.cv_test_predictions, opts.out_dir + "/predictions_test.csv");
    }

    std::vector<AbmilParams> models;
    models.reserve(result.fold_models.size());
    for (const auto& fm : result.fold_models) models.push_back(fm.best_params);

    for (const auto& holdout : holdouts) {
        const auto hrecords = sorted_by_slide(holdout.records);
        PredictionSet preds;
        preds.n_classes = kNumSubtypes;
        preds.items.resize(hrecords.size());
        parallel_for(hrecords.size(), opts.workers, [&](std::size_t s) {
            const auto& rec = hrecords[s];
            const Eigen::VectorXd probs =
                ensemble_predict(models, bags.at(rec.slide_id), config);
            preds.items[s] =
                make_prediction(rec.slide_id, subtype_code(rec.label),
                                std::vector<double>(probs.data(), probs.data() + probs.size()));
        });
        if (writing) {
            write_predictions_csv(preds, opts.out_dir + "/predictions_" + holdout.tag + ".csv");
        }
        result.holdout_predictions.emplace(holdout.tag, std::move(preds));
    }
    return result;
}

ConfigEvaluator make_cv_evaluator(const std::vector<SlideRecord>& records,
                                  const std::map<std::string, FeatureBag>& bags, int k,
                                  std::uint64_t seed) {
    const auto folds = stratified_case_kfold(records, k, seed);
    return [records, &bags, folds, seed](const TrainConfig& config) {
        double total = 0.0;
        for (std::size_t i = 0; i < folds.size(); ++i) {
            TrainConfig fold_config = config;
            fold_config.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
            const auto train_refs = refs_for(slides_for_cases(records, folds[i].train_cases), bags);
            const auto val_refs = refs_for(slides_for_cases(records, folds[i].val_cases), bags);
            total += train_fold(train_refs, val_refs, fold_config).best_val_loss;
        }
        return total / static_cast<double>(folds.size());
    };
}

}  // namespace slidemil
