#pragma once

#include <map>
#include <string>
#include <vector>

#include "slidemil/abmil.hpp"
#include "slidemil/manifest.hpp"
#include "slidemil/predictions.hpp"
#include "slidemil/splits.hpp"
#include "slidemil/tuning.hpp"

namespace slidemil {

// Loads every record's feature bag, keyed by slide id; bags must agree on
// the feature dimension.
std::map<std::string, FeatureBag> load_bags(const std::vector<SlideRecord>& records);

// Arithmetic mean of the member probability vectors; models must share
// (dim, k).
Eigen::VectorXd ensemble_predict(const std::vector<AbmilParams>& models, const FeatureBag& bag,
                                 const TrainConfig& config);

struct HoldoutSet {
    std::string tag;  // names predictions_<tag>.csv
    std::vector<SlideRecord> records;
};

struct ExperimentOptions {
    int k = 5;
    int workers = 1;
    std::string out_dir;  // run directory; created if missing
    std::map<std::string, std::string> config_echo;  // extra keys for config.kv
};

struct ExperimentResult {
    std::vector<FoldSplit> folds;
    std::vector<TrainResult> fold_models;
    std::vector<PredictionSet> fold_test_predictions;
    PredictionSet cv_test_predictions;  // folds concatenated in order
    std::map<std::string, PredictionSet> holdout_predictions;
};

// Full cross-validated run: stratified case splits, one trained model per
// fold (fold seed derived from config.seed), fold-level test predictions,
// and ensembled predictions for each hold-out manifest. All artifacts are
// written under out_dir: config.kv, folds.csv, fold{i}/checkpoint.abml,
// fold{i}/history.csv, fold{i}/predictions_test.csv, predictions_test.csv,
// predictions_<tag>.csv.
ExperimentResult run_experiment(const std::vector<SlideRecord>& records,
                                const std::vector<HoldoutSet>& holdouts,
                                const TrainConfig& config, const ExperimentOptions& opts);

// Evaluator for run_tuning: mean over the k folds of the best validation
// loss, on splits fixed by (records, k, seed).
ConfigEvaluator make_cv_evaluator(const std::vector<SlideRecord>& records,
                                  const std::map<std::string, FeatureBag>& bags, int k,
                                  std::uint64_t seed);

void write_history_csv(const std::vector<EpochStats>& history, const std::string& path);

}  // namespace slidemil
