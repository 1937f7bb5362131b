#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "slidemil/abmil.hpp"

namespace slidemil {

struct TuningIteration {
    int index = 0;                     // 1-based
    std::vector<std::string> active;   // hyperparameter names adjusted here
};

struct TuningSchedule {
    std::vector<TuningIteration> iterations;
};

// CSV with header iteration,<ten hyperparameter names> and 0/1 marks.
// Validates contiguous 1-based numbering and 1..6 active names per row.
TuningSchedule load_tuning_schedule(const std::string& path);
TuningSchedule parse_tuning_schedule(const std::string& csv_text, const std::string& origin);

// Candidate values per hyperparameter, as raw strings.
using HyperGrids = std::map<std::string, std::vector<std::string>>;

struct TuningEvaluation {
    std::map<std::string, std::string> assignment;  // active name -> value
    TrainConfig config;
    double mean_val_loss = 0.0;
    bool selected = false;
};

struct TuningIterationTrace {
    int iteration = 0;
    std::vector<TuningEvaluation> evaluations;
    int selected_index = 0;
};

struct TuningTrace {
    std::vector<TuningIterationTrace> iterations;
};

// Scores one configuration; the real evaluator averages the best validation
// loss over the cross-validation folds. Must be safe to call concurrently.
using ConfigEvaluator = std::function<double(const TrainConfig&)>;

struct TuningResult {
    TrainConfig final_config;
    TuningTrace trace;
};

// Iterative grid search: per iteration, the Cartesian grid over the active
// hyperparameters is evaluated with all others frozen at the current best;
// the argmin is carried forward. Evaluator exceptions score +inf.
TuningResult run_tuning(const TuningSchedule& schedule, const HyperGrids& grids,
                        const TrainConfig& base_config, const ConfigEvaluator& evaluator,
                        int workers = 1);

void write_tuning_trace_csv(const TuningTrace& trace, const std::string& path);

}  // namespace slidemil
