#pragma once

#include "slidemil/predictions.hpp"

namespace slidemil {

// Mean over classes of per-class recall. Every class in [0, n_classes) must
// appear among the true labels.
double balanced_accuracy(const PredictionSet& preds);

// Unweighted mean of per-class F1; a class scores 0 when precision and
// recall are both 0.
double macro_f1(const PredictionSet& preds);

// One-vs-rest AUROC per class from the Mann-Whitney statistic with midranks
// (ties count 0.5), macro-averaged. Every class needs at least one positive
// and one negative.
double macro_auroc(const PredictionSet& preds);

double metric_by_name(const std::string& name, const PredictionSet& preds);
const std::vector<std::string>& metric_names();

}  // namespace slidemil
