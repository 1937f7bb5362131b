#pragma once

#include <array>
#include <string>
#include <vector>

#include "slidemil/subtype.hpp"

namespace slidemil {

struct Prediction {
    std::string slide_id;
    int true_label = 0;
    std::vector<double> probs;  // length n_classes, sums to ~1
    int predicted = 0;          // argmax, ties to the lowest class code
};

struct PredictionSet {
    std::vector<Prediction> items;
    int n_classes = kNumSubtypes;
};

// Lowest-code argmax of a probability vector.
int argmax_label(const std::vector<double>& probs);

// Builds a prediction with the argmax rule applied.
Prediction make_prediction(std::string slide_id, int true_label, std::vector<double> probs);

// CSV with header slide_id,true_label,p0..p4,predicted; labels by name.
void write_predictions_csv(const PredictionSet& preds, const std::string& path);
PredictionSet read_predictions_csv(const std::string& path);

}  // namespace slidemil
