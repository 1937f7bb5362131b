#include "slidemil/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "slidemil/errors.hpp"

namespace slidemil {

namespace {

void check_classes_present(const PredictionSet& preds) {
    if (preds.items.empty()) {
        throw shape_error("metrics need a non-empty prediction set");
    }
    std::vector<bool> present(static_cast<std::size_t>(preds.n_classes), false);
    for (const auto& p : preds.items) {
        if (p.true_label < 0 || p.true_label >= preds.n_classes) {
            throw validation_error("true label outside the class universe");
        }
        present[static_cast<std::size_t>(p.true_label)] = true;
    }
    for (int c = 0; c < preds.n_classes; ++c) {
        if (!present[static_cast<std::size_t>(c)]) {
            throw degenerate_error("metric undefined: class " + std::to_string(c) +
                                   " has no true examples");
        }
    }
}

}  // namespace

double balanced_accuracy(const PredictionSet& preds) {
    check_classes_present(preds);
    std::vector<long> truth(static_cast<std::size_t>(preds.n_classes), 0);
    std::vector<long> hits(static_cast<std::size_t>(preds.n_classes), 0);
    for (const auto& p : preds.items) {
        ++truth[static_cast<std::size_t>(p.true_label)];
        if (p.predicted == p.true_label) ++hits[static_cast<std::size_t>(p.true_label)];
    }
    double acc = 0.0;
    for (int c = 0; c < preds.n_classes; ++c) {
        acc += static_cast<double>(hits[static_cast<std::size_t>(c)]) /
               static_cast<double>(truth[static_cast<std::size_t>(c)]);
    }
    return acc / preds.n_classes;
}

double macro_f1(const PredictionSet& preds) {
    check_classes_present(preds);
    double total = 0.0;
    for (int c = 0; c < preds.n_classes; ++c) {
        long tp = 0, fp = 0, fn = 0;
        for (const auto& p : preds.items) {
            const bool truth = p.true_label == c;
            const bool pred = p.predicted == c;
            if (truth && pred) ++tp;
            if (!truth && pred) ++fp;
            if (truth && !pred) ++fn;
        }
        // F1 = 2 tp / (2 tp + fp + fn); 0 when the class is never predicted
        // and never hit.
        const double denom = static_cast<double>(2 * tp + fp + fn);
        total += denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    }
    return total / preds.n_classes;
}

double macro_auroc(const PredictionSet& preds) {
    check_classes_present(preds);
    if (preds.n_classes < 2) {
        throw degenerate_error("AUROC needs at least two classes");
    }
    double total = 0.0;
    for (int c = 0; c < preds.n_classes; ++c) {
        std::vector<double> scores;
        std::vector<bool> positive;
        scores.reserve(preds.items.size());
        for (const auto& p : preds.items) {
            scores.push_back(p.probs[static_cast<std::size_t>(c)]);
            positive.push_back(p.true_label == c);
        }
        const long n_pos = std::count(positive.begin(), positive.end(), true);
        const long n_neg = static_cast<long>(positive.size()) - n_pos;
        if (n_pos == 0 || n_neg == 0) {
            throw degenerate_error("AUROC undefined: class " + std::to_string(c) +
                                   " lacks positives or negatives");
        }

        // Midrank Mann-Whitney: AUC = (R_pos - n_pos(n_pos+1)/2) / (n_pos n_neg).
        std::vector<std::size_t> order(scores.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        std::vector<double> rank(scores.size());
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
            const double midrank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) rank[order[k]] = midrank;
            i = j + 1;
        }
        double rank_pos = 0.0;
        for (std::size_t k = 0; k < rank.size(); ++k) {
            if (positive[k]) rank_pos += rank[k];
        }
        const double auc =
            (rank_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0) /
            (static_cast<double>(n_pos) * static_cast<double>(n_neg));
        total += auc;
    }
    return total / preds.n_classes;
}

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {"balanced_accuracy", "macro_auroc",
                                                   "macro_f1"};
    return names;
}

double metric_by_name(const std::string& name, const PredictionSet& preds) {
    if (name == "balanced_accuracy") return balanced_accuracy(preds);
    if (name == "macro_auroc") return macro_auroc(preds);
    if (name == "macro_f1") return macro_f1(preds);
    throw config_error("unknown metric '" + name + "'");
}

}  // namespace slidemil
