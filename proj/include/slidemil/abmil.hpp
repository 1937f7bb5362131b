#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "slidemil/feature_bag.hpp"
#include "slidemil/subtype.hpp"

namespace slidemil {

struct ModelSize {
    int m1 = 512;  // projected feature / attention input width
    int m2 = 256;  // attention scorer hidden width

    bool operator==(const ModelSize&) const = default;
};

// All trainable tensors of the attention-MIL classifier.
struct AbmilParams {
    Eigen::MatrixXd w1;   // dim x m1 patch projection
    Eigen::VectorXd b1;   // m1
    Eigen::MatrixXd v;    // m1 x m2 attention hidden layer
    Eigen::VectorXd bv;   // m2
    Eigen::VectorXd w;    // m2 attention scorer
    Eigen::MatrixXd w2;   // m1 x k classifier head
    Eigen::VectorXd b2;   // k
    std::uint64_t revision = 0;  // bumped on every update; guards stale caches

    Eigen::Index dim() const { return w1.rows(); }
    Eigen::Index m1() const { return w1.cols(); }
    Eigen::Index m2() const { return v.cols(); }
    Eigen::Index k() const { return w2.cols(); }

    static AbmilParams zeros(Eigen::Index dim, int m1, int m2, int k = kNumSubtypes);
    // Scaled Gaussian init, deterministic in the seed.
    static AbmilParams init(Eigen::Index dim, ModelSize size, std::uint64_t seed,
                            int k = kNumSubtypes);

    void check_finite() const;
    bool same_shape(const AbmilParams& other) const;

    // Applies fn to every tensor of *this paired with the same tensor of
    // other (for optimizer updates and elementwise traversals).
    template <typename Fn>
    void for_each_tensor(AbmilParams& other, Fn&& fn) {
        fn(w1, other.w1);
        fn(b1, other.b1);
        fn(v, other.v);
        fn(bv, other.bv);
        fn(w, other.w);
        fn(w2, other.w2);
        fn(b2, other.b2);
    }
};

struct TrainConfig {
    double learning_rate = 1e-4;
    int lr_decay_patience = 10;      // epochs without improvement before decay
    double lr_decay_factor = 0.75;   // multiplier, (0, 1]
    double beta1 = 0.9;              // first moment decay
    double beta2 = 0.999;            // second moment decay
    double epsilon = 1e-8;           // optimisation stability
    double weight_decay = 0.0;       // L2, coupled into the gradient
    double dropout = 0.25;           // parameter dropout probability
    int max_patches = 4000;          // data dropout cap per training step
    ModelSize model_size{};
    int max_epochs = 100;
    std::uint64_t seed = 0;

    bool operator==(const TrainConfig&) const = default;
};

void validate_train_config(const TrainConfig& config);

struct AdamState {
    AbmilParams m;  // first moments
    AbmilParams v;  // second moments
    long step = 0;

    static AdamState zeros_like(const AbmilParams& params);
};

// Intermediates of one forward pass, consumed by backward().
struct ForwardCache {
    Eigen::MatrixXd h;          // selected patches x dim (after data dropout)
    Eigen::MatrixXd pre_u;      // n x m1, pre-relu
    Eigen::MatrixXd u;          // n x m1, post relu (and dropout in training)
    Eigen::MatrixXd drop_mask;  // n x m1 of 0/1; empty when dropout inactive
    double drop_scale = 1.0;
    Eigen::MatrixXd t;          // n x m2, tanh output
    Eigen::VectorXd attention;  // n, softmax over patches
    Eigen::VectorXd z;          // m1, attention-weighted feature mean
    Eigen::VectorXd logits;     // k
    std::uint64_t params_revision = 0;
};

struct ForwardResult {
    Eigen::VectorXd logits;
    Eigen::VectorXd attention;
    ForwardCache cache;
};

// relu projection -> tanh attention scorer -> softmax attention ->
// weighted feature mean -> linear head. In training mode, data dropout
// first subsamples min(n, max_patches) patches and parameter dropout zeroes
// projected features with probability `dropout`, scaling survivors.
// Patch-wise reductions use value-ordered summation, which makes logits
// exactly invariant under patch permutation.
ForwardResult forward(const Eigen::Ref<const Eigen::MatrixXd>& bag_features,
                      const AbmilParams& params, bool training_mode, std::uint64_t dropout_seed,
                      const TrainConfig& config);

ForwardResult forward(const FeatureBag& bag, const AbmilParams& params, bool training_mode,
                      std::uint64_t dropout_seed, const TrainConfig& config);

// Numerically stable softmax of the logits.
Eigen::VectorXd predict_proba(const Eigen::VectorXd& logits);

// w_c = n_total / (k * n_c) over training-fold slide counts.
std::vector<double> class_weights_from_counts(const std::vector<long>& counts);

// -w_label * log(p_label), with p floored at 1e-12.
double balanced_ce_loss(const Eigen::VectorXd& probs, int label,
                        const std::vector<double>& class_weights);

// Exact gradients of balanced_ce_loss(predict_proba(forward(...))) w.r.t.
// every parameter. The cache must come from a forward() on `params` with no
// optimizer step in between.
AbmilParams backward(const AbmilParams& params, const ForwardCache& cache, int label,
                     const std::vector<double>& class_weights);

// Classic Adam with bias correction; weight decay is added to the gradient
// before the moment updates. Uses config.learning_rate as the step size.
void adam_step(AbmilParams& params, const AbmilParams& grads, AdamState& state,
               const TrainConfig& config);

// One training example: a bag and its slide-level label.
struct BagRef {
    const FeatureBag* bag = nullptr;
    SubtypeLabel label = SubtypeLabel::HGSC;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double learning_rate = 0.0;
};

struct TrainResult {
    AbmilParams best_params;
    std::vector<EpochStats> history;
    double best_val_loss = 0.0;
    int best_epoch = 0;
    std::vector<double> class_weights;
};

// Class-weighted sampling (slide probability proportional to 1/n_class),
// one Adam step per drawn slide, plateau learning-rate decay, checkpoint at
// the epoch with minimum validation loss. Deterministic given config.seed.
TrainResult train_fold(const std::vector<BagRef>& train_bags, const std::vector<BagRef>& val_bags,
                       const TrainConfig& config);

// Mean balanced CE loss of eval-mode forward passes over a split.
double evaluate_loss(const std::vector<BagRef>& bags, const AbmilParams& params,
                     const std::vector<double>& class_weights, const TrainConfig& config);

}  // namespace slidemil
