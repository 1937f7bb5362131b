#include "slidemil/abmil.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "slidemil/errors.hpp"
#include "slidemil/numeric.hpp"
#include "slidemil/rng.hpp"

namespace slidemil {

AbmilParams AbmilParams::zeros(Eigen::Index dim, int m1, int m2, int k) {
    AbmilParams p;
    p.w1 = Eigen::MatrixXd::Zero(dim, m1);
    p.b1 = Eigen::VectorXd::Zero(m1);
    p.v = Eigen::MatrixXd::Zero(m1, m2);
    p.bv = Eigen::VectorXd::Zero(m2);
    p.w = Eigen::VectorXd::Zero(m2);
    p.w2 = Eigen::MatrixXd::Zero(m1, k);
    p.b2 = Eigen::VectorXd::Zero(k);
    return p;
}

AbmilParams AbmilParams::init(Eigen::Index dim, ModelSize size, std::uint64_t seed, int k) {
    if (dim < 1 || size.m1 < 1 || size.m2 < 1 || k < 2) {
        throw shape_error("invalid model dimensions");
    }
    AbmilParams p = zeros(dim, size.m1, size.m2, k);
    Rng rng(seed);
    auto fill = [&rng](Eigen::MatrixXd& mat, double fan_in, double fan_out) {
        const double scale = std::sqrt(2.0 / (fan_in + fan_out));
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            for (Eigen::Index j = 0; j < mat.cols(); ++j) {
                mat(i, j) = scale * rng.gaussian();
            }
        }
    };
    auto fill_vec = [&rng](Eigen::VectorXd& vec, double fan_in, double fan_out) {
        const double scale = std::sqrt(2.0 / (fan_in + fan_out));
        for (Eigen::Index i = 0; i < vec.size(); ++i) {
            vec[i] = scale * rng.gaussian();
        }
    };
    fill(p.w1, static_cast<double>(dim), size.m1);
    fill(p.v, size.m1, size.m2);
    fill_vec(p.w, size.m2, 1.0);
    fill(p.w2, size.m1, k);
    return p;
}

void AbmilParams::check_finite() const {
    if (!w1.allFinite() || !b1.allFinite() || !v.allFinite() || !bv.allFinite() ||
        !w.allFinite() || !w2.allFinite() || !b2.allFinite()) {
        throw numeric_error("model parameters contain non-finite values");
    }
}

bool AbmilParams::same_shape(const AbmilParams& other) const {
    return dim() == other.dim() && m1() == other.m1() && m2() == other.m2() && k() == other.k();
}

void validate_train_config(const TrainConfig& config) {
    if (config.learning_rate <= 0.0) throw config_error("learning_rate must be positive");
    if (config.lr_decay_patience < 0) throw config_error("lr_decay_patience must be >= 0");
    if (config.lr_decay_factor <= 0.0 || config.lr_decay_factor > 1.0) {
        throw config_error("lr_decay_factor must be in (0, 1]");
    }
    if (config.beta1 <= 0.0 || config.beta1 >= 1.0) throw config_error("beta1 must be in (0, 1)");
    if (config.beta2 <= 0.0 || config.beta2 >= 1.0) throw config_error("beta2 must be in (0, 1)");
    if (config.epsilon <= 0.0) throw config_error("epsilon must be positive");
    if (config.weight_decay < 0.0) throw config_error("weight_decay must be >= 0");
    if (config.dropout < 0.0 || config.dropout >= 1.0) {
        throw config_error("dropout must be in [0, 1)");
    }
    if (config.max_patches < 1) throw config_error("max_patches must be >= 1");
    if (config.model_size.m1 < 1 || config.model_size.m2 < 1) {
        throw config_error("model_size dimensions must be positive");
    }
    if (config.max_epochs < 1) throw config_error("max_epochs must be >= 1");
}

AdamState AdamState::zeros_like(const AbmilParams& params) {
    AdamState s;
    s.m = AbmilParams::zeros(params.dim(), static_cast<int>(params.m1()),
                             static_cast<int>(params.m2()), static_cast<int>(params.k()));
    s.v = AbmilParams::zeros(params.dim(), static_cast<int>(params.m1()),
                             static_cast<int>(params.m2()), static_cast<int>(params.k()));
    return s;
}

namespace {

// Value-ordered column reduction: the result depends only on the multiset of
// addends, so patch order cannot perturb it.
Eigen::VectorXd stable_colwise_sum(const Eigen::MatrixXd& mat, std::vector<double>& buffer) {
    Eigen::VectorXd out(mat.cols());
    buffer.resize(static_cast<std::size_t>(mat.rows()));
    for (Eigen::Index j = 0; j < mat.cols(); ++j) {
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            buffer[static_cast<std::size_t>(i)] = mat(i, j);
        }
        std::sort(buffer.begin(), buffer.end());
        double acc = 0.0;
        for (double x : buffer) acc += x;
        out[j] = acc;
    }
    return out;
}

}  // namespace

ForwardResult forward(const Eigen::Ref<const Eigen::MatrixXd>& bag_features,
                      const AbmilParams& params, bool training_mode, std::uint64_t dropout_seed,
                      const TrainConfig& config) {
    const Eigen::Index n_all = bag_features.rows();
    if (n_all == 0) {
        throw shape_error("cannot run the classifier on an empty bag");
    }
    if (bag_features.cols() != params.dim()) {
        throw shape_error("bag feature dim " + std::to_string(bag_features.cols()) +
                          " does not match model dim " + std::to_string(params.dim()));
    }

    ForwardCache cache;
    Rng rng(dropout_seed);

    // Data dropout: uniform patch subsample without replacement.
    if (training_mode && n_all > config.max_patches) {
        const auto idx = rng.sample_without_replacement(
            static_cast<std::size_t>(n_all), static_cast<std::size_t>(config.max_patches));
        cache.h.resize(static_cast<Eigen::Index>(idx.size()), bag_features.cols());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            cache.h.row(static_cast<Eigen::Index>(i)) =
                bag_features.row(static_cast<Eigen::Index>(idx[i]));
        }
    } else {
        cache.h = bag_features;
    }
    const Eigen::Index n = cache.h.rows();

    // Row-by-row products: each patch's projection is computed identically
    // regardless of its position, which GEMM blocking does not guarantee,
    // and the permutation-equivariance contract needs exactly.
    cache.pre_u.resize(n, params.m1());
    for (Eigen::Index i = 0; i < n; ++i) {
        cache.pre_u.row(i) = cache.h.row(i) * params.w1 + params.b1.transpose();
    }
    cache.u = cache.pre_u.cwiseMax(0.0);

    // Parameter dropout on the projected features, inverted scaling.
    if (training_mode && config.dropout > 0.0) {
        cache.drop_scale = 1.0 / (1.0 - config.dropout);
        cache.drop_mask.resize(n, params.m1());
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < params.m1(); ++j) {
                cache.drop_mask(i, j) = rng.uniform() < config.dropout ? 0.0 : 1.0;
            }
        }
        cache.u = cache.u.cwiseProduct(cache.drop_mask) * cache.drop_scale;
    }

    cache.t.resize(n, params.m2());
    Eigen::VectorXd scores(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cache.t.row(i) =
            (cache.u.row(i) * params.v + params.bv.transpose()).array().tanh().matrix();
        scores[i] = cache.t.row(i) * params.w;
    }

    // Softmax over patches: scalar exp (exact underflow to zero) and a
    // value-ordered denominator.
    const double score_max = scores.maxCoeff();
    Eigen::VectorXd expd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        expd[i] = std::exp(scores[i] - score_max);
    }
    std::vector<double> buffer(expd.data(), expd.data() + expd.size());
    std::sort(buffer.begin(), buffer.end());
    double denom = 0.0;
    for (double x : buffer) denom += x;
    cache.attention = expd / denom;

    const Eigen::MatrixXd weighted =
        (cache.u.array().colwise() * cache.attention.array()).matrix();
    std::vector<double> colbuf;
    cache.z = stable_colwise_sum(weighted, colbuf);

    cache.logits = params.w2.transpose() * cache.z + params.b2;
    cache.params_revision = params.revision;

    ForwardResult result;
    result.logits = cache.logits;
    result.attention = cache.attention;
    result.cache = std::move(cache);
    return result;
}

ForwardResult forward(const FeatureBag& bag, const AbmilParams& params, bool training_mode,
                      std::uint64_t dropout_seed, const TrainConfig& config) {
    const Eigen::MatrixXd features = bag.features.cast<double>();
    return forward(features, params, training_mode, dropout_seed, config);
}

Eigen::VectorXd predict_proba(const Eigen::VectorXd& logits) {
    if (!logits.allFinite()) {
        throw numeric_error("logits contain non-finite values");
    }
    const double m = logits.maxCoeff();
    Eigen::VectorXd e(logits.size());
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        e[i] = std::exp(logits[i] - m);
    }
    return e / e.sum();
}

std::vector<double> class_weights_from_counts(const std::vector<long>& counts) {
    long total = 0;
    for (long c : counts) {
        if (c <= 0) {
            throw validation_error("class weights need a positive slide count per class");
        }
        total += c;
    }
    std::vector<double> weights(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) {
        weights[c] = static_cast<double>(total) /
                     (static_cast<double>(counts.size()) * static_cast<double>(counts[c]));
    }
    return weights;
}

double balanced_ce_loss(const Eigen::VectorXd& probs, int label,
                        const std::vector<double>& class_weights) {
    if (label < 0 || label >= probs.size() ||
        static_cast<std::size_t>(probs.size()) != class_weights.size()) {
        throw shape_error("loss label/probability shapes disagree");
    }
    const double p = std::max(probs[label], 1e-12);
    return -class_weights[static_cast<std::size_t>(label)] * std::log(p);
}

AbmilParams backward(const AbmilParams& params, const ForwardCache& cache, int label,
                     const std::vector<double>& class_weights) {
    if (cache.params_revision != params.revision) {
        throw validation_error("forward cache is stale: parameters changed since the pass");
    }
    if (cache.u.cols() != params.m1() || cache.t.cols() != params.m2() ||
        cache.logits.size() != params.k() || cache.h.cols() != params.dim()) {
        throw shape_error("forward cache does not match parameter shapes");
    }
    if (label < 0 || label >= params.k() ||
        class_weights.size() != static_cast<std::size_t>(params.k())) {
        throw shape_error("loss label/class-weight shapes disagree");
    }

    const double wy = class_weights[static_cast<std::size_t>(label)];

    AbmilParams g = AbmilParams::zeros(params.dim(), static_cast<int>(params.m1()),
                                       static_cast<int>(params.m2()),
                                       static_cast<int>(params.k()));

    // Head: d(-wy log softmax_y(logits)) = wy * (p - onehot(y)).
    Eigen::VectorXd dlogits = predict_proba(cache.logits) * wy;
    dlogits[label] -= wy;
    g.b2 = dlogits;
    g.w2 = cache.z * dlogits.transpose();

    const Eigen::VectorXd dz = params.w2 * dlogits;

    // z = sum_i a_i u_i.
    const Eigen::VectorXd da = cache.u * dz;
    Eigen::MatrixXd du = cache.attention * dz.transpose();

    // Softmax over patches: ds_i = a_i * (da_i - sum_j a_j da_j).
    const double da_dot_a = cache.attention.dot(da);
    const Eigen::VectorXd ds = cache.attention.cwiseProduct(da) - cache.attention * da_dot_a;

    g.w = cache.t.transpose() * ds;
    const Eigen::MatrixXd dpre_v =
        ((ds * params.w.transpose()).array() * (1.0 - cache.t.array().square())).matrix();
    g.bv = dpre_v.colwise().sum().transpose();
    g.v = cache.u.transpose() * dpre_v;
    du += dpre_v * params.v.transpose();

    // Undo dropout scaling, then gate through the relu.
    if (cache.drop_mask.size() > 0) {
        du = du.cwiseProduct(cache.drop_mask) * cache.drop_scale;
    }
    const Eigen::MatrixXd dpre_u =
        (du.array() * (cache.pre_u.array() > 0.0).cast<double>()).matrix();
    g.b1 = dpre_u.colwise().sum().transpose();
    g.w1 = cache.h.transpose() * dpre_u;
    return g;
}

void adam_step(AbmilParams& params, const AbmilParams& grads, AdamState& state,
               const TrainConfig& config) {
    if (!params.same_shape(grads)) {
        throw shape_error("gradient shapes do not match parameters");
    }
    if (!grads.w1.allFinite() || !grads.b1.allFinite() || !grads.v.allFinite() ||
        !grads.bv.allFinite() || !grads.w.allFinite() || !grads.w2.allFinite() ||
        !grads.b2.allFinite()) {
        throw numeric_error("non-finite gradient: training diverged");
    }

    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    auto update = [&](auto& theta, const auto& grad, auto& m, auto& v) {
        const auto geff = (grad.array() + config.weight_decay * theta.array()).eval();
        m.array() = config.beta1 * m.array() + (1.0 - config.beta1) * geff;
        v.array() = config.beta2 * v.array() + (1.0 - config.beta2) * geff.square();
        theta.array() -=
            config.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.epsilon);
    };

    update(params.w1, grads.w1, state.m.w1, state.v.w1);
    update(params.b1, grads.b1, state.m.b1, state.v.b1);
    update(params.v, grads.v, state.m.v, state.v.v);
    update(params.bv, grads.bv, state.m.bv, state.v.bv);
    update(params.w, grads.w, state.m.w, state.v.w);
    update(params.w2, grads.w2, state.m.w2, state.v.w2);
    update(params.b2, grads.b2, state.m.b2, state.v.b2);
    params.revision += 1;
}

double evaluate_loss(const std::vector<BagRef>& bags, const AbmilParams& params,
                     const std::vector<double>& class_weights, const TrainConfig& config) {
    if (bags.empty()) {
        throw shape_error("cannot evaluate loss on an empty split");
    }
    double total = 0.0;
    for (const auto& ref : bags) {
        const ForwardResult res = forward(*ref.bag, params, false, 0, config);
        total += balanced_ce_loss(predict_proba(res.logits), subtype_code(ref.label),
                                  class_weights);
    }
    return total / static_cast<double>(bags.size());
}

TrainResult train_fold(const std::vector<BagRef>& train_bags, const std::vector<BagRef>& val_bags,
                       const TrainConfig& config) {
    validate_train_config(config);
    if (train_bags.empty() || val_bags.empty()) {
        throw shape_error("train and validation splits must be non-empty");
    }
    const Eigen::Index dim = train_bags.front().bag->dim();
    for (const auto& ref : train_bags) {
        if (ref.bag->dim() != dim) throw shape_error("training bags disagree on feature dim");
    }
    for (const auto& ref : val_bags) {
        if (ref.bag->dim() != dim) throw shape_error("validation bags disagree on feature dim");
    }

    std::vector<long> counts(kNumSubtypes, 0);
    for (const auto& ref : train_bags) counts[static_cast<std::size_t>(subtype_code(ref.label))]++;
    for (int c = 0; c < kNumSubtypes; ++c) {
        if (counts[static_cast<std::size_t>(c)] == 0) {
            throw validation_error(std::string("training fold has no slides of class ") +
                                   kSubtypeNames[c]);
        }
    }
    const std::vector<double> class_weights = class_weights_from_counts(counts);

    // Slide probability proportional to 1/n_class: cumulative weights walked
    // with a hand-rolled uniform for cross-platform determinism.
    std::vector<double> cumulative(train_bags.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < train_bags.size(); ++i) {
        acc += 1.0 / static_cast<double>(
                         counts[static_cast<std::size_t>(subtype_code(train_bags[i].label))]);
        cumulative[i] = acc;
    }
    const double weight_total = acc;

    AbmilParams params =
        AbmilParams::init(dim, config.model_size, derive_seed(config.seed, 0x1a17));
    AdamState state = AdamState::zeros_like(params);
    Rng sampler(derive_seed(config.seed, 0x5a3b));

    TrainResult result;
    result.class_weights = class_weights;
    result.best_val_loss = std::numeric_limits<double>::infinity();

    TrainConfig step_config = config;  // carries the decayed learning rate
    double lr = config.learning_rate;
    int epochs_since_improvement = 0;
    constexpr double kImprovementThreshold = 1e-6;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        step_config.learning_rate = lr;
        double train_loss_sum = 0.0;
        for (std::size_t step = 0; step < train_bags.size(); ++step) {
            const double u = sampler.uniform() * weight_total;
            const std::size_t pick = static_cast<std::size_t>(
                std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
            const BagRef& ref = train_bags[std::min(pick, train_bags.size() - 1)];

            const std::uint64_t dropout_seed = sampler.raw();
            const ForwardResult res = forward(*ref.bag, params, true, dropout_seed, step_config);
            const double loss = balanced_ce_loss(predict_proba(res.logits),
                                                 subtype_code(ref.label), class_weights);
            if (!std::isfinite(loss)) {
                throw numeric_error("training loss diverged at epoch " + std::to_string(epoch));
            }
            train_loss_sum += loss;
            const AbmilParams grads =
                backward(params, res.cache, subtype_code(ref.label), class_weights);
            adam_step(params, grads, state, step_config);
        }

        const double val_loss = evaluate_loss(val_bags, params, class_weights, config);
        if (!std::isfinite(val_loss)) {
            throw numeric_error("validation loss diverged at epoch " + std::to_string(epoch));
        }
        result.history.push_back({epoch, train_loss_sum / static_cast<double>(train_bags.size()),
                                  val_loss, lr});

        if (val_loss < result.best_val_loss - kImprovementThreshold) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            result.best_params = params;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
            if (epochs_since_improvement >= config.lr_decay_patience) {
                lr *= config.lr_decay_factor;
                epochs_since_improvement = 0;
            }
        }
    }
    return result;
}

}  // namespace slidemil
