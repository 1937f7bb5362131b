#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "slidemil/abmil.hpp"
#include "slidemil/checkpoint.hpp"
#include "slidemil/errors.hpp"
#include "slidemil/rng.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace slidemil;

namespace {

TrainConfig small_config(int m1 = 4, int m2 = 2) {
    TrainConfig c;
    c.model_size = {m1, m2};
    c.dropout = 0.0;
    c.max_patches = 1000;
    return c;
}

std::vector<double> uniform_weights() { return {1, 1, 1, 1, 1}; }

}  // namespace

TEST_CASE("forward: singleton bag has attention exactly 1") {
    const auto bag = synthetic::random_bag(1, 6, 1);
    const auto params = AbmilParams::init(6, {4, 2}, 7);
    const auto res = forward(bag, params, false, 0, small_config());
    REQUIRE(res.attention.size() == 1);
    CHECK(res.attention[0] == 1.0);
}

TEST_CASE("forward: identical patches share attention 0.5") {
    FeatureBag bag = synthetic::random_bag(1, 6, 2);
    bag.features.conservativeResize(2, 6);
    bag.features.row(1) = bag.features.row(0);
    bag.coords.push_back(bag.coords[0]);
    const auto params = AbmilParams::init(6, {4, 2}, 8);
    const auto res = forward(bag, params, false, 0, small_config());
    CHECK(res.attention[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(res.attention[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("forward matches a straight-line recomputation") {
    const auto bag = synthetic::random_bag(3, 4, 3);
    const auto params = AbmilParams::init(4, {4, 2}, 9);
    const auto res = forward(bag, params, false, 0, small_config());

    std::vector<std::vector<double>> h(3, std::vector<double>(4));
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 4; ++j) h[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            static_cast<double>(bag.features(i, j));
    }
    const auto plain = oracles::plain_forward(h, params);
    for (int c = 0; c < 5; ++c) {
        CHECK(res.logits[c] ==
              doctest::Approx(plain.logits[static_cast<std::size_t>(c)]).epsilon(1e-12));
    }
    for (int i = 0; i < 3; ++i) {
        CHECK(res.attention[i] ==
              doctest::Approx(plain.attention[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
}

TEST_CASE("forward errors") {
    const auto params = AbmilParams::init(6, {4, 2}, 10);
    SUBCASE("empty bag") {
        Eigen::MatrixXd empty(0, 6);
        CHECK_THROWS_AS(forward(empty, params, false, 0, small_config()), shape_error);
    }
    SUBCASE("dim mismatch") {
        const auto bag = synthetic::random_bag(3, 5, 4);
        CHECK_THROWS_AS(forward(bag, params, false, 0, small_config()), shape_error);
    }
}

TEST_CASE("attention properties over random bags") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(30));
        const auto bag = synthetic::random_bag(n, 8, 100 + static_cast<std::uint64_t>(trial));
        const auto params = AbmilParams::init(8, {6, 3}, 200 + static_cast<std::uint64_t>(trial));
        const auto res = forward(bag, params, false, 0, small_config(6, 3));

        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            CHECK(res.attention[i] > 0.0);
            sum += res.attention[i];
        }
        CHECK(std::fabs(sum - 1.0) < 1e-9);

        // Permuted bag: same attention values under the permutation, logits
        // exactly equal.
        std::vector<std::size_t> perm(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        rng.shuffle(perm);
        FeatureBag shuffled = bag;
        for (int i = 0; i < n; ++i) {
            shuffled.features.row(i) = bag.features.row(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
        }
        const auto res2 = forward(shuffled, params, false, 0, small_config(6, 3));
        for (int i = 0; i < n; ++i) {
            CHECK(res2.attention[i] == res.attention[static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)])]);
        }
        for (int c = 0; c < 5; ++c) {
            CHECK(res2.logits[c] == res.logits[c]);  // bitwise
        }
    }
}

TEST_CASE("data dropout with max_patches >= n is the identity") {
    const auto bag = synthetic::random_bag(12, 6, 21);
    const auto params = AbmilParams::init(6, {4, 2}, 22);
    TrainConfig config = small_config();
    config.max_patches = 12;
    const auto eval_res = forward(bag, params, false, 0, config);
    const auto train_res = forward(bag, params, true, 777, config);  // dropout 0
    for (int c = 0; c < 5; ++c) CHECK(train_res.logits[c] == eval_res.logits[c]);
}

TEST_CASE("data dropout subsamples to max_patches") {
    const auto bag = synthetic::random_bag(30, 6, 23);
    const auto params = AbmilParams::init(6, {4, 2}, 24);
    TrainConfig config = small_config();
    config.max_patches = 7;
    const auto res = forward(bag, params, true, 3, config);
    CHECK(res.attention.size() == 7);
    CHECK(res.cache.h.rows() == 7);
}

TEST_CASE("eval-mode forward ignores the dropout seed") {
    const auto bag = synthetic::random_bag(9, 6, 25);
    const auto params = AbmilParams::init(6, {4, 2}, 26);
    TrainConfig config = small_config();
    config.dropout = 0.5;
    const auto a = forward(bag, params, false, 1, config);
    const auto b = forward(bag, params, false, 999, config);
    for (int c = 0; c < 5; ++c) CHECK(a.logits[c] == b.logits[c]);
}

TEST_CASE("predict_proba") {
    SUBCASE("equal logits give the uniform distribution") {
        const Eigen::VectorXd probs = predict_proba(Eigen::VectorXd::Constant(5, 3.7));
        for (int c = 0; c < 5; ++c) CHECK(probs[c] == doctest::Approx(0.2).epsilon(1e-15));
    }
    SUBCASE("huge logit saturates without overflow") {
        Eigen::VectorXd logits = Eigen::VectorXd::Zero(5);
        logits[0] = 1000.0;
        const Eigen::VectorXd probs = predict_proba(logits);
        CHECK(probs[0] == doctest::Approx(1.0).epsilon(1e-12));
        for (int c = 1; c < 5; ++c) CHECK(probs[c] == 0.0);
        CHECK(std::fabs(probs.sum() - 1.0) < 1e-12);
    }
    SUBCASE("matches a direct exp-normalise") {
        Eigen::VectorXd logits(5);
        logits << 1, 2, 3, 4, 5;
        const Eigen::VectorXd probs = predict_proba(logits);
        double denom = 0.0;
        for (int c = 0; c < 5; ++c) denom += std::exp(static_cast<double>(c + 1));
        for (int c = 0; c < 5; ++c) {
            CHECK(probs[c] ==
                  doctest::Approx(std::exp(static_cast<double>(c + 1)) / denom).epsilon(1e-14));
        }
        CHECK(std::fabs(probs.sum() - 1.0) < 1e-12);
    }
    SUBCASE("non-finite logits are rejected") {
        Eigen::VectorXd logits = Eigen::VectorXd::Zero(5);
        logits[2] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(predict_proba(logits), numeric_error);
    }
}

TEST_CASE("balanced CE loss and class weights") {
    SUBCASE("training-set counts reproduce the published weighting") {
        const std::vector<long> counts = {1266, 92, 198, 209, 99};
        const auto weights = class_weights_from_counts(counts);
        CHECK(weights[0] == doctest::Approx(1864.0 / (5.0 * 1266.0)).epsilon(1e-15));
        CHECK(weights[0] == doctest::Approx(0.2945).epsilon(2e-4));
        CHECK(weights[1] == doctest::Approx(4.052).epsilon(1e-4));
    }
    SUBCASE("uniform counts give unit weights") {
        for (double w : class_weights_from_counts({7, 7, 7, 7, 7})) {
            CHECK(w == doctest::Approx(1.0).epsilon(1e-15));
        }
    }
    SUBCASE("perfect probability gives zero loss") {
        Eigen::VectorXd probs = Eigen::VectorXd::Zero(5);
        probs[2] = 1.0;
        CHECK(balanced_ce_loss(probs, 2, uniform_weights()) == 0.0);
    }
    SUBCASE("zero probability is clamped, not fatal") {
        Eigen::VectorXd probs = Eigen::VectorXd::Zero(5);
        probs[0] = 1.0;
        const double loss = balanced_ce_loss(probs, 3, uniform_weights());
        CHECK(loss == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
    }
    SUBCASE("zero count is invalid") {
        CHECK_THROWS_AS(class_weights_from_counts({5, 0, 5, 5, 5}), validation_error);
    }
}

TEST_CASE("backward gradients match central finite differences") {
    Rng rng(33);
    double worst = 0.0;
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(8));
        const int dim = 2 + static_cast<int>(rng.uniform_int(10));
        const int m1 = 2 + static_cast<int>(rng.uniform_int(6));
        const int m2 = 1 + static_cast<int>(rng.uniform_int(4));
        const auto bag = synthetic::random_bag(n, dim, 500 + static_cast<std::uint64_t>(trial));
        const auto params = AbmilParams::init(dim, {m1, m2},
                                              600 + static_cast<std::uint64_t>(trial));
        const int label = static_cast<int>(rng.uniform_int(5));
        std::vector<double> weights(5);
        for (auto& w : weights) w = 0.5 + rng.uniform();

        TrainConfig config = small_config(m1, m2);
        const bool with_dropout = trial % 3 == 0;
        if (with_dropout) config.dropout = 0.3;
        const Eigen::MatrixXd features = bag.features.cast<double>();
        worst = std::max(worst, oracles::gradient_check(features, params, label, weights, config,
                                                        with_dropout, 42));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("backward: saturated softmax gives a zero head-bias gradient") {
    const auto bag = synthetic::random_bag(3, 4, 61);
    auto params = AbmilParams::init(4, {4, 2}, 62);
    // Make the true class logit overwhelmingly large via its head bias.
    params.b2[1] = 2000.0;
    const auto res = forward(bag, params, false, 0, small_config());
    const auto grads = backward(params, res.cache, 1, uniform_weights());
    for (int c = 0; c < 5; ++c) CHECK(grads.b2[c] == 0.0);
}

TEST_CASE("backward: doubling the class weight doubles every gradient") {
    const auto bag = synthetic::random_bag(4, 5, 63);
    const auto params = AbmilParams::init(5, {4, 2}, 64);
    const auto res = forward(bag, params, false, 0, small_config());
    const auto g1 = backward(params, res.cache, 2, {1, 1, 1, 1, 1});
    const auto g2 = backward(params, res.cache, 2, {1, 1, 2, 1, 1});
    CHECK((g2.w1 - 2.0 * g1.w1).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((g2.v - 2.0 * g1.v).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((g2.b2 - 2.0 * g1.b2).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("backward rejects a stale cache") {
    const auto bag = synthetic::random_bag(3, 4, 65);
    auto params = AbmilParams::init(4, {4, 2}, 66);
    auto res = forward(bag, params, false, 0, small_config());
    AdamState state = AdamState::zeros_like(params);
    const auto grads = backward(params, res.cache, 0, uniform_weights());
    adam_step(params, grads, state, small_config());
    CHECK_THROWS_AS(backward(params, res.cache, 0, uniform_weights()), validation_error);
}

TEST_CASE("adam step") {
    SUBCASE("zero gradients leave parameters unchanged") {
        auto params = AbmilParams::init(4, {4, 2}, 71);
        const auto before = params;
        AdamState state = AdamState::zeros_like(params);
        const auto zeros = AbmilParams::zeros(4, 4, 2);
        TrainConfig config = small_config();
        config.weight_decay = 0.0;
        adam_step(params, zeros, state, config);
        CHECK((params.w1 - before.w1).cwiseAbs().maxCoeff() == 0.0);
        CHECK((params.b2 - before.b2).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("single scalar step from zeroed state") {
        // One parameter, gradient 1: mhat = 1, vhat = 1, so the update is
        // exactly -lr / (1 + eps).
        auto params = AbmilParams::zeros(1, 1, 1);
        AdamState state = AdamState::zeros_like(params);
        auto grads = AbmilParams::zeros(1, 1, 1);
        grads.w1(0, 0) = 1.0;
        TrainConfig config = small_config(1, 1);
        config.learning_rate = 0.1;
        config.epsilon = 1e-8;
        config.weight_decay = 0.0;
        adam_step(params, grads, state, config);
        CHECK(params.w1(0, 0) == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-15));
    }
    SUBCASE("two steps with the rn50 moment settings match a hand recurrence") {
        // beta1 0.75, beta2 0.95, eps 1e-2; gradients 1 then 0.5 on a scalar.
        auto params = AbmilParams::zeros(1, 1, 1);
        AdamState state = AdamState::zeros_like(params);
        TrainConfig config = small_config(1, 1);
        config.learning_rate = 2e-3;
        config.beta1 = 0.75;
        config.beta2 = 0.95;
        config.epsilon = 1e-2;
        config.weight_decay = 0.0;

        double theta = 0.0, m = 0.0, v = 0.0;
        const double g_steps[2] = {1.0, 0.5};
        for (int t = 1; t <= 2; ++t) {
            const double g = g_steps[t - 1];
            m = 0.75 * m + 0.25 * g;
            v = 0.95 * v + 0.05 * g * g;
            const double mhat = m / (1.0 - std::pow(0.75, t));
            const double vhat = v / (1.0 - std::pow(0.95, t));
            theta -= 2e-3 * mhat / (std::sqrt(vhat) + 1e-2);

            auto grads = AbmilParams::zeros(1, 1, 1);
            grads.w1(0, 0) = g;
            adam_step(params, grads, state, config);
            CHECK(params.w1(0, 0) == doctest::Approx(theta).epsilon(1e-15));
        }
    }
    SUBCASE("weight decay couples into the gradient") {
        auto params = AbmilParams::zeros(1, 1, 1);
        params.w1(0, 0) = 2.0;
        AdamState state = AdamState::zeros_like(params);
        const auto zeros = AbmilParams::zeros(1, 1, 1);
        TrainConfig config = small_config(1, 1);
        config.learning_rate = 0.1;
        config.weight_decay = 0.5;
        config.epsilon = 1e-8;
        adam_step(params, zeros, state, config);
        // Effective gradient 0.5*2 = 1, so mhat = vhat = 1.
        CHECK(params.w1(0, 0) == doctest::Approx(2.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-12));
    }
    SUBCASE("non-finite gradient aborts") {
        auto params = AbmilParams::zeros(1, 1, 1);
        AdamState state = AdamState::zeros_like(params);
        auto grads = AbmilParams::zeros(1, 1, 1);
        grads.w1(0, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(adam_step(params, grads, state, small_config(1, 1)), numeric_error);
    }
}

TEST_CASE("class-weighted sampling equalises class frequencies") {
    // Slide counts from the training set; probability of drawing a class
    // must approach 1/5 regardless of imbalance.
    const std::vector<long> counts = {1266, 92, 198, 209, 99};
    std::vector<int> labels;
    for (int c = 0; c < 5; ++c) {
        for (long i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) labels.push_back(c);
    }
    std::vector<double> cumulative(labels.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        acc += 1.0 / static_cast<double>(counts[static_cast<std::size_t>(labels[i])]);
        cumulative[i] = acc;
    }
    Rng rng(4242);
    std::vector<long> drawn(5, 0);
    const int draws = 100000;
    for (int d = 0; d < draws; ++d) {
        const double u = rng.uniform() * acc;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        const auto idx = static_cast<std::size_t>(it - cumulative.begin());
        drawn[static_cast<std::size_t>(labels[std::min(idx, labels.size() - 1)])]++;
    }
    for (int c = 0; c < 5; ++c) {
        const double freq = static_cast<double>(drawn[static_cast<std::size_t>(c)]) / draws;
        CHECK(std::fabs(freq - 0.2) < 0.01);
    }
}

TEST_CASE("train_fold on a separable synthetic task") {
    const auto task = synthetic::make_mil_task(60, 8, 4, 10, 0.4, 4.0, 90);
    std::vector<BagRef> train, val;
    for (std::size_t i = 0; i < task.bags.size(); ++i) {
        // Labels cycle through the classes, so block splits keep all five
        // classes in both halves.
        (i < 45 ? train : val).push_back({&task.bags[i], task.labels[i]});
    }
    TrainConfig config;
    config.learning_rate = 1e-2;
    config.model_size = {8, 4};
    config.dropout = 0.1;
    config.max_epochs = 50;
    config.seed = 5;
    const TrainResult result = train_fold(train, val, config);
    CHECK(result.best_val_loss < 0.1);
    CHECK(result.history.size() == 50);

    SUBCASE("identical seeds reproduce the history bit for bit") {
        const TrainResult again = train_fold(train, val, config);
        REQUIRE(again.history.size() == result.history.size());
        for (std::size_t e = 0; e < result.history.size(); ++e) {
            CHECK(again.history[e].train_loss == result.history[e].train_loss);
            CHECK(again.history[e].val_loss == result.history[e].val_loss);
            CHECK(again.history[e].learning_rate == result.history[e].learning_rate);
        }
    }
}

TEST_CASE("train_fold with lr_decay_factor 1 keeps the learning rate constant") {
    const auto task = synthetic::make_mil_task(30, 6, 3, 6, 0.4, 3.0, 91);
    std::vector<BagRef> train, val;
    for (std::size_t i = 0; i < task.bags.size(); ++i) {
        (i < 20 ? train : val).push_back({&task.bags[i], task.labels[i]});
    }
    TrainConfig config;
    config.learning_rate = 5e-3;
    config.lr_decay_factor = 1.0;
    config.lr_decay_patience = 1;
    config.model_size = {6, 3};
    config.dropout = 0.0;
    config.max_epochs = 12;
    config.seed = 6;
    const TrainResult result = train_fold(train, val, config);
    for (const auto& e : result.history) CHECK(e.learning_rate == 5e-3);
}

TEST_CASE("train_fold validates inputs") {
    const auto task = synthetic::make_mil_task(10, 6, 3, 6, 0.4, 3.0, 92);
    const auto refs = synthetic::refs_of(task);
    TrainConfig config;
    config.model_size = {6, 3};
    SUBCASE("empty validation split") {
        CHECK_THROWS_AS(train_fold(refs, {}, config), shape_error);
    }
    SUBCASE("missing class in training") {
        std::vector<BagRef> train(refs.begin(), refs.begin() + 4);  // classes 0..3 only
        std::vector<BagRef> val(refs.begin() + 5, refs.end());
        CHECK_THROWS_AS(train_fold(train, val, config), validation_error);
    }
    SUBCASE("bad config rejected") {
        TrainConfig bad = config;
        bad.beta1 = 1.0;
        CHECK_THROWS_AS(train_fold(refs, refs, bad), config_error);
    }
}

TEST_CASE("checkpoint round trip preserves parameters and config") {
    const auto dir = std::filesystem::temp_directory_path() / "slidemil_ckpt";
    std::filesystem::create_directories(dir);
    const auto params = AbmilParams::init(7, {5, 3}, 77);
    TrainConfig config;
    config.learning_rate = 2e-3;
    config.model_size = {5, 3};
    config.max_patches = 123;
    config.seed = 99;
    const auto path = (dir / "model.abml").string();
    write_checkpoint(params, config, path);
    const Checkpoint ckpt = read_checkpoint(path);
    CHECK(ckpt.params.w1 == params.w1);
    CHECK(ckpt.params.b2 == params.b2);
    CHECK(ckpt.config.learning_rate == config.learning_rate);
    CHECK(ckpt.config.max_patches == 123);
    CHECK(ckpt.config.seed == 99);

    SUBCASE("bad magic is rejected") {
        const auto bad = (dir / "bad.abml").string();
        std::ofstream out(bad, std::ios::binary);
        out << "NOPE" << std::string(40, '\0');
        out.close();
        CHECK_THROWS_AS(read_checkpoint(bad), format_error);
    }
}
