#include <doctest.h>

#include <cmath>
#include <numeric>

#include "flowpat/errors.hpp"
#include "flowpat/train.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace flowpat;

namespace {

/// Two linearly separable classes: label decided by vsl against a margin.
Dataset separable_dataset(std::size_t n, std::uint64_t seed) {
    rng::Engine g(seed);
    Dataset ds(LabelScheme::test1());
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector x = testutil::random_features(g);
        const bool low = rng::unit(g) < 0.5;
        x[kVsl] = low ? rng::uniform(g, 0.1, 0.9) : rng::uniform(g, 1.6, 4.0);
        ds.add(x, low ? FlowLabel::A : FlowLabel::B);
    }
    return ds;
}

TrainConfig quick_config(std::size_t epochs, std::uint64_t seed) {
    TrainConfig config;
    config.epochs = epochs;
    config.seed = seed;
    return config;
}

} // namespace

TEST_CASE("one_hot produces unit basis vectors") {
    const auto a = one_hot(FlowLabel::A, LabelScheme::test1());
    CHECK(a == std::vector<double>{1, 0, 0, 0, 0, 0});
    const auto seg = one_hot(FlowLabel::Segregate, LabelScheme::test3());
    CHECK(seg == std::vector<double>{0, 0, 1});
    for (const FlowLabel label : LabelScheme::test2().classes()) {
        const auto v = one_hot(label, LabelScheme::test2());
        CHECK(std::accumulate(v.begin(), v.end(), 0.0) == 1.0);
    }
    CHECK_THROWS_AS((void)one_hot(FlowLabel::ST, LabelScheme::test1()), ValidationError);
}

TEST_CASE("mse loss and gradient") {
    std::vector<double> grad(2);
    CHECK(mse_loss(std::vector<double>{0.3, -1.0}, std::vector<double>{0.3, -1.0},
                   grad) == 0.0);
    CHECK(grad == std::vector<double>{0.0, 0.0});

    CHECK(mse_loss(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0},
                   grad) == doctest::Approx(1.0));
    CHECK(grad[0] == doctest::Approx(1.0));  // (2/2)(1-0)
    CHECK(grad[1] == doctest::Approx(-1.0));

    std::vector<double> g3(3);
    CHECK_THROWS_AS((void)mse_loss(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0},
                                   grad),
                    ValidationError);
    (void)g3;
}

TEST_CASE("loss gradients match finite differences of the loss") {
    rng::Engine g(71);
    for (const bool use_mse : {true, false}) {
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t k = 2 + rng::below(g, 5);
            std::vector<double> output(k), target(k, 0.0), grad(k), probe(k);
            for (double& v : output) v = rng::uniform(g, -2.0, 2.0);
            target[rng::below(g, k)] = 1.0;

            const auto loss_fn = [&](std::span<const double> out) {
                return use_mse ? mse_loss(out, target, probe)
                               : cross_entropy_softmax_loss(out, target, probe);
            };
            const double base = use_mse ? mse_loss(output, target, grad)
                                        : cross_entropy_softmax_loss(output, target, grad);
            CHECK(std::isfinite(base));
            const double h = 1e-6;
            for (std::size_t i = 0; i < k; ++i) {
                std::vector<double> up = output, down = output;
                up[i] += h;
                down[i] -= h;
                const double fd = (loss_fn(up) - loss_fn(down)) / (2.0 * h);
                CHECK(std::fabs(fd - grad[i]) < 1e-8);
            }
        }
    }
}

TEST_CASE("cross entropy equals -log softmax of the true class") {
    std::vector<double> grad(3);
    const std::vector<double> output = {2.0, 0.5, -1.0};
    const std::vector<double> target = {0.0, 1.0, 0.0};
    const double loss = cross_entropy_softmax_loss(output, target, grad);
    const double denom = std::exp(2.0) + std::exp(0.5) + std::exp(-1.0);
    CHECK(loss == doctest::Approx(-std::log(std::exp(0.5) / denom)));
}

TEST_CASE("sgd_step applies penalties to weights only") {
    Model m = init_model(Topology::dense(1, {}, 1), {FlowLabel::A}, 3);
    m.weights[0].at(0, 0) = 1.0;
    m.biases[0][0] = 1.0;
    Gradients grads;
    grads.resize_like(m);
    grads.weights[0].at(0, 0) = 0.0;
    grads.biases[0][0] = 0.0;

    TrainConfig config;
    config.learning_rate = 1.0;
    config.l1_weight = 0.0;
    config.l2_weight = 1e-5;
    sgd_step(m, grads, config);
    CHECK(m.weights[0].at(0, 0) == doctest::Approx(0.99998)); // 1 - 2e-5
    CHECK(m.biases[0][0] == 1.0);                             // biases unregularized
}

TEST_CASE("regularization pulls weights toward zero") {
    rng::Engine g(9);
    Model m = init_model(Topology::dense(1, {}, 1), {FlowLabel::A}, 4);
    Gradients grads;
    grads.resize_like(m);
    grads.weights[0].at(0, 0) = 0.0;
    grads.biases[0][0] = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const double w = rng::uniform(g, -2.0, 2.0);
        if (w == 0.0) continue;
        m.weights[0].at(0, 0) = w;
        TrainConfig config;
        config.learning_rate = 1e-3;
        config.l1_weight = rng::unit(g) < 0.5 ? 1e-4 : 0.0;
        config.l2_weight = config.l1_weight > 0.0 ? 0.0 : 1e-4;
        sgd_step(m, grads, config);
        CHECK(std::fabs(m.weights[0].at(0, 0)) < std::fabs(w));
    }
}

TEST_CASE("train validates its preconditions") {
    rng::Engine g(10);
    const Dataset raw = testutil::random_dataset(g, LabelScheme::test1(), 30);
    const auto [ds, params] = standardize_fit(raw);
    const std::size_t hidden[] = {5};
    const Topology topology = Topology::dense(11, hidden, 6);
    const Model model = init_model(topology, LabelScheme::test1().classes(), 1);

    SUBCASE("epochs must be positive") {
        CHECK_THROWS_AS((void)train(model, ds, quick_config(0, 1)), ValidationError);
    }
    SUBCASE("training set must be standardized") {
        CHECK_THROWS_AS((void)train(model, raw, quick_config(3, 1)), ValidationError);
    }
    SUBCASE("scheme must match the model classes") {
        const Dataset merged = merge_labels(ds, LabelScheme::test3());
        CHECK_THROWS_AS((void)train(model, merged, quick_config(3, 1)), ValidationError);
    }
    SUBCASE("empty training set is rejected") {
        const Dataset empty(LabelScheme::test1());
        CHECK_THROWS_AS((void)train(model, empty, quick_config(3, 1)), ValidationError);
    }
}

TEST_CASE("training is deterministic per seed") {
    const Dataset raw = separable_dataset(80, 5);
    const auto [ds, params] = standardize_fit(raw);
    const std::size_t hidden[] = {8};
    const Topology topology = Topology::dense(11, hidden, 6);

    const Model m0 = init_model(topology, LabelScheme::test1().classes(), 7);
    const TrainReport a = train(m0, ds, quick_config(20, 7));
    const TrainReport b = train(m0, ds, quick_config(20, 7));
    CHECK(a.epoch_loss == b.epoch_loss);
    for (std::size_t l = 0; l < a.model.weights.size(); ++l) {
        CHECK(a.model.weights[l].data == b.model.weights[l].data);
        CHECK(a.model.biases[l] == b.model.biases[l]);
    }
}

TEST_CASE("a separable two-class problem trains to full accuracy") {
    const Dataset raw = separable_dataset(200, 42);
    const auto [ds, params] = standardize_fit(raw);
    const std::size_t hidden[] = {8};
    const Topology topology = Topology::dense(11, hidden, 6);
    Model model = init_model(topology, LabelScheme::test1().classes(), 42);

    TrainConfig config = quick_config(200, 42);
    config.learning_rate = 0.01;
    const TrainReport report = train(std::move(model), ds, config);
    CHECK(accuracy(report.model, ds) == 1.0);

    // Late-training loss must sit below early-training loss.
    const std::size_t tenth = config.epochs / 10;
    const double first = std::accumulate(report.epoch_loss.begin(),
                                         report.epoch_loss.begin() + tenth, 0.0);
    const double last = std::accumulate(report.epoch_loss.end() - tenth,
                                        report.epoch_loss.end(), 0.0);
    CHECK(last < first);
}

TEST_CASE("validation accuracy is tracked per epoch") {
    const Dataset raw = separable_dataset(60, 8);
    const auto [ds, params] = standardize_fit(raw);
    const Dataset val = standardize_apply(separable_dataset(30, 9), params);
    const std::size_t hidden[] = {6};
    Model model = init_model(Topology::dense(11, hidden, 6),
                             LabelScheme::test1().classes(), 2);
    const TrainReport report = train(std::move(model), ds, quick_config(5, 2), &val);
    CHECK(report.epoch_loss.size() == 5);
    CHECK(report.validation_accuracy.size() == 5);
    for (const double loss : report.epoch_loss) CHECK(std::isfinite(loss));
    for (const double acc : report.validation_accuracy) {
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }
}

TEST_CASE("divergence raises a structured error with the epoch") {
    const Dataset raw = separable_dataset(50, 3);
    const auto [ds, params] = standardize_fit(raw);
    const std::size_t hidden[] = {8};
    Model model = init_model(Topology::dense(11, hidden, 6),
                             LabelScheme::test1().classes(), 3);
    TrainConfig config = quick_config(50, 3);
    config.learning_rate = 1e9;
    CHECK_THROWS_AS((void)train(std::move(model), ds, config), DivergenceError);
}

TEST_CASE("zero-loss sample is predicted as its own label") {
    // Bias-only model emitting exactly the one-hot vector of class DB.
    Model m = init_model(Topology::dense(11, {}, 6), LabelScheme::test1().classes(), 1);
    std::fill(m.weights[0].data.begin(), m.weights[0].data.end(), 0.0);
    m.biases[0] = one_hot(FlowLabel::DB, LabelScheme::test1());

    rng::Engine g(31);
    const FeatureVector x = testutil::random_features(g);
    std::vector<double> grad(6);
    const double loss = mse_loss(forward_output(m, x),
                                 one_hot(FlowLabel::DB, LabelScheme::test1()), grad);
    CHECK(loss == 0.0);
    CHECK(predict_class(m, x) == FlowLabel::DB);
}

TEST_CASE("config files parse with defaults and reject unknown keys") {
    const TrainConfig defaults = parse_config_text("");
    CHECK(defaults.learning_rate == 0.01);
    CHECK(defaults.epochs == 500);
    CHECK(defaults.l1_weight == 1e-5);
    CHECK(defaults.l2_weight == 1e-5);
    CHECK(defaults.nfolds == 10);
    CHECK(defaults.loss == LossKind::MeanSquaredError);
    CHECK(defaults.hidden_topology == std::vector<std::size_t>{25, 25, 25});

    const TrainConfig parsed = parse_config_text(
        "# comment\nlearning_rate = 0.05\nepochs=100\nl1 = 0\nl2 = 2e-4\n"
        "loss = cross_entropy\nseed = 99\nnfolds = 5\nhidden_topology = 10,20\n");
    CHECK(parsed.learning_rate == 0.05);
    CHECK(parsed.epochs == 100);
    CHECK(parsed.l1_weight == 0.0);
    CHECK(parsed.l2_weight == 2e-4);
    CHECK(parsed.loss == LossKind::CrossEntropySoftmax);
    CHECK(parsed.seed == 99);
    CHECK(parsed.nfolds == 5);
    CHECK(parsed.hidden_topology == std::vector<std::size_t>{10, 20});

    CHECK_THROWS_AS((void)parse_config_text("momentum = 0.9\n"), ValidationError);
    CHECK_THROWS_AS((void)parse_config_text("epochs = 0\n"), ValidationError);
    CHECK_THROWS_AS((void)parse_config_text("epochs\n"), ValidationError);
}

TEST_CASE("cross-validation pools to the dataset size with disjoint folds") {
    rng::Engine g(61);
    Dataset ds(LabelScheme::test3());
    for (int i = 0; i < 90; ++i) {
        const auto& classes = LabelScheme::test3().classes();
        ds.add(testutil::random_features(g), classes[rng::below(g, classes.size())]);
    }
    const std::size_t hidden[] = {4};
    const Topology topology = Topology::dense(11, hidden, 3);
    TrainConfig config = quick_config(3, 11);
    config.nfolds = 5;

    const CvResult result = k_fold_cv(ds, topology, config);
    REQUIRE(result.per_fold.size() == 5);
    CHECK(result.pooled.total() == ds.size());

    std::uint64_t fold_sum = 0;
    for (const ConfusionMatrix& cm : result.per_fold) fold_sum += cm.total();
    CHECK(fold_sum == ds.size());

    // Determinism across runs, including the parallel fold scheduling.
    const CvResult again = k_fold_cv(ds, topology, config);
    for (std::size_t f = 0; f < result.per_fold.size(); ++f) {
        for (std::size_t i = 0; i < 3; ++i) {
            for (std::size_t j = 0; j < 3; ++j) {
                CHECK(result.per_fold[f].at(i, j) == again.per_fold[f].at(i, j));
            }
        }
    }

    TrainConfig bad = config;
    bad.nfolds = 91;
    CHECK_THROWS_AS((void)k_fold_cv(ds, topology, bad), ValidationError);
}

TEST_CASE("time decay shrinks the effective learning rate") {
    const Dataset raw = separable_dataset(40, 12);
    const auto [ds, params] = standardize_fit(raw);
    const std::size_t hidden[] = {5};
    const Model m = init_model(Topology::dense(11, hidden, 6),
                               LabelScheme::test1().classes(), 12);
    TrainConfig plain = quick_config(10, 12);
    TrainConfig decayed = plain;
    decayed.lr_time_decay = true;
    const TrainReport a = train(m, ds, plain);
    const TrainReport b = train(m, ds, decayed);
    // Same first epoch (decay factor 1 at epoch 0), different afterwards.
    CHECK(a.epoch_loss[0] == b.epoch_loss[0]);
    CHECK(a.epoch_loss.back() != b.epoch_loss.back());
}
