#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "qdqn/supervised.hpp"

namespace qdqn {
namespace {

ModelConfig uqc_config(std::size_t n) {
    ModelConfig m;
    m.family = Family::UQC;
    m.qubits = n;
    m.layers = 5;
    return m;
}

TEST(Dataset, BalancedAndSplit) {
    const auto d = generate_dataset(6, 500, 3);
    EXPECT_EQ(d.size(), 500U);
    EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 1U), 250);
    EXPECT_EQ(d.train.size(), 400U);
    EXPECT_EQ(d.validation.size(), 100U);
    std::vector<std::size_t> all = d.train;
    all.insert(all.end(), d.validation.begin(), d.validation.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
        EXPECT_EQ(all[i], i);
    }
}

TEST(Dataset, ColumnsStandardized) {
    const auto d = generate_dataset(8, 500, 4);
    for (std::size_t j = 0; j < 8; ++j) {
        double s = 0.0;
        double sq = 0.0;
        for (const auto &row : d.features) {
            s += row[j];
            sq += row[j] * row[j];
        }
        const double mean = s / 500.0;
        EXPECT_NEAR(mean, 0.0, 1e-12);
        EXPECT_NEAR(sq / 500.0 - mean * mean, 1.0, 1e-12);
    }
}

TEST(Dataset, DeterministicPerSeed) {
    const auto a = generate_dataset(4, 200, 9);
    const auto b = generate_dataset(4, 200, 9);
    const auto c = generate_dataset(4, 200, 10);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.train, b.train);
    EXPECT_NE(a.features, c.features);
}

TEST(Dataset, RejectsBadArguments) {
    EXPECT_THROW(generate_dataset(1), std::invalid_argument);
    EXPECT_THROW(generate_dataset(4, 3), std::invalid_argument);
    EXPECT_THROW(generate_dataset(4, 100, 0, 1.0), std::invalid_argument);
}

TEST(Accuracy, TiedOutputsGiveChance) {
    const auto d = generate_dataset(4, 200, 1);
    ModelConfig cfg = uqc_config(2);
    cfg.observable_kind = ObservableKind::Global;
    const auto m = supervised_model(cfg, 4);
    std::mt19937_64 rng(1);
    const auto p = init_params(m, rng);
    std::vector<std::size_t> rows(d.size());
    std::iota(rows.begin(), rows.end(), 0);
    // Identical observables tie, and ties resolve to class 0.
    EXPECT_DOUBLE_EQ(accuracy(m, p, d, rows), 0.5);
}

TEST(OneHotMse, ZeroOnPerfectFit) {
    Dataset d;
    d.n_features = 2;
    d.features = {{0.0, 0.0}, {0.0, 0.0}};
    d.labels = {0, 0};
    d.train = {0, 1};
    ModelConfig cfg;
    cfg.qubits = 2;
    cfg.layers = 1;
    const auto m = supervised_model(cfg, 2);
    auto p = make_params(m, 0.0);
    p.input_weights()[0] = 1.0;
    p.input_weights()[1] = 1.0;
    p.output_weights()[0] = 1.0; // Q = [1, 0] = one-hot(0)
    AdjointDifferentiator diff(m);
    const auto lg = one_hot_mse(m, p, d, d.train, diff);
    EXPECT_EQ(lg.loss, 0.0);
    for (double g : lg.gradient) {
        EXPECT_EQ(g, 0.0);
    }
    EXPECT_EQ(accuracy(m, p, d, d.train), 1.0);
}

TEST(OneHotMse, HandValue) {
    Dataset d;
    d.n_features = 2;
    d.features = {{0.0, 0.0}};
    d.labels = {1};
    ModelConfig cfg;
    cfg.qubits = 2;
    cfg.layers = 1;
    const auto m = supervised_model(cfg, 2);
    auto p = make_params(m, 0.0);
    p.output_weights()[0] = 1.0;
    p.output_weights()[1] = 1.0;
    AdjointDifferentiator diff(m);
    const std::vector<std::size_t> rows{0};
    // Q = [1, 1] against [0, 1]: mean of (1, 0).
    EXPECT_DOUBLE_EQ(one_hot_mse(m, p, d, rows, diff).loss, 0.5);
}

TEST(Supervised, RequiresTwoOutputs) {
    ModelConfig cfg = uqc_config(2);
    cfg.observables = {{0}, {1}, {0, 1}};
    EXPECT_THROW(supervised_model(cfg, 4), std::invalid_argument);
}

TEST(Supervised, TrainingImprovesOnEasyData) {
    const auto d = generate_dataset(2, 200, 5);
    SupervisedConfig cfg;
    cfg.model = uqc_config(2);
    cfg.model.layers = 2;
    cfg.lr = {0.05, 0.05, 0.1};
    cfg.epochs = 8;
    cfg.seed = 2;
    cfg.keep_gradients = true;
    const auto r = train_supervised(cfg, d);
    ASSERT_EQ(r.train_accuracy.size(), 8U);
    ASSERT_EQ(r.epoch_loss.size(), 8U);
    EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
    EXPECT_GT(r.validation_accuracy.back(), 0.6);
    // 160 training rows in batches of 32.
    EXPECT_EQ(r.log.updates.size(), 8U * 5);
    EXPECT_EQ(r.log.updates[7].episode, 1U);
    EXPECT_FALSE(r.log.updates[0].gradient.empty());

    const auto again = train_supervised(cfg, d);
    EXPECT_EQ(r.epoch_loss, again.epoch_loss);
}

} // namespace
} // namespace qdqn
