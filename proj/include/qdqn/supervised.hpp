#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qdqn/ansatz.hpp"
#include "qdqn/dqn.hpp"
#include "qdqn/optimizer.hpp"

namespace qdqn {

/// Binary classification data with a fixed train/validation split.
struct Dataset {
    std::size_t n_features = 0;
    std::vector<std::vector<double>> features;
    std::vector<std::size_t> labels; ///< 0 or 1
    std::vector<std::size_t> train;  ///< row indices
    std::vector<std::size_t> validation;

    std::size_t size() const noexcept { return labels.size(); }
};

/// Two-class Gaussian-cluster data. Half the features (at least two) carry
/// the class signal, the rest are noisy linear mixtures of them. Columns are
/// standardized and the rows are split 80/20 after a seeded shuffle.
Dataset generate_dataset(std::size_t n_features, std::size_t n_samples = 500,
                         std::uint64_t seed = 0, double train_fraction = 0.8);

struct SupervisedConfig {
    ModelConfig model;
    LearningRates lr;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    bool keep_gradients = false;
};

struct SupervisedResult {
    std::vector<double> train_accuracy; ///< one entry per epoch, after the epoch's updates
    std::vector<double> validation_accuracy;
    std::vector<double> epoch_loss;     ///< mean minibatch loss over the epoch
    /// Updates in the RL log format; `episode` holds the epoch and `step` the
    /// update index.
    RunLog log;
};

/// Builds a two-output model for `cfg.model` with feature dimension equal to
/// the dataset's.
ModelSpec supervised_model(const ModelConfig &cfg, std::size_t n_features);

/// Fraction of `rows` whose argmax output matches the label.
double accuracy(const ModelSpec &model, const ParamSet &params, const Dataset &data,
                std::span<const std::size_t> rows);

/// Mean over rows and both outputs of the squared error against one-hot
/// targets, with its gradient.
LossGradient one_hot_mse(const ModelSpec &model, const ParamSet &params, const Dataset &data,
                         std::span<const std::size_t> rows, AdjointDifferentiator &diff);

/// Minibatch Adam training. Run `run` draws its initialization and batch
/// order from the (cfg.seed, run) stream.
SupervisedResult train_supervised(const SupervisedConfig &cfg, const Dataset &data,
                                  std::size_t run = 0);

} // namespace qdqn
