#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qdqn/ansatz.hpp"
#include "qdqn/dqn.hpp"

namespace qdqn {

/// Cross-agent curve. `spread` is the standard deviation for returns and
/// losses and the (population) variance for gradient norms.
struct AggregateCurve {
    std::vector<std::size_t> x;
    std::vector<double> mean;
    std::vector<double> spread;
    std::size_t window = 1;

    std::size_t size() const noexcept { return x.size(); }
};

double mean_of(std::span<const double> v);
/// Divide-by-N variance.
double population_variance(std::span<const double> v);

/// Trailing mean over the last `window` values; the first entries average
/// whatever prefix is available.
std::vector<double> rolling_mean(std::span<const double> v, std::size_t window);

/// Per-episode mean and standard deviation of returns across agents.
AggregateCurve aggregate_returns(std::span<const RunLog> logs);

/// Number of training steps kept when aggregating per-update quantities: the
/// update count of the first agent to solve, or of the shortest log when no
/// agent solved.
std::size_t aggregation_horizon(std::span<const RunLog> logs);

/// Mean gradient norm across agents (mean) and variance of the norms
/// (spread) per training step, both smoothed by a trailing window.
AggregateCurve aggregate_gradients(std::span<const RunLog> logs, std::size_t window = 100);

/// Mean loss (mean) and its standard deviation (spread) across agents, smoothed.
AggregateCurve aggregate_losses(std::span<const RunLog> logs, std::size_t window = 100);

enum class DecayModel { Exponential, Polynomial };

/// log v = intercept + slope * n (exponential) or intercept + slope * log n
/// (polynomial); r_squared is computed in that log space.
struct DecayFit {
    DecayModel model = DecayModel::Exponential;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

struct DecayFits {
    DecayFit exponential;
    DecayFit polynomial;
};

/// Requires >= 3 points with positive n and variance.
DecayFits fit_decay(std::span<const std::pair<double, double>> points);

struct BpScanOptions {
    std::size_t samples = 1000;
    std::size_t batch_size = 16;
    double gamma = 0.99;
    std::uint64_t seed = 0;
    /// Worker threads; 0 means hardware concurrency.
    std::size_t parallelism = 0;
};

struct BpPoint {
    std::size_t qubits = 0;
    double variance = 0.0;  ///< variance of the loss-gradient norm across samples
    double mean_norm = 0.0;
    std::vector<double> norms;
};

using ModelBuilder = std::function<ModelSpec(std::size_t n_qubits)>;

/// The batch seen at the first CartPole training step: the first
/// `batch_size` transitions of a uniformly random policy.
std::vector<Transition> first_training_batch(std::size_t batch_size, std::uint64_t seed);

/// Variance and mean of one width's sampled norms.
BpPoint summarize_norms(std::size_t qubits, std::vector<double> norms);

/// For each width, samples parameters uniformly in [0, 2pi] and returns the
/// variance of the loss-gradient norm at the first training batch.
std::vector<BpPoint> bp_scan(const ModelBuilder &builder, std::span<const std::size_t> qubits,
                             const BpScanOptions &opts);

/// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)> &fn);

} // namespace qdqn
