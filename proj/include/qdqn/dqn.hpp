#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qdqn/ansatz.hpp"
#include "qdqn/autodiff.hpp"
#include "qdqn/env.hpp"
#include "qdqn/optimizer.hpp"

namespace qdqn {

/// Features are stored already preprocessed.
struct Transition {
    std::vector<double> state;
    std::size_t action = 0;
    double reward = 0.0;
    std::vector<double> next_state;
    bool terminal = false;
};

/// Bounded FIFO of transitions; the oldest record is evicted first.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Transition t);
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }
    /// Index 0 is the oldest retained transition.
    const Transition &operator[](std::size_t i) const { return data_[i]; }

    /// k distinct transitions chosen uniformly (without replacement).
    std::vector<Transition> sample(std::size_t k, std::mt19937_64 &rng) const;

  private:
    std::size_t capacity_;
    std::deque<Transition> data_;
};

/// epsilon_e = max(eps_min, eps_init * eps_decay^e) after e episodes.
class EpsilonSchedule {
  public:
    EpsilonSchedule(double init = 1.0, double decay = 0.99, double min = 0.01);

    double value() const noexcept { return current_; }
    void advance() noexcept;
    std::size_t episodes() const noexcept { return episodes_; }

  private:
    double init_;
    double decay_;
    double min_;
    double current_;
    std::size_t episodes_ = 0;
};

struct TrainConfig {
    EnvId env = EnvId::CartPole;
    ModelConfig model;

    double gamma = 0.99;
    LearningRates lr;
    std::size_t batch_size = 16;
    double eps_init = 1.0;
    double eps_decay = 0.99;
    double eps_min = 0.01;
    std::size_t update_model = 1;
    std::size_t update_target = 1;
    std::size_t buffer_size = 10000;
    InitScheme init = InitScheme::Default;

    std::uint64_t seed = 0;
    std::size_t episodes = 500;
    std::size_t agents = 10;
    /// Trailing-window mean return at which training stops; nullopt disables.
    std::optional<double> solve_threshold = 195.0;
    std::size_t solve_window = 100;
    /// Whether RunLog keeps full gradient vectors (norms are always kept).
    bool keep_gradients = true;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;

    /// Hyperparameters of the Skolik ablation for the given environment.
    static TrainConfig defaults(EnvId env);
};

struct UpdateRecord {
    std::size_t step = 0;    ///< global environment step at which the update ran
    std::size_t episode = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    std::vector<double> gradient; ///< empty unless keep_gradients
};

struct RunLog {
    std::vector<double> returns;
    std::vector<UpdateRecord> updates;
    std::optional<std::size_t> solved_episode;
    std::size_t total_steps = 0;
};

/// Uniform random action with probability eps, else argmax (lowest index on ties).
std::size_t select_action(std::span<const double> q, double eps, std::mt19937_64 &rng);

/// r for terminal transitions, else r + gamma max_a Q_target(s', a).
std::vector<double> td_targets(std::span<const Transition> batch, const ModelSpec &model,
                               const ParamSet &target_params, double gamma);

struct LossGradient {
    double loss = 0.0;
    GradientVector gradient;
};

/// Mean squared TD error over the batch and its gradient with respect to the
/// online parameters; only Q(s, a_taken) is differentiated.
LossGradient loss_and_gradient(const ModelSpec &model, const ParamSet &params,
                               const ParamSet &target_params, std::span<const Transition> batch,
                               double gamma);

/// MSE between fixed targets and Q(s_i, a_i), with gradient.
LossGradient mse_and_gradient(const ModelSpec &model, const ParamSet &params,
                              std::span<const Transition> batch, std::span<const double> targets,
                              AdjointDifferentiator &diff);

/// One optimizer step. Returns the pre-update loss and gradient. Throws
/// TrainingAborted on a non-finite gradient.
LossGradient train_step(const ModelSpec &model, ParamSet &params, const ParamSet &target_params,
                        std::span<const Transition> batch, const TrainConfig &cfg, Adam &opt);

/// Copies params into target when step % C == 0. Returns whether it synced.
bool sync_target(const ParamSet &params, ParamSet &target_params, std::size_t step,
                 std::size_t C);

/// Trains one agent. The agent's random stream is derived from (cfg.seed, agent).
RunLog run_training(const TrainConfig &cfg, std::size_t agent = 0);

} // namespace qdqn
