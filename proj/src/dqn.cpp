#include "qdqn/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qdqn/errors.hpp"
#include "qdqn/random.hpp"

namespace qdqn {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) {
        throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    }
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() == capacity_) {
        data_.pop_front();
    }
    data_.push_back(std::move(t));
}

std::vector<Transition> ReplayBuffer::sample(std::size_t k, std::mt19937_64 &rng) const {
    if (k > data_.size()) {
        throw std::invalid_argument("ReplayBuffer: cannot sample " + std::to_string(k) +
                                    " from " + std::to_string(data_.size()) + " transitions");
    }
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    // Rejection is cheap: batches are tiny compared to the buffer.
    while (chosen.size() < k) {
        const std::size_t i = pick(rng);
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) {
            chosen.push_back(i);
        }
    }
    std::vector<Transition> out;
    out.reserve(k);
    for (auto i : chosen) {
        out.push_back(data_[i]);
    }
    return out;
}

EpsilonSchedule::EpsilonSchedule(double init, double decay, double min)
    : init_(init), decay_(decay), min_(min), current_(std::max(min, init)) {}

void EpsilonSchedule::advance() noexcept {
    ++episodes_;
    current_ = std::max(min_, init_ * std::pow(decay_, static_cast<double>(episodes_)));
}

void TrainConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw ConfigError("gamma", "must lie in [0, 1], got " + std::to_string(gamma));
    }
    if (!(lr.rotational > 0.0)) {
        throw ConfigError("lr_rotational", "learning rate must be positive");
    }
    if (!(lr.input > 0.0)) {
        throw ConfigError("lr_input", "learning rate must be positive");
    }
    if (!(lr.output > 0.0)) {
        throw ConfigError("lr_output", "learning rate must be positive");
    }
    if (batch_size == 0) {
        throw ConfigError("batch_size", "must be >= 1");
    }
    if (update_model == 0) {
        throw ConfigError("update_model", "must be >= 1");
    }
    if (update_target == 0) {
        throw ConfigError("update_target", "must be >= 1");
    }
    if (buffer_size < batch_size) {
        throw ConfigError("buffer_size", "must be at least batch_size");
    }
    if (!(eps_init >= 0.0 && eps_init <= 1.0)) {
        throw ConfigError("eps_init", "must lie in [0, 1]");
    }
    if (!(eps_decay > 0.0 && eps_decay <= 1.0)) {
        throw ConfigError("eps_decay", "must lie in (0, 1]");
    }
    if (!(eps_min >= 0.0 && eps_min <= 1.0)) {
        throw ConfigError("eps_min", "must lie in [0, 1]");
    }
    if (model.qubits == 0) {
        throw ConfigError("qubits", "must be >= 1");
    }
    if (model.layers == 0) {
        throw ConfigError("layers", "must be >= 1");
    }
    if (agents == 0) {
        throw ConfigError("agents", "must be >= 1");
    }
    if (solve_window == 0) {
        throw ConfigError("solve_window", "must be >= 1");
    }
}

TrainConfig TrainConfig::defaults(EnvId env) {
    TrainConfig c;
    c.env = env;
    if (env == EnvId::Acrobot) {
        c.batch_size = 32;
        c.update_model = 5;
        c.update_target = 250;
        c.buffer_size = 50000;
        c.episodes = 1000;
        c.solve_threshold.reset();
    }
    return c;
}

std::size_t select_action(std::span<const double> q, double eps, std::mt19937_64 &rng) {
    if (q.empty()) {
        throw std::invalid_argument("select_action: empty Q-vector");
    }
    if (eps > 0.0) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng) < eps) {
            std::uniform_int_distribution<std::size_t> pick(0, q.size() - 1);
            return pick(rng);
        }
    }
    return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

std::vector<double> td_targets(std::span<const Transition> batch, const ModelSpec &model,
                               const ParamSet &target_params, double gamma) {
    if (batch.empty()) {
        throw std::invalid_argument("td_targets: empty batch");
    }
    std::vector<double> y(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto &t = batch[i];
        if (t.terminal || gamma == 0.0) {
            y[i] = t.reward;
            continue;
        }
        const auto q = q_values(model, target_params, t.next_state);
        y[i] = t.reward + gamma * *std::max_element(q.begin(), q.end());
    }
    return y;
}

LossGradient mse_and_gradient(const ModelSpec &model, const ParamSet &params,
                              std::span<const Transition> batch, std::span<const double> targets,
                              AdjointDifferentiator &diff) {
    if (batch.empty() || targets.size() != batch.size()) {
        throw std::invalid_argument("mse_and_gradient: batch/target size mismatch");
    }
    LossGradient out;
    out.gradient.assign(model.num_trainable(), 0.0);
    std::vector<double> weights(model.num_actions(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto &t = batch[i];
        const auto q = diff.forward(params, t.state);
        const double err = q[t.action] - targets[i];
        out.loss += err * err * inv_b;
        std::fill(weights.begin(), weights.end(), 0.0);
        weights[t.action] = 2.0 * err * inv_b;
        diff.backward(weights, out.gradient);
    }
    return out;
}

LossGradient loss_and_gradient(const ModelSpec &model, const ParamSet &params,
                               const ParamSet &target_params, std::span<const Transition> batch,
                               double gamma) {
    const auto y = td_targets(batch, model, target_params, gamma);
    AdjointDifferentiator diff(model);
    return mse_and_gradient(model, params, batch, y, diff);
}

LossGradient train_step(const ModelSpec &model, ParamSet &params, const ParamSet &target_params,
                        std::span<const Transition> batch, const TrainConfig &cfg, Adam &opt) {
    if (batch.size() != cfg.batch_size) {
        throw std::invalid_argument("train_step: batch size " + std::to_string(batch.size()) +
                                    " != configured " + std::to_string(cfg.batch_size));
    }
    auto lg = loss_and_gradient(model, params, target_params, batch, cfg.gamma);
    for (std::size_t i = 0; i < lg.gradient.size(); ++i) {
        if (!std::isfinite(lg.gradient[i])) {
            throw TrainingAborted("non-finite gradient entry " + std::to_string(i) +
                                  " (loss " + std::to_string(lg.loss) + ")");
        }
    }
    opt.step(params, lg.gradient);
    return lg;
}

bool sync_target(const ParamSet &params, ParamSet &target_params, std::size_t step,
                 std::size_t C) {
    if (C == 0) {
        throw std::invalid_argument("sync_target: C must be >= 1");
    }
    if (step % C != 0) {
        return false;
    }
    target_params = params;
    return true;
}

RunLog run_training(const TrainConfig &cfg, std::size_t agent) {
    cfg.validate();
    auto rng = make_rng(cfg.seed, agent);
    auto env = make_environment(cfg.env);
    const ModelSpec model = build_model(cfg.model, cfg.env, env->observation_dim());
    ParamSet params = init_params(model, rng, cfg.init);
    ParamSet target = params;
    Adam opt(model, cfg.lr);
    ReplayBuffer buffer(cfg.buffer_size);
    EpsilonSchedule eps(cfg.eps_init, cfg.eps_decay, cfg.eps_min);

    RunLog log;
    log.returns.reserve(cfg.episodes);
    bool training = true;
    std::size_t step = 0;

    for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
        auto obs = preprocess(env->reset(rng), cfg.env);
        double ret = 0.0;
        bool done = false;
        while (!done) {
            const auto q = q_values(model, params, obs);
            const std::size_t a = select_action(q, training ? eps.value() : 0.0, rng);
            const StepResult sr = env->step(a);
            auto next = preprocess(sr.observation, cfg.env);
            ret += sr.reward;
            done = sr.done;
            // Time-limit endings are not terminal states for bootstrapping.
            buffer.push({obs, a, sr.reward, next, sr.done && !sr.truncated});
            obs = std::move(next);
            ++step;

            if (!training) {
                continue;
            }
            if (step % cfg.update_model == 0 && buffer.size() >= cfg.batch_size) {
                const auto batch = buffer.sample(cfg.batch_size, rng);
                LossGradient lg;
                try {
                    lg = train_step(model, params, target, batch, cfg, opt);
                } catch (const TrainingAborted &e) {
                    throw TrainingAborted("agent " + std::to_string(agent) + ", episode " +
                                          std::to_string(ep) + ", step " + std::to_string(step) +
                                          ": " + e.what());
                }
                UpdateRecord rec;
                rec.step = step;
                rec.episode = ep;
                rec.loss = lg.loss;
                rec.grad_norm = l2_norm(lg.gradient);
                if (cfg.keep_gradients) {
                    rec.gradient = std::move(lg.gradient);
                }
                log.updates.push_back(std::move(rec));
            }
            sync_target(params, target, step, cfg.update_target);
        }
        log.returns.push_back(ret);
        eps.advance();

        if (training && cfg.solve_threshold && log.returns.size() >= cfg.solve_window) {
            const double mean =
                std::accumulate(log.returns.end() - static_cast<std::ptrdiff_t>(cfg.solve_window),
                                log.returns.end(), 0.0) /
                static_cast<double>(cfg.solve_window);
            if (mean >= *cfg.solve_threshold) {
                training = false;
                log.solved_episode = ep;
            }
        }
    }
    log.total_steps = step;
    return log;
}

} // namespace qdqn
