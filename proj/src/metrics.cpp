#include "qdqn/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "qdqn/random.hpp"

namespace qdqn {

double mean_of(std::span<const double> v) {
    if (v.empty()) {
        return 0.0;
    }
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_variance(std::span<const double> v) {
    if (v.empty()) {
        return 0.0;
    }
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) {
        acc += (x - m) * (x - m);
    }
    return acc / static_cast<double>(v.size());
}

std::vector<double> rolling_mean(std::span<const double> v, std::size_t window) {
    if (window == 0) {
        throw std::invalid_argument("rolling_mean: window must be >= 1");
    }
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        sum += v[i];
        if (i >= window) {
            sum -= v[i - window];
        }
        const std::size_t n = std::min(i + 1, window);
        // Recompute exactly when the running sum could have drifted.
        if (i % 1024 == 1023) {
            sum = std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(i + 1 - n),
                                  v.begin() + static_cast<std::ptrdiff_t>(i + 1), 0.0);
        }
        out[i] = sum / static_cast<double>(n);
    }
    return out;
}

AggregateCurve aggregate_returns(std::span<const RunLog> logs) {
    if (logs.empty()) {
        throw std::invalid_argument("aggregate_returns: no logs");
    }
    const std::size_t m = logs.front().returns.size();
    for (const auto &l : logs) {
        if (l.returns.size() != m) {
            throw std::invalid_argument("aggregate_returns: agents ran different episode counts");
        }
    }
    AggregateCurve c;
    c.window = 1;
    std::vector<double> col(logs.size());
    for (std::size_t e = 0; e < m; ++e) {
        for (std::size_t k = 0; k < logs.size(); ++k) {
            col[k] = logs[k].returns[e];
        }
        c.x.push_back(e);
        c.mean.push_back(mean_of(col));
        c.spread.push_back(std::sqrt(population_variance(col)));
    }
    return c;
}

std::size_t aggregation_horizon(std::span<const RunLog> logs) {
    if (logs.empty()) {
        return 0;
    }
    std::size_t shortest = logs.front().updates.size();
    std::size_t first_solver = 0;
    std::size_t first_solved_episode = 0;
    bool any_solved = false;
    for (const auto &l : logs) {
        shortest = std::min(shortest, l.updates.size());
        if (l.solved_episode &&
            (!any_solved || *l.solved_episode < first_solved_episode ||
             (*l.solved_episode == first_solved_episode && l.updates.size() < first_solver))) {
            any_solved = true;
            first_solved_episode = *l.solved_episode;
            first_solver = l.updates.size();
        }
    }
    return any_solved ? std::min(first_solver, shortest) : shortest;
}

namespace {

template <class Extract>
AggregateCurve aggregate_updates(std::span<const RunLog> logs, std::size_t window, bool variance,
                                 Extract extract) {
    if (logs.empty()) {
        throw std::invalid_argument("aggregate: no logs");
    }
    if (window == 0) {
        throw std::invalid_argument("aggregate: window must be >= 1");
    }
    const std::size_t horizon = aggregation_horizon(logs);
    std::vector<double> mean(horizon);
    std::vector<double> spread(horizon);
    std::vector<double> col(logs.size());
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t k = 0; k < logs.size(); ++k) {
            col[k] = extract(logs[k].updates[t]);
        }
        mean[t] = mean_of(col);
        const double var = population_variance(col);
        spread[t] = variance ? var : std::sqrt(var);
    }
    AggregateCurve c;
    c.window = window;
    c.x.resize(horizon);
    std::iota(c.x.begin(), c.x.end(), std::size_t{0});
    c.mean = rolling_mean(mean, window);
    c.spread = rolling_mean(spread, window);
    return c;
}

} // namespace

AggregateCurve aggregate_gradients(std::span<const RunLog> logs, std::size_t window) {
    return aggregate_updates(logs, window, true,
                             [](const UpdateRecord &r) { return r.grad_norm; });
}

AggregateCurve aggregate_losses(std::span<const RunLog> logs, std::size_t window) {
    return aggregate_updates(logs, window, false, [](const UpdateRecord &r) { return r.loss; });
}

namespace {

DecayFit linear_fit(std::span<const double> x, std::span<const double> y, DecayModel model) {
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("fit_decay: abscissae must not all coincide");
    }
    DecayFit f;
    f.model = model;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += r * r;
    }
    // A constant series is fitted exactly by a zero slope.
    f.r_squared = syy == 0.0 ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    return f;
}

} // namespace

DecayFits fit_decay(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) {
        throw std::invalid_argument("fit_decay: need at least 3 points");
    }
    std::vector<double> n;
    std::vector<double> log_n;
    std::vector<double> log_v;
    for (const auto &[q, v] : points) {
        if (!(v > 0.0)) {
            throw std::invalid_argument("fit_decay: variances must be positive");
        }
        if (!(q > 0.0)) {
            throw std::invalid_argument("fit_decay: qubit counts must be positive");
        }
        n.push_back(q);
        log_n.push_back(std::log(q));
        log_v.push_back(std::log(v));
    }
    return {linear_fit(n, log_v, DecayModel::Exponential),
            linear_fit(log_n, log_v, DecayModel::Polynomial)};
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)> &fn) {
    if (workers == 0) {
        workers = std::max(1U, std::thread::hardware_concurrency());
    }
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                }
            }
        });
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

std::vector<Transition> first_training_batch(std::size_t batch_size, std::uint64_t seed) {
    auto rng = make_rng(seed, 0x5ca7);
    CartPole env;
    std::vector<Transition> batch;
    std::uniform_int_distribution<std::size_t> pick(0, 1);
    while (batch.size() < batch_size) {
        auto obs = preprocess(env.reset(rng), EnvId::CartPole);
        bool done = false;
        while (!done && batch.size() < batch_size) {
            const std::size_t a = pick(rng);
            const auto sr = env.step(a);
            auto next = preprocess(sr.observation, EnvId::CartPole);
            batch.push_back({obs, a, sr.reward, next, sr.done && !sr.truncated});
            obs = std::move(next);
            done = sr.done;
        }
    }
    return batch;
}

BpPoint summarize_norms(std::size_t qubits, std::vector<double> norms) {
    BpPoint p;
    p.qubits = qubits;
    p.variance = population_variance(norms);
    p.mean_norm = mean_of(norms);
    p.norms = std::move(norms);
    return p;
}

std::vector<BpPoint> bp_scan(const ModelBuilder &builder, std::span<const std::size_t> qubits,
                             const BpScanOptions &opts) {
    if (opts.samples == 0) {
        throw std::invalid_argument("bp_scan: samples must be >= 1");
    }
    const auto batch = first_training_batch(opts.batch_size, opts.seed);
    std::vector<BpPoint> out;
    for (const std::size_t n : qubits) {
        const ModelSpec model = builder(n);
        std::vector<double> norms(opts.samples);
        parallel_for(opts.samples, opts.parallelism, [&](std::size_t s) {
            auto rng = make_rng(opts.seed, (static_cast<std::uint64_t>(n) << 32) | s);
            const ParamSet params = init_params(model, rng, InitScheme::Uniform2Pi);
            const auto lg = loss_and_gradient(model, params, params, batch, opts.gamma);
            norms[s] = l2_norm(lg.gradient);
        });
        out.push_back(summarize_norms(n, std::move(norms)));
    }
    return out;
}

} // namespace qdqn
