#include "qdqn/supervised.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "qdqn/errors.hpp"
#include "qdqn/random.hpp"

namespace qdqn {

namespace {

constexpr double kClassSep = 1.0;
constexpr double kRedundantNoise = 0.1;
constexpr std::size_t kClustersPerClass = 2;

} // namespace

Dataset generate_dataset(std::size_t n_features, std::size_t n_samples, std::uint64_t seed,
                         double train_fraction) {
    if (n_features < 2) {
        throw std::invalid_argument("generate_dataset: need at least 2 features");
    }
    if (n_samples < 2 * kClustersPerClass) {
        throw std::invalid_argument("generate_dataset: too few samples");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("generate_dataset: train_fraction must lie in (0, 1)");
    }
    auto rng = make_rng(seed, 0xda7a);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    const std::size_t n_inf = std::max<std::size_t>(2, n_features / 2);
    const std::size_t n_red = n_features - n_inf;
    const std::size_t n_clusters = 2 * kClustersPerClass;

    // Distinct hypercube vertices as cluster centres.
    const std::size_t n_vertices = n_inf >= 63 ? ~std::size_t{0} : (std::size_t{1} << n_inf);
    std::uniform_int_distribution<std::size_t> vertex(0, n_vertices - 1);
    std::vector<std::size_t> chosen;
    while (chosen.size() < n_clusters) {
        const std::size_t v = vertex(rng);
        if (std::find(chosen.begin(), chosen.end(), v) == chosen.end()) {
            chosen.push_back(v);
        }
    }
    std::vector<std::vector<double>> centres(n_clusters, std::vector<double>(n_inf));
    std::vector<std::vector<double>> mix(n_clusters, std::vector<double>(n_inf * n_inf));
    for (std::size_t c = 0; c < n_clusters; ++c) {
        for (std::size_t j = 0; j < n_inf; ++j) {
            centres[c][j] = ((chosen[c] >> (j % 63)) & 1U) ? kClassSep : -kClassSep;
        }
        for (auto &m : mix[c]) {
            m = unit(rng);
        }
    }
    std::vector<double> redundant(n_inf * n_red);
    for (auto &b : redundant) {
        b = unit(rng);
    }

    Dataset d;
    d.n_features = n_features;
    d.features.assign(n_samples, std::vector<double>(n_features));
    d.labels.resize(n_samples);
    std::vector<double> z(n_inf);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t label = i < n_samples / 2 ? 0 : 1;
        const std::size_t offset = label == 0 ? 0 : n_samples / 2;
        const std::size_t per_class = label == 0 ? n_samples / 2 : n_samples - n_samples / 2;
        const std::size_t c = label * kClustersPerClass +
                              std::min((i - offset) * kClustersPerClass / per_class,
                                       kClustersPerClass - 1);
        d.labels[i] = label;
        for (auto &v : z) {
            v = gauss(rng);
        }
        auto &row = d.features[i];
        for (std::size_t j = 0; j < n_inf; ++j) {
            double acc = centres[c][j];
            for (std::size_t k = 0; k < n_inf; ++k) {
                acc += z[k] * mix[c][k * n_inf + j];
            }
            row[j] = acc;
        }
        for (std::size_t r = 0; r < n_red; ++r) {
            double acc = kRedundantNoise * gauss(rng);
            for (std::size_t k = 0; k < n_inf; ++k) {
                acc += row[k] * redundant[k * n_red + r];
            }
            row[n_inf + r] = acc;
        }
    }

    for (std::size_t j = 0; j < n_features; ++j) {
        double mean = 0.0;
        for (const auto &row : d.features) {
            mean += row[j];
        }
        mean /= static_cast<double>(n_samples);
        double var = 0.0;
        for (const auto &row : d.features) {
            var += (row[j] - mean) * (row[j] - mean);
        }
        const double sd = std::sqrt(var / static_cast<double>(n_samples));
        for (auto &row : d.features) {
            row[j] = sd > 0.0 ? (row[j] - mean) / sd : 0.0;
        }
    }

    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n_samples)));
    d.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    d.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return d;
}

ModelSpec supervised_model(const ModelConfig &cfg, std::size_t n_features) {
    // The two CartPole observables double as the class outputs.
    ModelSpec m = build_model(cfg, EnvId::CartPole, n_features);
    if (m.num_actions() != 2) {
        throw std::invalid_argument("supervised model needs exactly 2 outputs, got " +
                                    std::to_string(m.num_actions()));
    }
    return m;
}

double accuracy(const ModelSpec &model, const ParamSet &params, const Dataset &data,
                std::span<const std::size_t> rows) {
    if (rows.empty()) {
        return 0.0;
    }
    AdjointDifferentiator diff(model);
    std::size_t hits = 0;
    for (const auto r : rows) {
        const auto q = diff.forward(params, data.features.at(r));
        const auto pred = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
        hits += pred == data.labels[r] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

LossGradient one_hot_mse(const ModelSpec &model, const ParamSet &params, const Dataset &data,
                         std::span<const std::size_t> rows, AdjointDifferentiator &diff) {
    if (rows.empty()) {
        throw std::invalid_argument("one_hot_mse: empty batch");
    }
    if (model.num_actions() != 2) {
        throw std::invalid_argument("one_hot_mse: model must have 2 outputs");
    }
    if (model.feature_dim != data.n_features) {
        throw std::invalid_argument("one_hot_mse: model expects " +
                                    std::to_string(model.feature_dim) + " features, data has " +
                                    std::to_string(data.n_features));
    }
    LossGradient out;
    out.gradient.assign(model.num_trainable(), 0.0);
    const double scale = 1.0 / static_cast<double>(rows.size() * 2);
    std::vector<double> weights(2);
    for (const auto r : rows) {
        const auto q = diff.forward(params, data.features.at(r));
        for (std::size_t a = 0; a < 2; ++a) {
            const double target = data.labels[r] == a ? 1.0 : 0.0;
            const double err = q[a] - target;
            out.loss += err * err * scale;
            weights[a] = 2.0 * err * scale;
        }
        diff.backward(weights, out.gradient);
    }
    return out;
}

SupervisedResult train_supervised(const SupervisedConfig &cfg, const Dataset &data,
                                  std::size_t run) {
    if (cfg.batch_size == 0) {
        throw ConfigError("batch_size", "must be >= 1");
    }
    if (data.train.empty()) {
        throw std::invalid_argument("train_supervised: empty training split");
    }
    const ModelSpec model = supervised_model(cfg.model, data.n_features);
    auto rng = make_rng(cfg.seed, run);
    ParamSet params = init_params(model, rng);
    Adam opt(model, cfg.lr);
    AdjointDifferentiator diff(model);

    SupervisedResult res;
    std::vector<std::size_t> order = data.train;
    std::size_t update = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const std::span<const std::size_t> rows(order.data() + start, len);
            auto lg = one_hot_mse(model, params, data, rows, diff);
            for (std::size_t i = 0; i < lg.gradient.size(); ++i) {
                if (!std::isfinite(lg.gradient[i])) {
                    throw TrainingAborted("epoch " + std::to_string(epoch) + ", update " +
                                          std::to_string(update) + ": non-finite gradient");
                }
            }
            opt.step(params, lg.gradient);
            UpdateRecord rec;
            rec.step = update++;
            rec.episode = epoch;
            rec.loss = lg.loss;
            rec.grad_norm = l2_norm(lg.gradient);
            if (cfg.keep_gradients) {
                rec.gradient = std::move(lg.gradient);
            }
            res.log.updates.push_back(std::move(rec));
            loss_sum += lg.loss;
            ++batches;
        }
        res.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
        res.train_accuracy.push_back(accuracy(model, params, data, data.train));
        res.validation_accuracy.push_back(accuracy(model, params, data, data.validation));
        res.log.returns.push_back(res.validation_accuracy.back());
    }
    res.log.total_steps = update;
    return res;
}

} // namespace qdqn
