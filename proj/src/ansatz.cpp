#include "qdqn/ansatz.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qdqn {

void ModelSpec::finalize() {
    const std::size_t total = num_params();
    trainable_.clear();
    slot_of_.assign(total, kNoIndex);
    for (const auto &g : groups) {
        if (g.offset + g.size > total) {
            throw std::logic_error("ModelSpec: parameter group '" + g.name + "' overflows layout");
        }
    }
    for (std::size_t flat = 0; flat < total; ++flat) {
        for (const auto &g : groups) {
            if (flat >= g.offset && flat < g.offset + g.size && g.trainable) {
                slot_of_[flat] = trainable_.size();
                trainable_.push_back(flat);
                break;
            }
        }
    }
}

ParamRole ModelSpec::role_of(std::size_t flat) const {
    if (flat < n_rotational) {
        return ParamRole::Rotational;
    }
    if (flat < n_rotational + n_input) {
        return ParamRole::Input;
    }
    return ParamRole::Output;
}

namespace {

void add_output_group(ModelSpec &m) {
    if (m.observables.empty()) {
        throw std::invalid_argument("model needs at least one observable");
    }
    for (const auto &o : m.observables) {
        o.validate(m.n_qubits);
    }
    if (m.output_scaling == ScalingMode::Absent) {
        // Without output scaling the Q-value is the bare expectation, which is
        // the same as a frozen unit weight.
        m.output_scaling = ScalingMode::Fixed;
    }
    m.groups.push_back({"output", ParamRole::Output, m.output_offset(), m.observables.size(),
                        m.output_scaling == ScalingMode::Trainable});
}

} // namespace

ModelSpec build_skolik(std::size_t n_qubits, std::size_t layers, bool reupload,
                       ScalingMode input_scaling, ScalingMode output_scaling,
                       std::vector<ZObservable> observables) {
    if (n_qubits == 0 || layers == 0) {
        throw std::invalid_argument("build_skolik: qubits and layers must be >= 1");
    }
    ModelSpec m;
    m.family = Family::Skolik;
    m.n_qubits = n_qubits;
    m.n_layers = layers;
    m.feature_dim = n_qubits;
    m.reupload = reupload;
    m.input_scaling = input_scaling;
    m.output_scaling = output_scaling;
    m.observables = std::move(observables);

    const std::size_t n = n_qubits;
    m.n_rotational = 2 * n * layers;
    const std::size_t encoding_blocks = reupload ? layers : 1;
    m.n_input = input_scaling == ScalingMode::Absent ? 0 : n * encoding_blocks;

    m.circuit = Circuit(n);
    for (std::size_t l = 0; l < layers; ++l) {
        if (reupload || l == 0) {
            for (std::size_t i = 0; i < n; ++i) {
                AngleTerm t{kNoIndex, i, 1.0};
                if (input_scaling != ScalingMode::Absent) {
                    t.param = m.n_rotational + l * n + i;
                }
                m.circuit.add_rotation(Axis::X, i, {t});
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t base = (l * n + i) * 2;
            m.circuit.add_rotation(Axis::Y, i, {{base, kNoIndex, 1.0}});
            m.circuit.add_rotation(Axis::Z, i, {{base + 1, kNoIndex, 1.0}});
        }
        m.circuit.add_cz_ring();
    }

    m.groups.push_back({"theta", ParamRole::Rotational, 0, m.n_rotational, true});
    if (m.n_input > 0) {
        m.groups.push_back({"lambda", ParamRole::Input, m.n_rotational, m.n_input,
                            input_scaling == ScalingMode::Trainable});
    }
    add_output_group(m);
    m.finalize();
    return m;
}

ModelSpec build_uqc(std::size_t n_qubits, std::size_t layers, Encoding encoding, bool entangle,
                    std::size_t feature_dim, std::vector<ZObservable> observables,
                    ScalingMode output_scaling) {
    if (n_qubits == 0 || layers == 0 || feature_dim == 0) {
        throw std::invalid_argument("build_uqc: qubits, layers and feature_dim must be >= 1");
    }
    if (encoding == Encoding::Partial && feature_dim % n_qubits != 0) {
        throw std::invalid_argument("build_uqc: partial encoding needs feature_dim (" +
                                    std::to_string(feature_dim) + ") divisible by qubits (" +
                                    std::to_string(n_qubits) + ")");
    }
    ModelSpec m;
    m.family = Family::UQC;
    m.n_qubits = n_qubits;
    m.n_layers = layers;
    m.feature_dim = feature_dim;
    m.reupload = true;
    m.input_scaling = ScalingMode::Trainable;
    m.output_scaling = output_scaling;
    m.encoding = encoding;
    m.entangle = entangle;
    m.observables = std::move(observables);

    const std::size_t n = n_qubits;
    const std::size_t cells = n * layers;
    const std::size_t sub = encoding == Encoding::Full ? feature_dim : feature_dim / n;
    m.n_rotational = cells;
    m.n_input = cells * sub + cells;
    const std::size_t w_offset = m.n_rotational;
    const std::size_t alpha_offset = w_offset + cells * sub;

    m.circuit = Circuit(n);
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t q = 0; q < n; ++q) {
            const std::size_t cell = l * n + q;
            const std::size_t first_feature = encoding == Encoding::Full ? 0 : q * sub;
            std::vector<AngleTerm> terms;
            terms.reserve(sub + 1);
            for (std::size_t j = 0; j < sub; ++j) {
                terms.push_back({w_offset + cell * sub + j, first_feature + j, 2.0});
            }
            terms.push_back({alpha_offset + cell, kNoIndex, 2.0});
            m.circuit.add_rotation(Axis::Z, q, std::move(terms));
            m.circuit.add_rotation(Axis::Y, q, {{cell, kNoIndex, 2.0}});
        }
        if (entangle && l + 1 < layers) {
            m.circuit.add_cz_ring();
        }
    }

    m.groups.push_back({"phi", ParamRole::Rotational, 0, cells, true});
    m.groups.push_back({"w", ParamRole::Input, w_offset, cells * sub, true});
    m.groups.push_back({"alpha", ParamRole::Input, alpha_offset, cells, true});
    add_output_group(m);
    m.finalize();
    return m;
}

ModelSpec build_custom(Circuit circuit, std::size_t feature_dim,
                       std::vector<ZObservable> observables, ScalingMode output_scaling) {
    ModelSpec m;
    m.family = Family::Custom;
    m.n_qubits = circuit.num_qubits();
    m.n_layers = 1;
    if (circuit.feature_extent() > feature_dim) {
        throw std::invalid_argument("build_custom: circuit reads features beyond feature_dim");
    }
    m.feature_dim = feature_dim;
    m.output_scaling = output_scaling;
    m.observables = std::move(observables);
    m.n_rotational = circuit.param_extent();
    m.circuit = std::move(circuit);
    if (m.n_rotational > 0) {
        m.groups.push_back({"theta", ParamRole::Rotational, 0, m.n_rotational, true});
    }
    add_output_group(m);
    m.finalize();
    return m;
}

std::vector<ZObservable> default_observables(EnvId env, std::size_t n, ObservableKind kind) {
    if (n == 0) {
        throw std::invalid_argument("default_observables: n must be >= 1");
    }
    auto range = [](std::size_t lo, std::size_t hi) {
        std::vector<std::size_t> q;
        for (std::size_t i = lo; i < hi; ++i) {
            q.push_back(i);
        }
        return ZObservable(std::move(q));
    };
    const std::size_t actions = env == EnvId::CartPole ? 2 : 3;
    if (kind == ObservableKind::Global) {
        return std::vector<ZObservable>(actions, range(0, n));
    }
    if (env == EnvId::CartPole) {
        if (n == 1) {
            return {range(0, 1), range(0, 1)};
        }
        return {range(0, n / 2), range(n / 2, n)};
    }
    if (n == 1) {
        return {range(0, 1), range(0, 1), range(0, 1)};
    }
    if (n == 2) {
        return {range(0, 1), range(0, 2), range(1, 2)};
    }
    return {range(0, 1), range(1, n - 1), range(n - 1, n)};
}

ModelSpec build_model(const ModelConfig &cfg, EnvId task, std::size_t feature_dim) {
    std::vector<ZObservable> obs;
    if (cfg.observables.empty()) {
        obs = default_observables(task, cfg.qubits, cfg.observable_kind);
    } else {
        for (const auto &q : cfg.observables) {
            obs.emplace_back(q);
        }
    }
    switch (cfg.family) {
    case Family::Skolik:
        if (feature_dim != cfg.qubits) {
            throw std::invalid_argument("Skolik ansatz needs one qubit per feature (" +
                                        std::to_string(feature_dim) + " features, " +
                                        std::to_string(cfg.qubits) + " qubits)");
        }
        return build_skolik(cfg.qubits, cfg.layers, cfg.reupload, cfg.input_scaling,
                            cfg.output_scaling, std::move(obs));
    case Family::UQC:
        return build_uqc(cfg.qubits, cfg.layers, cfg.encoding, cfg.entangle, feature_dim,
                         std::move(obs), cfg.output_scaling);
    case Family::Custom:
        break;
    }
    throw std::invalid_argument("build_model: custom models must be built directly");
}

ParamSet make_params(const ModelSpec &model, double fill) {
    ParamSet p;
    p.n_rotational = model.n_rotational;
    p.n_input = model.n_input;
    p.n_output = model.num_actions();
    p.values.assign(model.num_params(), fill);
    return p;
}

ParamSet init_params(const ModelSpec &model, std::mt19937_64 &rng, InitScheme scheme) {
    ParamSet p = make_params(model, 0.0);
    if (scheme == InitScheme::Uniform2Pi) {
        std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
        for (const auto &g : model.groups) {
            for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
                // Frozen scaling weights keep their unit value.
                p.values[i] = g.role == ParamRole::Output || !g.trainable ? 1.0 : u(rng);
            }
        }
    } else {
        std::uniform_real_distribution<double> rot(0.0, std::numbers::pi);
        std::normal_distribution<double> w(0.0, 0.01);
        for (const auto &g : model.groups) {
            for (std::size_t i = g.offset; i < g.offset + g.size; ++i) {
                if (g.role == ParamRole::Rotational) {
                    p.values[i] = rot(rng);
                } else if (g.role == ParamRole::Output) {
                    p.values[i] = 1.0;
                } else if (g.name == "w") {
                    p.values[i] = w(rng);
                } else if (g.name == "alpha") {
                    p.values[i] = 0.0;
                } else {
                    p.values[i] = 1.0;
                }
            }
        }
    }
    for (auto &v : p.output_weights()) {
        v = 1.0;
    }
    return p;
}

void check_params(const ModelSpec &model, const ParamSet &params) {
    if (params.n_rotational != model.n_rotational || params.n_input != model.n_input ||
        params.n_output != model.num_actions() || params.values.size() != model.num_params()) {
        throw std::invalid_argument("ParamSet shape does not match the model layout");
    }
}

void check_features(const ModelSpec &model, std::span<const double> features) {
    if (features.size() != model.feature_dim) {
        throw std::invalid_argument("feature dimension " + std::to_string(features.size()) +
                                    " does not match model input dimension " +
                                    std::to_string(model.feature_dim));
    }
}

std::vector<double> q_values(const ModelSpec &model, const ParamSet &params,
                             std::span<const double> features) {
    check_params(model, params);
    check_features(model, features);
    StateVector psi(model.n_qubits);
    model.circuit.run(psi, params.values, features);
    std::vector<double> q(model.num_actions());
    const auto w = params.output_weights();
    for (std::size_t a = 0; a < q.size(); ++a) {
        q[a] = w[a] * expectation(psi, model.observables[a]);
    }
    return q;
}

std::vector<double> preprocess(std::span<const double> raw, EnvId env) {
    if (raw.size() != 4) {
        throw std::invalid_argument("preprocess: expected a 4-component state");
    }
    std::vector<double> out(raw.begin(), raw.end());
    switch (env) {
    case EnvId::CartPole:
        // [x, x_dot, theta, theta_dot]
        out[1] = std::atan(out[1]);
        out[3] = std::atan(out[3]);
        break;
    case EnvId::Acrobot:
        // [theta1, theta2, omega1, omega2]
        out[2] = std::atan(out[2]);
        out[3] = std::atan(out[3]);
        break;
    }
    return out;
}

std::string to_string(Family f) {
    switch (f) {
    case Family::Skolik:
        return "skolik";
    case Family::UQC:
        return "uqc";
    case Family::Custom:
        return "custom";
    }
    return "unknown";
}

std::string to_string(ScalingMode m) {
    switch (m) {
    case ScalingMode::Trainable:
        return "trainable";
    case ScalingMode::Fixed:
        return "fixed";
    case ScalingMode::Absent:
        return "absent";
    }
    return "unknown";
}

std::string to_string(Encoding e) { return e == Encoding::Full ? "full" : "partial"; }

std::string to_string(ObservableKind k) { return k == ObservableKind::Local ? "local" : "global"; }

Family family_from_string(const std::string &s) {
    if (s == "skolik") {
        return Family::Skolik;
    }
    if (s == "uqc") {
        return Family::UQC;
    }
    throw std::invalid_argument("unknown model family '" + s + "'");
}

ScalingMode scaling_from_string(const std::string &s) {
    if (s == "trainable") {
        return ScalingMode::Trainable;
    }
    if (s == "fixed" || s == "fixed-1") {
        return ScalingMode::Fixed;
    }
    if (s == "absent" || s == "none") {
        return ScalingMode::Absent;
    }
    throw std::invalid_argument("unknown scaling mode '" + s + "'");
}

Encoding encoding_from_string(const std::string &s) {
    if (s == "full") {
        return Encoding::Full;
    }
    if (s == "partial") {
        return Encoding::Partial;
    }
    throw std::invalid_argument("unknown encoding '" + s + "'");
}

ObservableKind observable_kind_from_string(const std::string &s) {
    if (s == "local") {
        return ObservableKind::Local;
    }
    if (s == "global") {
        return ObservableKind::Global;
    }
    throw std::invalid_argument("unknown observable kind '" + s + "'");
}

} // namespace qdqn
