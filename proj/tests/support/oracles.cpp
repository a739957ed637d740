#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oracle {

namespace {

using Mat2 = std::array<std::array<cplx, 2>, 2>;

Mat2 rotation(qdqn::Axis axis, double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    const cplx i(0.0, 1.0);
    switch (axis) {
    case qdqn::Axis::X:
        return {{{c, -i * s}, {-i * s, c}}};
    case qdqn::Axis::Y:
        return {{{c, -s}, {s, c}}};
    case qdqn::Axis::Z:
        return {{{std::exp(-i * (theta / 2.0)), 0.0}, {0.0, std::exp(i * (theta / 2.0))}}};
    }
    throw std::logic_error("bad axis");
}

void apply(std::vector<cplx> &psi, const Mat2 &u, std::size_t q) {
    std::vector<cplx> out(psi.size());
    for (std::size_t i = 0; i < psi.size(); ++i) {
        const std::size_t bit = (i >> q) & 1U;
        const std::size_t i0 = i & ~(std::size_t{1} << q);
        const std::size_t i1 = i | (std::size_t{1} << q);
        out[i] = u[bit][0] * psi[i0] + u[bit][1] * psi[i1];
    }
    psi.swap(out);
}

double gate_angle(const qdqn::Gate &g, std::span<const double> params,
                  std::span<const double> features) {
    double a = 0.0;
    for (const auto &t : g.terms) {
        const double p = t.param == qdqn::kNoIndex ? 1.0 : params[t.param];
        const double x = t.feature == qdqn::kNoIndex ? 1.0 : features[t.feature];
        a += t.coeff * p * x;
    }
    return a;
}

std::vector<double> angles_of(const qdqn::ModelSpec &model, std::span<const double> params,
                              std::span<const double> features) {
    std::vector<double> a;
    for (const auto &g : model.circuit.gates()) {
        a.push_back(g.kind == qdqn::GateKind::Rotation ? gate_angle(g, params, features) : 0.0);
    }
    return a;
}

} // namespace

std::vector<double> expectations(const qdqn::ModelSpec &model, std::span<const double> params,
                                 std::span<const double> features,
                                 const std::vector<double> *angle_override) {
    const std::size_t n = model.n_qubits;
    std::vector<cplx> psi(std::size_t{1} << n, 0.0);
    psi[0] = 1.0;
    const auto &gates = model.circuit.gates();
    for (std::size_t k = 0; k < gates.size(); ++k) {
        const auto &g = gates[k];
        if (g.kind == qdqn::GateKind::CZ) {
            for (std::size_t i = 0; i < psi.size(); ++i) {
                if (((i >> g.q0) & 1U) && ((i >> g.q1) & 1U)) {
                    psi[i] = -psi[i];
                }
            }
            continue;
        }
        const double theta =
            angle_override ? (*angle_override)[k] : gate_angle(g, params, features);
        apply(psi, rotation(g.axis, theta), g.q0);
    }
    std::vector<double> out;
    for (const auto &obs : model.observables) {
        double e = 0.0;
        for (std::size_t i = 0; i < psi.size(); ++i) {
            int sign = 1;
            for (const auto q : obs.qubits()) {
                sign *= ((i >> q) & 1U) ? -1 : 1;
            }
            e += sign * std::norm(psi[i]);
        }
        out.push_back(e);
    }
    return out;
}

std::vector<double> q_values(const qdqn::ModelSpec &model, std::span<const double> params,
                             std::span<const double> features) {
    auto e = expectations(model, params, features);
    for (std::size_t a = 0; a < e.size(); ++a) {
        e[a] *= params[model.output_offset() + a];
    }
    return e;
}

std::vector<double> shift_gradient(const qdqn::ModelSpec &model, std::span<const double> params,
                                   std::span<const double> features,
                                   std::span<const double> action_weights) {
    std::vector<double> grad(params.size(), 0.0);
    const std::size_t out = model.output_offset();
    auto weighted = [&](const std::vector<double> &e) {
        double s = 0.0;
        for (std::size_t a = 0; a < e.size(); ++a) {
            s += action_weights[a] * params[out + a] * e[a];
        }
        return s;
    };
    const auto base_angles = angles_of(model, params, features);
    const auto &gates = model.circuit.gates();
    for (std::size_t k = 0; k < gates.size(); ++k) {
        const auto &g = gates[k];
        if (g.kind != qdqn::GateKind::Rotation) {
            continue;
        }
        auto shifted = base_angles;
        shifted[k] = base_angles[k] + std::numbers::pi / 2.0;
        const double up = weighted(expectations(model, params, features, &shifted));
        shifted[k] = base_angles[k] - std::numbers::pi / 2.0;
        const double down = weighted(expectations(model, params, features, &shifted));
        const double d_angle = 0.5 * (up - down);
        for (const auto &t : g.terms) {
            if (t.param == qdqn::kNoIndex) {
                continue;
            }
            const double x = t.feature == qdqn::kNoIndex ? 1.0 : features[t.feature];
            grad[t.param] += d_angle * t.coeff * x;
        }
    }
    const auto e = expectations(model, params, features);
    for (std::size_t a = 0; a < e.size(); ++a) {
        grad[out + a] += action_weights[a] * e[a];
    }
    return grad;
}

double td_loss(const qdqn::ModelSpec &model, std::span<const double> params,
               std::span<const double> target, std::span<const qdqn::Transition> batch,
               double gamma) {
    double loss = 0.0;
    for (const auto &t : batch) {
        double y = t.reward;
        if (!t.terminal) {
            const auto qn = q_values(model, target, t.next_state);
            y += gamma * *std::max_element(qn.begin(), qn.end());
        }
        const double q = q_values(model, params, t.state)[t.action];
        loss += (q - y) * (q - y);
    }
    return loss / static_cast<double>(batch.size());
}

std::vector<double> trainable_only(const qdqn::ModelSpec &model, std::span<const double> flat) {
    std::vector<double> out;
    for (const auto i : model.trainable()) {
        out.push_back(flat[i]);
    }
    return out;
}

std::vector<double> random_vector(std::mt19937_64 &rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto &x : v) {
        x = u(rng);
    }
    return v;
}

qdqn::ModelSpec random_model(std::mt19937_64 &rng, std::size_t max_qubits, std::size_t max_layers,
                             qdqn::EnvId task) {
    std::uniform_int_distribution<std::size_t> layers(1, max_layers);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> mode(0, 2);
    const qdqn::ScalingMode modes[] = {qdqn::ScalingMode::Trainable, qdqn::ScalingMode::Fixed,
                                       qdqn::ScalingMode::Absent};
    qdqn::ModelConfig cfg;
    cfg.layers = layers(rng);
    cfg.output_scaling = modes[mode(rng)];
    cfg.observable_kind = coin(rng) ? qdqn::ObservableKind::Local : qdqn::ObservableKind::Global;
    if (coin(rng)) {
        cfg.family = qdqn::Family::Skolik;
        // One qubit per feature; the feature count is chosen with the width.
        cfg.qubits = std::uniform_int_distribution<std::size_t>(1, max_qubits)(rng);
        cfg.reupload = coin(rng) != 0;
        cfg.input_scaling = modes[mode(rng)];
        return qdqn::build_model(cfg, task, cfg.qubits);
    }
    cfg.family = qdqn::Family::UQC;
    cfg.qubits = std::uniform_int_distribution<std::size_t>(1, max_qubits)(rng);
    cfg.entangle = coin(rng) != 0;
    cfg.encoding = coin(rng) ? qdqn::Encoding::Full : qdqn::Encoding::Partial;
    std::size_t features = 4;
    if (cfg.encoding == qdqn::Encoding::Partial) {
        features = cfg.qubits * std::uniform_int_distribution<std::size_t>(1, 2)(rng);
    }
    return qdqn::build_model(cfg, task, features);
}

std::array<double, 4> cartpole_step(const std::array<double, 4> &s, int action) {
    const double g = 9.8;
    const double mc = 1.0;
    const double mp = 0.1;
    const double l = 0.5;
    const double f = action == 1 ? 10.0 : -10.0;
    const double dt = 0.02;
    const double x = s[0], v = s[1], th = s[2], w = s[3];
    const double M = mc + mp;
    // Pole angular acceleration from the coupled cart-pole equations.
    const double num = g * std::sin(th) + std::cos(th) * (-f - mp * l * w * w * std::sin(th)) / M;
    const double den = l * (4.0 / 3.0 - mp * std::cos(th) * std::cos(th) / M);
    const double alpha = num / den;
    const double acc = (f + mp * l * (w * w * std::sin(th) - alpha * std::cos(th))) / M;
    return {x + dt * v, v + dt * acc, th + dt * w, w + dt * alpha};
}

namespace {

std::array<double, 4> acrobot_rates(const std::array<double, 4> &s, double tau) {
    const double m1 = 1.0, m2 = 1.0, l1 = 1.0, r1 = 0.5, r2 = 0.5, I1 = 1.0, I2 = 1.0, g = 9.8;
    const double q1 = s[0], q2 = s[1], dq1 = s[2], dq2 = s[3];
    const double c2 = std::cos(q2);
    const double s2 = std::sin(q2);
    // Mass matrix.
    const double M11 = m1 * r1 * r1 + m2 * (l1 * l1 + r2 * r2 + 2.0 * l1 * r2 * c2) + I1 + I2;
    const double M12 = m2 * (r2 * r2 + l1 * r2 * c2) + I2;
    const double M22 = m2 * r2 * r2 + I2;
    // Coriolis/centrifugal terms.
    const double h = m2 * l1 * r2 * s2;
    const double C1 = -h * (dq2 * dq2 + 2.0 * dq1 * dq2);
    const double C2 = h * dq1 * dq1;
    // Gravity, angles measured from the downward vertical.
    const double G2 = m2 * r2 * g * std::sin(q1 + q2);
    const double G1 = (m1 * r1 + m2 * l1) * g * std::sin(q1) + G2;
    const double b1 = -C1 - G1;
    const double b2 = tau - C2 - G2;
    const double det = M11 * M22 - M12 * M12;
    const double ddq1 = (b1 * M22 - M12 * b2) / det;
    const double ddq2 = (M11 * b2 - M12 * b1) / det;
    return {dq1, dq2, ddq1, ddq2};
}

double wrap_pi(double x) {
    const double two_pi = 2.0 * std::numbers::pi;
    while (x > std::numbers::pi) {
        x -= two_pi;
    }
    while (x < -std::numbers::pi) {
        x += two_pi;
    }
    return x;
}

} // namespace

std::array<double, 4> acrobot_step(const std::array<double, 4> &s, int action) {
    const double tau = static_cast<double>(action - 1);
    const double h = 0.2;
    auto axpy = [](const std::array<double, 4> &a, const std::array<double, 4> &b, double k) {
        std::array<double, 4> r{};
        for (int i = 0; i < 4; ++i) {
            r[i] = a[i] + k * b[i];
        }
        return r;
    };
    const auto k1 = acrobot_rates(s, tau);
    const auto k2 = acrobot_rates(axpy(s, k1, h / 2.0), tau);
    const auto k3 = acrobot_rates(axpy(s, k2, h / 2.0), tau);
    const auto k4 = acrobot_rates(axpy(s, k3, h), tau);
    std::array<double, 4> n{};
    for (int i = 0; i < 4; ++i) {
        n[i] = s[i] + h * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
    }
    n[0] = wrap_pi(n[0]);
    n[1] = wrap_pi(n[1]);
    n[2] = std::clamp(n[2], -4.0 * std::numbers::pi, 4.0 * std::numbers::pi);
    n[3] = std::clamp(n[3], -9.0 * std::numbers::pi, 9.0 * std::numbers::pi);
    return n;
}

} // namespace oracle
