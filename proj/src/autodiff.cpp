#include "qdqn/autodiff.hpp"

#include <cmath>
#include <stdexcept>

namespace qdqn {

AdjointDifferentiator::AdjointDifferentiator(const ModelSpec &model)
    : model_(&model), psi_(model.n_qubits), lambda_(model.n_qubits), scratch_(model.n_qubits),
      q_(model.num_actions()), expvals_(model.num_actions()) {}

std::span<const double> AdjointDifferentiator::forward(const ParamSet &params,
                                                       std::span<const double> features) {
    check_params(*model_, params);
    check_features(*model_, features);
    params_ = &params;
    features_.assign(features.begin(), features.end());
    psi_.reset();
    model_->circuit.run(psi_, params.values, features_);
    const auto w = params.output_weights();
    for (std::size_t a = 0; a < q_.size(); ++a) {
        expvals_[a] = expectation(psi_, model_->observables[a]);
        q_[a] = w[a] * expvals_[a];
    }
    return q_;
}

void AdjointDifferentiator::backward(std::span<const double> action_weights,
                                     std::span<double> grad) {
    const ModelSpec &m = *model_;
    if (params_ == nullptr) {
        throw std::logic_error("AdjointDifferentiator: backward() before forward()");
    }
    if (action_weights.size() != m.num_actions() || grad.size() != m.num_trainable()) {
        throw std::invalid_argument("AdjointDifferentiator: weight or gradient size mismatch");
    }
    const auto &values = params_->values;
    const auto w = params_->output_weights();

    for (std::size_t a = 0; a < m.num_actions(); ++a) {
        const std::size_t slot = m.gradient_slot(m.output_offset() + a);
        if (slot != kNoIndex) {
            grad[slot] += action_weights[a] * expvals_[a];
        }
    }

    // lambda = H psi with H = sum_a c_a w_a O_a (diagonal).
    auto psi = psi_.amplitudes();
    auto lam = lambda_.amplitudes();
    bool any = false;
    for (std::size_t b = 0; b < psi.size(); ++b) {
        double h = 0.0;
        for (std::size_t a = 0; a < m.num_actions(); ++a) {
            h += action_weights[a] * w[a] * m.observables[a].sign(b);
        }
        lam[b] = h * psi[b];
        any = any || h != 0.0;
    }
    if (!any) {
        return;
    }

    // Index of the first gate that touches a trainable parameter; the sweep
    // can stop there.
    const auto &gates = m.circuit.gates();
    std::size_t first = gates.size();
    for (std::size_t k = 0; k < gates.size() && first == gates.size(); ++k) {
        for (const auto &t : gates[k].terms) {
            if (t.param != kNoIndex && m.gradient_slot(t.param) != kNoIndex) {
                first = k;
                break;
            }
        }
    }

    scratch_ = psi_;
    for (std::size_t k = gates.size(); k-- > first;) {
        const Gate &g = gates[k];
        if (g.kind == GateKind::CZ) {
            scratch_.apply_cz(g.q0, g.q1);
            lambda_.apply_cz(g.q0, g.q1);
            continue;
        }
        bool trainable = false;
        for (const auto &t : g.terms) {
            trainable = trainable || (t.param != kNoIndex && m.gradient_slot(t.param) != kNoIndex);
        }
        if (trainable) {
            // d<H>/d(angle) = Im <lambda| sigma |psi_k>, psi_k the state after gate k.
            const double d_angle = pauli_matrix_element(lambda_, scratch_, g.axis, g.q0).imag();
            for (const auto &t : g.terms) {
                if (t.param == kNoIndex) {
                    continue;
                }
                const std::size_t slot = m.gradient_slot(t.param);
                if (slot == kNoIndex) {
                    continue;
                }
                double coeff = t.coeff;
                if (t.feature != kNoIndex) {
                    coeff *= features_[t.feature];
                }
                grad[slot] += d_angle * coeff;
            }
        }
        const double angle = g.angle(values, features_);
        scratch_.apply_rotation(g.axis, g.q0, -angle);
        lambda_.apply_rotation(g.axis, g.q0, -angle);
    }
}

GradientVector adjoint_grad(const ModelSpec &model, const ParamSet &params,
                            std::span<const double> features, std::size_t action) {
    if (action >= model.num_actions()) {
        throw std::out_of_range("adjoint_grad: action index out of range");
    }
    std::vector<double> weights(model.num_actions(), 0.0);
    weights[action] = 1.0;
    return adjoint_grad_weighted(model, params, features, weights);
}

GradientVector adjoint_grad_weighted(const ModelSpec &model, const ParamSet &params,
                                     std::span<const double> features,
                                     std::span<const double> action_weights) {
    AdjointDifferentiator diff(model);
    diff.forward(params, features);
    GradientVector g(model.num_trainable(), 0.0);
    diff.backward(action_weights, g);
    return g;
}

double l2_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

std::vector<double> scatter_gradient(const ModelSpec &model, std::span<const double> grad) {
    if (grad.size() != model.num_trainable()) {
        throw std::invalid_argument("scatter_gradient: size mismatch");
    }
    std::vector<double> flat(model.num_params(), 0.0);
    const auto &idx = model.trainable();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        flat[idx[i]] = grad[i];
    }
    return flat;
}

} // namespace qdqn
