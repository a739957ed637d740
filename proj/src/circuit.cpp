#include "qdqn/circuit.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace qdqn {

double Gate::angle(std::span<const double> params, std::span<const double> features) const {
    double acc = 0.0;
    for (const auto &t : terms) {
        double v = t.coeff;
        if (t.param != kNoIndex) {
            v *= params[t.param];
        }
        if (t.feature != kNoIndex) {
            v *= features[t.feature];
        }
        acc += v;
    }
    return acc;
}

void Circuit::add_rotation(Axis axis, std::size_t qubit, std::vector<AngleTerm> terms) {
    if (qubit >= n_qubits_) {
        throw std::out_of_range("Circuit: rotation on qubit " + std::to_string(qubit) +
                                " of a " + std::to_string(n_qubits_) + "-qubit circuit");
    }
    Gate g;
    g.kind = GateKind::Rotation;
    g.axis = axis;
    g.q0 = qubit;
    g.terms = std::move(terms);
    gates_.push_back(std::move(g));
}

void Circuit::add_cz(std::size_t q0, std::size_t q1) {
    if (q0 >= n_qubits_ || q1 >= n_qubits_) {
        throw std::out_of_range("Circuit: CZ qubit out of range");
    }
    if (q0 == q1) {
        throw std::invalid_argument("Circuit: CZ on a single qubit");
    }
    Gate g;
    g.kind = GateKind::CZ;
    g.q0 = q0;
    g.q1 = q1;
    gates_.push_back(std::move(g));
}

void Circuit::add_cz_ring() {
    if (n_qubits_ < 2) {
        return;
    }
    for (std::size_t i = 0; i + 1 < n_qubits_; ++i) {
        add_cz(i, i + 1);
    }
    if (n_qubits_ > 2) {
        add_cz(n_qubits_ - 1, 0);
    }
}

std::size_t Circuit::param_extent() const {
    std::size_t extent = 0;
    for (const auto &g : gates_) {
        for (const auto &t : g.terms) {
            if (t.param != kNoIndex) {
                extent = std::max(extent, t.param + 1);
            }
        }
    }
    return extent;
}

std::size_t Circuit::feature_extent() const {
    std::size_t extent = 0;
    for (const auto &g : gates_) {
        for (const auto &t : g.terms) {
            if (t.feature != kNoIndex) {
                extent = std::max(extent, t.feature + 1);
            }
        }
    }
    return extent;
}

void Circuit::run(StateVector &state, std::span<const double> params,
                  std::span<const double> features) const {
    for (const auto &g : gates_) {
        if (g.kind == GateKind::CZ) {
            state.apply_cz(g.q0, g.q1);
        } else {
            state.apply_rotation(g.axis, g.q0, g.angle(params, features));
        }
    }
}

} // namespace qdqn
