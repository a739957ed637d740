#include "qdqn/statevec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qdqn {

namespace {

constexpr std::size_t kMaxQubits = 30;

// Visits every (i0, i1) amplitude pair differing only in `qubit`, i0 having
// the bit cleared.
template <class F> void for_each_pair(std::vector<Complex> &amps, std::size_t qubit, F &&f) {
    const std::size_t stride = std::size_t{1} << qubit;
    const std::size_t dim = amps.size();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t k = base; k < base + stride; ++k) {
            f(amps[k], amps[k + stride]);
        }
    }
}

} // namespace

StateVector::StateVector(std::size_t n_qubits) : n_qubits_(n_qubits) {
    if (n_qubits == 0) {
        throw std::invalid_argument("StateVector: circuit width must be at least one qubit");
    }
    if (n_qubits > kMaxQubits) {
        throw std::invalid_argument("StateVector: " + std::to_string(n_qubits) +
                                    " qubits exceeds the dense simulator limit");
    }
    amps_.assign(std::size_t{1} << n_qubits, Complex{0.0, 0.0});
    amps_[0] = Complex{1.0, 0.0};
}

void StateVector::reset() {
    std::fill(amps_.begin(), amps_.end(), Complex{0.0, 0.0});
    amps_[0] = Complex{1.0, 0.0};
}

void StateVector::check_qubit(std::size_t qubit) const {
    if (qubit >= n_qubits_) {
        throw std::out_of_range("qubit index " + std::to_string(qubit) + " out of range for " +
                                std::to_string(n_qubits_) + "-qubit state");
    }
}

void StateVector::apply_rotation(Axis axis, std::size_t qubit, double angle) {
    check_qubit(qubit);
    if (!std::isfinite(angle)) {
        throw std::invalid_argument("apply_rotation: non-finite angle");
    }
    const double c = std::cos(0.5 * angle);
    const double s = std::sin(0.5 * angle);
    switch (axis) {
    case Axis::X:
        // [[c, -is], [-is, c]]
        for_each_pair(amps_, qubit, [c, s](Complex &a0, Complex &a1) {
            const Complex x0 = a0;
            const Complex x1 = a1;
            a0 = {c * x0.real() + s * x1.imag(), c * x0.imag() - s * x1.real()};
            a1 = {c * x1.real() + s * x0.imag(), c * x1.imag() - s * x0.real()};
        });
        break;
    case Axis::Y:
        // [[c, -s], [s, c]]
        for_each_pair(amps_, qubit, [c, s](Complex &a0, Complex &a1) {
            const Complex x0 = a0;
            a0 = c * x0 - s * a1;
            a1 = s * x0 + c * a1;
        });
        break;
    case Axis::Z: {
        const Complex p0{c, -s};
        const Complex p1{c, s};
        for_each_pair(amps_, qubit, [p0, p1](Complex &a0, Complex &a1) {
            a0 *= p0;
            a1 *= p1;
        });
        break;
    }
    }
}

void StateVector::apply_pauli(Axis axis, std::size_t qubit) {
    check_qubit(qubit);
    switch (axis) {
    case Axis::X:
        for_each_pair(amps_, qubit, [](Complex &a0, Complex &a1) { std::swap(a0, a1); });
        break;
    case Axis::Y:
        // [[0, -i], [i, 0]]
        for_each_pair(amps_, qubit, [](Complex &a0, Complex &a1) {
            const Complex x0 = a0;
            a0 = {a1.imag(), -a1.real()};
            a1 = {-x0.imag(), x0.real()};
        });
        break;
    case Axis::Z:
        for_each_pair(amps_, qubit, [](Complex &, Complex &a1) { a1 = -a1; });
        break;
    }
}

void StateVector::apply_cz(std::size_t q1, std::size_t q2) {
    check_qubit(q1);
    check_qubit(q2);
    if (q1 == q2) {
        throw std::invalid_argument("apply_cz: control and target must differ");
    }
    const std::size_t both = (std::size_t{1} << q1) | (std::size_t{1} << q2);
    for (std::size_t b = 0; b < amps_.size(); ++b) {
        if ((b & both) == both) {
            amps_[b] = -amps_[b];
        }
    }
}

double StateVector::norm() const {
    double acc = 0.0;
    for (const auto &a : amps_) {
        acc += std::norm(a);
    }
    return std::sqrt(acc);
}

ZObservable::ZObservable(std::vector<std::size_t> qubits) : qubits_(std::move(qubits)) {
    std::sort(qubits_.begin(), qubits_.end());
    if (std::adjacent_find(qubits_.begin(), qubits_.end()) != qubits_.end()) {
        throw std::invalid_argument("ZObservable: qubit indices must be distinct");
    }
    for (auto q : qubits_) {
        if (q >= 64) {
            throw std::out_of_range("ZObservable: qubit index " + std::to_string(q) + " too large");
        }
        mask_ |= std::uint64_t{1} << q;
    }
}

void ZObservable::validate(std::size_t n_qubits) const {
    if (!qubits_.empty() && qubits_.back() >= n_qubits) {
        throw std::out_of_range("ZObservable: qubit " + std::to_string(qubits_.back()) +
                                " out of range for " + std::to_string(n_qubits) + " qubits");
    }
}

double expectation(const StateVector &state, const ZObservable &obs) {
    obs.validate(state.num_qubits());
    const auto amps = state.amplitudes();
    double acc = 0.0;
    for (std::size_t b = 0; b < amps.size(); ++b) {
        acc += obs.sign(b) * std::norm(amps[b]);
    }
    return acc;
}

Complex inner_product(const StateVector &a, const StateVector &b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("inner_product: dimension mismatch");
    }
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += std::conj(a[i]) * b[i];
    }
    return acc;
}

Complex pauli_matrix_element(const StateVector &bra, const StateVector &ket, Axis axis,
                             std::size_t qubit) {
    if (bra.size() != ket.size()) {
        throw std::invalid_argument("pauli_matrix_element: dimension mismatch");
    }
    if (qubit >= ket.num_qubits()) {
        throw std::out_of_range("pauli_matrix_element: qubit out of range");
    }
    const auto l = bra.amplitudes();
    const auto k = ket.amplitudes();
    const std::size_t stride = std::size_t{1} << qubit;
    Complex acc{0.0, 0.0};
    for (std::size_t base = 0; base < k.size(); base += 2 * stride) {
        for (std::size_t i = base; i < base + stride; ++i) {
            const std::size_t j = i + stride;
            switch (axis) {
            case Axis::X:
                acc += std::conj(l[i]) * k[j] + std::conj(l[j]) * k[i];
                break;
            case Axis::Y:
                acc += Complex{0.0, -1.0} * std::conj(l[i]) * k[j] +
                       Complex{0.0, 1.0} * std::conj(l[j]) * k[i];
                break;
            case Axis::Z:
                acc += std::conj(l[i]) * k[i] - std::conj(l[j]) * k[j];
                break;
            }
        }
    }
    return acc;
}

} // namespace qdqn
