#pragma once

#include <bit>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qdqn {

using Complex = std::complex<double>;

enum class Axis { X, Y, Z };

/// Dense n-qubit state. Basis index b has qubit q in state |1> iff bit q of b
/// is set (qubit 0 is the least-significant bit).
class StateVector {
  public:
    /// |0...0> on n qubits. Throws std::invalid_argument for n == 0 or n > 30.
    explicit StateVector(std::size_t n_qubits);

    std::size_t num_qubits() const noexcept { return n_qubits_; }
    std::size_t size() const noexcept { return amps_.size(); }

    std::span<const Complex> amplitudes() const noexcept { return amps_; }
    std::span<Complex> amplitudes() noexcept { return amps_; }
    const Complex &operator[](std::size_t i) const { return amps_[i]; }

    /// Resets to |0...0> without reallocating.
    void reset();

    /// exp(-i angle sigma_axis / 2) on `qubit`.
    void apply_rotation(Axis axis, std::size_t qubit, double angle);
    /// Bare Pauli sigma_axis on `qubit`; used by the adjoint sweep.
    void apply_pauli(Axis axis, std::size_t qubit);
    void apply_cz(std::size_t q1, std::size_t q2);

    double norm() const;

  private:
    void check_qubit(std::size_t qubit) const;

    std::size_t n_qubits_;
    std::vector<Complex> amps_;
};

/// Tensor product of Pauli-Z on a set of qubits, identity elsewhere.
class ZObservable {
  public:
    ZObservable() = default;
    /// Qubits are sorted; duplicates throw std::invalid_argument.
    explicit ZObservable(std::vector<std::size_t> qubits);

    const std::vector<std::size_t> &qubits() const noexcept { return qubits_; }
    std::uint64_t mask() const noexcept { return mask_; }
    bool empty() const noexcept { return qubits_.empty(); }

    /// Eigenvalue (+1 or -1) on computational basis state `basis`.
    double sign(std::uint64_t basis) const noexcept {
        return (std::popcount(basis & mask_) & 1U) ? -1.0 : 1.0;
    }

    /// Throws std::out_of_range if any qubit index is >= n_qubits.
    void validate(std::size_t n_qubits) const;

    bool operator==(const ZObservable &other) const = default;

  private:
    std::vector<std::size_t> qubits_;
    std::uint64_t mask_ = 0;
};

/// sum_b |amp_b|^2 (-1)^{popcount(b & mask)}
double expectation(const StateVector &state, const ZObservable &obs);

/// <a|b>
Complex inner_product(const StateVector &a, const StateVector &b);

/// <bra| sigma_axis(qubit) |ket> without materializing sigma|ket>.
Complex pauli_matrix_element(const StateVector &bra, const StateVector &ket, Axis axis,
                             std::size_t qubit);

} // namespace qdqn
