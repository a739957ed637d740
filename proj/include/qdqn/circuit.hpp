#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "qdqn/statevec.hpp"

namespace qdqn {

inline constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

/// One additive contribution to a rotation angle:
///   coeff * (param != kNoIndex ? p[param] : 1) * (feature != kNoIndex ? x[feature] : 1)
struct AngleTerm {
    std::size_t param = kNoIndex;
    std::size_t feature = kNoIndex;
    double coeff = 1.0;

    bool operator==(const AngleTerm &) const = default;
};

enum class GateKind { Rotation, CZ };

struct Gate {
    GateKind kind = GateKind::Rotation;
    Axis axis = Axis::Z;
    std::size_t q0 = 0;
    std::size_t q1 = 0;
    std::vector<AngleTerm> terms;

    double angle(std::span<const double> params, std::span<const double> features) const;

    bool operator==(const Gate &) const = default;
};

/// A gate program whose rotation angles are linear in each trainable parameter.
class Circuit {
  public:
    Circuit() = default;
    explicit Circuit(std::size_t n_qubits) : n_qubits_(n_qubits) {}

    std::size_t num_qubits() const noexcept { return n_qubits_; }
    const std::vector<Gate> &gates() const noexcept { return gates_; }
    std::size_t size() const noexcept { return gates_.size(); }
    bool operator==(const Circuit &) const = default;

    void add_rotation(Axis axis, std::size_t qubit, std::vector<AngleTerm> terms);
    void add_cz(std::size_t q0, std::size_t q1);
    /// CZ between (i, i+1) for i < n-1, closed with (n-1, 0) when n > 2.
    void add_cz_ring();

    /// Largest parameter / feature index referenced plus one (0 if none).
    std::size_t param_extent() const;
    std::size_t feature_extent() const;

    void run(StateVector &state, std::span<const double> params,
             std::span<const double> features) const;

  private:
    std::size_t n_qubits_ = 0;
    std::vector<Gate> gates_;
};

} // namespace qdqn
