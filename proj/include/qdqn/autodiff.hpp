#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qdqn/ansatz.hpp"
#include "qdqn/statevec.hpp"

namespace qdqn {

/// One entry per trainable parameter, ordered as ModelSpec::trainable().
using GradientVector = std::vector<double>;

/// Adjoint-method differentiation of the model's Q-values.
///
/// forward() runs the circuit once and caches the final state; backward()
/// then returns the gradient of sum_a c_a Q_a for arbitrary action weights
/// c, using one reverse sweep over the gate program regardless of the number
/// of parameters. The object owns scratch buffers and can be reused across
/// inputs; it is not thread-safe.
class AdjointDifferentiator {
  public:
    explicit AdjointDifferentiator(const ModelSpec &model);

    /// Returns Q-values for `features`.
    std::span<const double> forward(const ParamSet &params, std::span<const double> features);

    /// Expectations <O_a> from the last forward pass.
    std::span<const double> expectations() const noexcept { return expvals_; }

    /// Adds d(sum_a c_a Q_a)/d(theta) into `grad` (size num_trainable()).
    void backward(std::span<const double> action_weights, std::span<double> grad);

  private:
    const ModelSpec *model_;
    const ParamSet *params_ = nullptr;
    std::vector<double> features_;
    StateVector psi_;
    StateVector lambda_;
    StateVector scratch_;
    std::vector<double> q_;
    std::vector<double> expvals_;
};

/// Gradient of Q_action with respect to every trainable parameter.
GradientVector adjoint_grad(const ModelSpec &model, const ParamSet &params,
                            std::span<const double> features, std::size_t action);

/// Gradient of sum_a c_a Q_a.
GradientVector adjoint_grad_weighted(const ModelSpec &model, const ParamSet &params,
                                     std::span<const double> features,
                                     std::span<const double> action_weights);

double l2_norm(std::span<const double> v);

/// Scatters a gradient back onto the flat parameter layout.
std::vector<double> scatter_gradient(const ModelSpec &model, std::span<const double> grad);

} // namespace qdqn
