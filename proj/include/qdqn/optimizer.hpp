#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qdqn/ansatz.hpp"

namespace qdqn {

struct LearningRates {
    double rotational = 0.001;
    double input = 0.001;
    double output = 0.1;
};

/// Adam over the trainable slice of a ParamSet, with a step size per
/// parameter role.
class Adam {
  public:
    Adam(const ModelSpec &model, LearningRates lr, double beta1 = 0.9, double beta2 = 0.999,
         double epsilon = 1e-8);

    /// Descends along `grad` (ordered as ModelSpec::trainable()).
    void step(ParamSet &params, std::span<const double> grad);

    std::size_t steps() const noexcept { return t_; }

  private:
    std::vector<std::size_t> index_;
    std::vector<double> lr_;
    std::vector<double> m_;
    std::vector<double> v_;
    double beta1_;
    double beta2_;
    double epsilon_;
    std::size_t t_ = 0;
};

} // namespace qdqn
