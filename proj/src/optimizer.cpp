#include "qdqn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace qdqn {

Adam::Adam(const ModelSpec &model, LearningRates lr, double beta1, double beta2, double epsilon)
    : index_(model.trainable()), lr_(index_.size()), m_(index_.size(), 0.0),
      v_(index_.size(), 0.0), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    for (std::size_t i = 0; i < index_.size(); ++i) {
        switch (model.role_of(index_[i])) {
        case ParamRole::Rotational:
            lr_[i] = lr.rotational;
            break;
        case ParamRole::Input:
            lr_[i] = lr.input;
            break;
        case ParamRole::Output:
            lr_[i] = lr.output;
            break;
        }
    }
}

void Adam::step(ParamSet &params, std::span<const double> grad) {
    if (grad.size() != index_.size()) {
        throw std::invalid_argument("Adam: gradient size mismatch");
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < index_.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        const double m_hat = m_[i] / bc1;
        const double v_hat = v_[i] / bc2;
        params.values[index_[i]] -= lr_[i] * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
}

} // namespace qdqn
