#pragma once

#include <vector>

#include "gesturelab/autodiff/nn.hpp"

namespace gesturelab::autodiff {

// Bias-corrected Adam. Moment buffers persist across steps, aligned with
// the parameter store.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    // Throws on a non-finite gradient, naming the parameter.
    void step(ParameterStore& params, const std::vector<TensorData>& grads);

    long iteration() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

} // namespace gesturelab::autodiff
