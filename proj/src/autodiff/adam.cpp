#include "gesturelab/autodiff/adam.hpp"

#include <cmath>

#include "gesturelab/core/error.hpp"

namespace gesturelab::autodiff {

void Adam::step(ParameterStore& params, const std::vector<TensorData>& grads) {
    if (grads.size() != params.count()) throw Error("adam: gradient count mismatch");
    if (m_.empty()) {
        m_.resize(params.count());
        v_.resize(params.count());
        for (std::size_t i = 0; i < params.count(); ++i) {
            m_[i].assign(params.value(i).size(), 0.0);
            v_[i].assign(params.value(i).size(), 0.0);
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.count(); ++i) {
        auto& value = params.value(i).v;
        const auto& g = grads[i].v;
        if (g.size() != value.size()) throw Error("adam: gradient shape mismatch");
        for (std::size_t j = 0; j < value.size(); ++j) {
            if (!std::isfinite(g[j]))
                throw Error("adam: non-finite gradient for parameter '" +
                            params.entry(i).name + "'");
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

} // namespace gesturelab::autodiff
