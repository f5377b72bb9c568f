// Adam with bias correction. Learning rate 1e-3 by default; the remaining
// constants are the optimizer's canonical values.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stgnn/matrix.hpp"

namespace stgnn {

struct AdamState {
    DenseMatrix m;  // first moment
    DenseMatrix v;  // second moment
    long t = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    explicit AdamState(const Parameter& p, double lr_ = 1e-3)
        : m(p.value.rows, p.value.cols), v(p.value.rows, p.value.cols), lr(lr_) {}
};

inline void adam_step(Parameter& p, AdamState& s) {
    if (!s.m.same_shape(p.value) || !s.v.same_shape(p.value))
        throw std::invalid_argument("adam_step: state shape does not match parameter " + p.name);
    if (!p.grad.same_shape(p.value))
        throw std::invalid_argument("adam_step: gradient not populated for " + p.name);
    s.t += 1;
    const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
    const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
    for (size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad.data[i];
        s.m.data[i] = s.beta1 * s.m.data[i] + (1.0 - s.beta1) * g;
        s.v.data[i] = s.beta2 * s.v.data[i] + (1.0 - s.beta2) * g * g;
        const double mhat = s.m.data[i] / bc1;
        const double vhat = s.v.data[i] / bc2;
        p.value.data[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
}

/// Adam over a whole parameter set, one state per parameter.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Parameter*> params, double lr)
        : params_(std::move(params)) {
        states_.reserve(params_.size());
        for (Parameter* p : params_) states_.emplace_back(*p, lr);
    }

    void zero_grad() {
        for (Parameter* p : params_) p->zero_grad();
    }

    void step() {
        for (size_t i = 0; i < params_.size(); ++i)
            if (params_[i]->trainable) adam_step(*params_[i], states_[i]);
    }

private:
    std::vector<Parameter*> params_;
    std::vector<AdamState> states_;
};

}  // namespace stgnn
