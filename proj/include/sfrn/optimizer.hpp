#pragma once

#include "sfrn/backprop.hpp"
#include "sfrn/model.hpp"

namespace sfrn {

// Adagrad over a recent window of gradients, realized as an exponential
// moving average of squared gradients:
//   acc <- decay*acc + (1-decay)*g^2
//   theta <- theta - lr * g / (sqrt(acc) + eps)
// clip > 0 clamps each gradient element to [-clip, clip] before accumulation.
struct OptState {
    Matrix W, U, V, b, Wy, by;  // squared-gradient accumulators
    double decay{0.95};
    double lr{0.001};
    double eps{1e-8};
    double clip{0.0};  // 0 disables clipping

    static OptState fresh(const ModelConfig& config, double lr, double decay, double eps,
                          double clip);
};

// One elementwise update over every block. Throws if any gradient entry is
// non-finite, naming the offending block.
void opt_step(Params& params, const Gradients& grads, OptState& state);

}  // namespace sfrn
