#include "sfrn/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace sfrn {

OptState OptState::fresh(const ModelConfig& config, double lr, double decay, double eps,
                         double clip) {
    const int m = config.input_size;
    const int n = config.hidden_size;
    const int g = config.gate_width();
    OptState s;
    s.W = Matrix(m, g);
    s.U = Matrix(n, g);
    s.V = Matrix(1, g);
    s.b = Matrix(1, g);
    s.Wy = Matrix(n, m);
    s.by = Matrix(1, m);
    s.lr = lr;
    s.decay = decay;
    s.eps = eps;
    s.clip = clip;
    return s;
}

namespace {

void update_block(const char* name, Matrix& theta, const Matrix& grad, Matrix& acc,
                  const OptState& st) {
    if (!theta.same_shape(grad) || !theta.same_shape(acc)) {
        throw std::invalid_argument(std::string("opt_step: block ") + name + " is " +
                                    shape_str(theta) + ", gradient is " + shape_str(grad));
    }
    const size_t count = theta.size();
    for (size_t i = 0; i < count; ++i) {
        double g = grad.data[i];
        if (!std::isfinite(g)) {
            throw std::runtime_error(std::string("opt_step: non-finite gradient in block ") +
                                     name);
        }
        if (st.clip > 0.0) {
            if (g > st.clip) g = st.clip;
            if (g < -st.clip) g = -st.clip;
        }
        acc.data[i] = st.decay * acc.data[i] + (1.0 - st.decay) * g * g;
        theta.data[i] -= st.lr * g / (std::sqrt(acc.data[i]) + st.eps);
    }
}

}  // namespace

void opt_step(Params& params, const Gradients& grads, OptState& state) {
    update_block("W", params.W, grads.W, state.W, state);
    update_block("U", params.U, grads.U, state.U, state);
    update_block("V", params.V, grads.V, state.V, state);
    update_block("b", params.b, grads.b, state.b, state);
    update_block("Wy", params.Wy, grads.Wy, state.Wy, state);
    update_block("by", params.by, grads.by, state.by, state);
}

}  // namespace sfrn
