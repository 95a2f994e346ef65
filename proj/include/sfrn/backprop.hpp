#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sfrn/matrix.hpp"
#include "sfrn/model.hpp"

namespace sfrn {

// Backward treatment of the surprisal path into the previous step's logits.
// exact: the analytic differential dy_{t-1} += ds * (p_{t-1} - x_t).
// paper: dp_{t-1} = ds (x) x_t, then dy_{t-1} += dp - p_{t-1} * rowsum(dp).
// For one-hot inputs the two are elementwise negatives of each other.
enum class GradMode : uint8_t { exact = 0, paper = 1 };

const char* grad_mode_name(GradMode m);

// Mirrors every Params block, plus the delta carried out of the window start
// (not applied across windows; truncation ends there).
struct Gradients {
    Matrix W, U, V, b, Wy, by;
    Matrix delta_h;  // B x N
    Matrix delta_c;  // B x N

    static Gradients zeros(const ModelConfig& config, int batch);

    void for_each_block(const std::function<void(const char*, Matrix&)>& fn);
    void for_each_block(const std::function<void(const char*, const Matrix&)>& fn) const;
};

// dy must hold any surprisal contribution arriving from step t+1 (zeros
// otherwise). Adds p_t - onehot(target), then dWy += h_t^T*dy,
// dby += colsums(dy), dh += dy*Wy^T.
void output_backward(const Params& params, const Matrix& h_t, const Matrix& p_t,
                     const std::vector<int>& targets, Matrix& dy, Gradients& grads, Matrix& dh);

struct LstmBackwardResult {
    Matrix dg;       // B x 4N gate pre-activation gradients [i|f|o|u]
    Matrix dh_prev;  // B x N
    Matrix dc_prev;  // B x N
};

// dc is the gradient carried from step t+1 and is updated in place with the
// dh * o * tanh'(chat) path before the gate gradients are formed.
LstmBackwardResult lstm_backward_step(const Params& params, CellConvention convention,
                                      const Matrix& gates, const Matrix& c_prev,
                                      const Matrix& chat, const Matrix& dh, Matrix& dc);

struct RnnBackwardResult {
    Matrix dg;
    Matrix dh_prev;
};

// dg = dh * (1 - h^2); dh_prev = dg * U^T.
RnnBackwardResult rnn_backward_step(const Params& params, const Matrix& h_t, const Matrix& dh);

// db += colsums(dg); dU += h_prev^T*dg; dW += x^T*dg. dx (= dg*W^T) is only
// computed when a buffer is supplied; one-hot inputs never need it.
void linear_backward(const Params& params, const Matrix& dg, const Matrix& x,
                     const Matrix& h_prev, Gradients& grads, Matrix* dx = nullptr);

// dV += s^T*dg; ds = dg*V^T; then the mode's contribution for step t-1 is
// accumulated onto dy_prev.
void surprisal_backward(const Params& params, const Matrix& dg, const Matrix& s,
                        const Matrix& p_prev, const Matrix& x, GradMode mode, Gradients& grads,
                        Matrix& dy_prev);

// Backward over cache steps [t_begin, t_end), last to first, with zero delta
// seeds at t_end-1. Surprisal-path gradient into step t_begin-1 is dropped
// (truncation). Weight gradients accumulate across all processed steps.
Gradients backward_steps(const Params& params, const ModelConfig& config, const StepCache& cache,
                         const std::vector<std::vector<int>>& targets, GradMode mode, int t_begin,
                         int t_end);

// Whole-window backward pass: backward_steps over every cached step.
Gradients backward_window(const Params& params, const ModelConfig& config, const StepCache& cache,
                          const std::vector<std::vector<int>>& targets, GradMode mode);

}  // namespace sfrn
