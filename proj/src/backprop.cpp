#include "sfrn/backprop.hpp"

#include <stdexcept>
#include <utility>

namespace sfrn {

const char* grad_mode_name(GradMode m) {
    return m == GradMode::exact ? "exact" : "paper";
}

Gradients Gradients::zeros(const ModelConfig& config, int batch) {
    Gradients g;
    const int m = config.input_size;
    const int n = config.hidden_size;
    const int gw = config.gate_width();
    g.W = Matrix(m, gw);
    g.U = Matrix(n, gw);
    g.V = Matrix(1, gw);
    g.b = Matrix(1, gw);
    g.Wy = Matrix(n, m);
    g.by = Matrix(1, m);
    g.delta_h = Matrix(batch, n);
    g.delta_c = Matrix(batch, n);
    return g;
}

void Gradients::for_each_block(const std::function<void(const char*, Matrix&)>& fn) {
    fn("W", W);
    fn("U", U);
    fn("V", V);
    fn("b", b);
    fn("Wy", Wy);
    fn("by", by);
}

void Gradients::for_each_block(const std::function<void(const char*, const Matrix&)>& fn) const {
    fn("W", W);
    fn("U", U);
    fn("V", V);
    fn("b", b);
    fn("Wy", Wy);
    fn("by", by);
}

namespace {

// Cores take the needed transposes as arguments so the per-window loop can
// build them once; the public single-step ops build them on the fly.

void output_backward_core(const Matrix& h_t, const Matrix& p_t, const std::vector<int>& targets,
                          const Matrix& wy_t, Matrix& dy, Gradients& grads, Matrix& dh) {
    const int batch = p_t.rows;
    const int m = p_t.cols;
    for (int i = 0; i < batch; ++i) {
        const double* pr = p_t.row(i);
        double* dyr = dy.row(i);
        for (int j = 0; j < m; ++j) dyr[j] += pr[j];
        dyr[targets[i]] -= 1.0;
    }
    matmul_at_into(h_t, dy, grads.Wy, /*accumulate=*/true);
    col_sums_into(dy, grads.by, /*accumulate=*/true);
    matmul_into(dy, wy_t, dh, /*accumulate=*/true);
}

void lstm_backward_core(CellConvention convention, const Matrix& gates, const Matrix& c_prev,
                        const Matrix& chat, const Matrix& dh, Matrix& dc, const Matrix& u_t,
                        Matrix& dg, Matrix& dh_prev, Matrix& dc_prev) {
    const int batch = dh.rows;
    const int n = dh.cols;
    const bool paper = convention == CellConvention::paper;
    for (int i = 0; i < batch; ++i) {
        const double* gr = gates.row(i);
        const double* cpr = c_prev.row(i);
        const double* chr = chat.row(i);
        const double* dhr = dh.row(i);
        double* dcr = dc.row(i);
        double* dcp = dc_prev.row(i);
        double* dgr = dg.row(i);
        for (int j = 0; j < n; ++j) {
            const double gi = gr[kGateI * n + j];
            const double gf = gr[kGateF * n + j];
            const double go = gr[kGateO * n + j];
            const double gu = gr[kGateU * n + j];
            // dc += dh * o * tanh'(chat), then carry to dc_prev
            dcr[j] += dhr[j] * go * (1.0 - chr[j] * chr[j]);
            dcp[j] = dcr[j] * (paper ? (1.0 - gf) : gf);
            const double df_sign = paper ? -1.0 : 1.0;
            dgr[kGateI * n + j] = dcr[j] * gu * gi * (1.0 - gi);
            dgr[kGateF * n + j] = df_sign * dcr[j] * cpr[j] * gf * (1.0 - gf);
            dgr[kGateO * n + j] = dhr[j] * chr[j] * go * (1.0 - go);
            dgr[kGateU * n + j] = dcr[j] * gi * (1.0 - gu * gu);
        }
    }
    matmul_into(dg, u_t, dh_prev);
}

void rnn_backward_core(const Matrix& h_t, const Matrix& dh, const Matrix& u_t, Matrix& dg,
                       Matrix& dh_prev) {
    const size_t count = h_t.size();
    for (size_t i = 0; i < count; ++i) {
        dg.data[i] = dh.data[i] * (1.0 - h_t.data[i] * h_t.data[i]);
    }
    matmul_into(dg, u_t, dh_prev);
}

// Fills dy_prev_add with the chosen mode's surprisal contribution and adds it
// onto dy_prev. ds is the per-lane scalar dg * V^T.
void surprisal_to_dy_prev(const Matrix& ds, const Matrix& p_prev, const Matrix& x, GradMode mode,
                          Matrix& dy_prev) {
    const int batch = ds.rows;
    const int m = p_prev.cols;
    for (int i = 0; i < batch; ++i) {
        const double dsi = ds(i, 0);
        const double* pr = p_prev.row(i);
        const double* xr = x.row(i);
        double* out = dy_prev.row(i);
        if (mode == GradMode::exact) {
            for (int j = 0; j < m; ++j) out[j] += dsi * (pr[j] - xr[j]);
        } else {
            // dp = ds (x) x; dy_prev += dp - p_prev * rowsum(dp)
            double rowsum = 0.0;
            for (int j = 0; j < m; ++j) rowsum += dsi * xr[j];
            for (int j = 0; j < m; ++j) out[j] += dsi * xr[j] - pr[j] * rowsum;
        }
    }
}

void validate_cache(const ModelConfig& config, const StepCache& cache,
                    const std::vector<std::vector<int>>& targets, int t_begin, int t_end) {
    const size_t steps = static_cast<size_t>(cache.steps);
    const bool is_lstm = config.cell == CellKind::lstm;
    if (t_begin < 0 || t_end > cache.steps || t_begin >= t_end) {
        throw std::invalid_argument("backward: step range [" + std::to_string(t_begin) + ", " +
                                    std::to_string(t_end) + ") outside cache of " +
                                    std::to_string(cache.steps) + " steps");
    }
    const bool complete = cache.x.size() == steps && cache.s.size() == steps &&
                          cache.h.size() == steps && cache.p.size() == steps &&
                          targets.size() == steps &&
                          (!is_lstm || (cache.gates.size() == steps && cache.c.size() == steps &&
                                        cache.chat.size() == steps));
    if (!complete) throw std::invalid_argument("backward: incomplete step cache");
}

}  // namespace

void output_backward(const Params& params, const Matrix& h_t, const Matrix& p_t,
                     const std::vector<int>& targets, Matrix& dy, Gradients& grads, Matrix& dh) {
    const Matrix wy_t = transpose(params.Wy);
    output_backward_core(h_t, p_t, targets, wy_t, dy, grads, dh);
}

LstmBackwardResult lstm_backward_step(const Params& params, CellConvention convention,
                                      const Matrix& gates, const Matrix& c_prev,
                                      const Matrix& chat, const Matrix& dh, Matrix& dc) {
    const int batch = dh.rows;
    const int n = dh.cols;
    LstmBackwardResult r;
    r.dg = Matrix(batch, 4 * n);
    r.dh_prev = Matrix(batch, n);
    r.dc_prev = Matrix(batch, n);
    const Matrix u_t = transpose(params.U);
    lstm_backward_core(convention, gates, c_prev, chat, dh, dc, u_t, r.dg, r.dh_prev, r.dc_prev);
    return r;
}

RnnBackwardResult rnn_backward_step(const Params& params, const Matrix& h_t, const Matrix& dh) {
    RnnBackwardResult r;
    r.dg = Matrix(dh.rows, dh.cols);
    r.dh_prev = Matrix(dh.rows, dh.cols);
    const Matrix u_t = transpose(params.U);
    rnn_backward_core(h_t, dh, u_t, r.dg, r.dh_prev);
    return r;
}

void linear_backward(const Params& params, const Matrix& dg, const Matrix& x,
                     const Matrix& h_prev, Gradients& grads, Matrix* dx) {
    col_sums_into(dg, grads.b, /*accumulate=*/true);
    matmul_at_into(h_prev, dg, grads.U, /*accumulate=*/true);
    matmul_at_into(x, dg, grads.W, /*accumulate=*/true);
    if (dx != nullptr) {
        matmul_bt_into(dg, params.W, *dx, /*accumulate=*/true);
    }
}

void surprisal_backward(const Params& params, const Matrix& dg, const Matrix& s,
                        const Matrix& p_prev, const Matrix& x, GradMode mode, Gradients& grads,
                        Matrix& dy_prev) {
    matmul_at_into(s, dg, grads.V, /*accumulate=*/true);
    const Matrix ds = matmul_bt(dg, params.V);
    surprisal_to_dy_prev(ds, p_prev, x, mode, dy_prev);
}

Gradients backward_steps(const Params& params, const ModelConfig& config, const StepCache& cache,
                         const std::vector<std::vector<int>>& targets, GradMode mode, int t_begin,
                         int t_end) {
    validate_cache(config, cache, targets, t_begin, t_end);
    const int batch = cache.h0.rows;
    const int n = config.hidden_size;
    const int gw = config.gate_width();
    const int m = config.input_size;
    const bool is_lstm = config.cell == CellKind::lstm;

    Gradients grads = Gradients::zeros(config, batch);
    const Matrix u_t = transpose(params.U);
    const Matrix wy_t = transpose(params.Wy);

    Matrix dh(batch, n), dh_prev(batch, n);
    Matrix dc(batch, n), dc_prev(batch, n);
    Matrix dy(batch, m), dy_pending(batch, m);
    Matrix dg(batch, gw);
    Matrix ds(batch, 1);
    bool have_pending = false;

    for (int t = t_end - 1; t >= t_begin; --t) {
        if (have_pending) {
            std::swap(dy, dy_pending);
        } else {
            dy.zero();
        }
        output_backward_core(cache.h[t], cache.p[t], targets[t], wy_t, dy, grads, dh);

        if (is_lstm) {
            lstm_backward_core(config.convention, cache.gates[t], cache.c_prev(t), cache.chat[t],
                               dh, dc, u_t, dg, dh_prev, dc_prev);
        } else {
            rnn_backward_core(cache.h[t], dh, u_t, dg, dh_prev);
        }

        // db += colsums(dg); dU += h_prev^T*dg; dW += x^T*dg (one-hot scatter).
        col_sums_into(dg, grads.b, /*accumulate=*/true);
        matmul_at_into(cache.h_prev(t), dg, grads.U, /*accumulate=*/true);
        const Matrix& x = cache.x[t];
        for (int i = 0; i < batch; ++i) {
            const double* xr = x.row(i);
            const double* dgr = dg.row(i);
            for (int j = 0; j < m; ++j) {
                if (xr[j] != 0.0) {
                    double* wrow = grads.W.row(j);
                    for (int k = 0; k < gw; ++k) wrow[k] += dgr[k];
                    break;
                }
            }
        }

        have_pending = false;
        if (config.feedback) {
            matmul_at_into(cache.s[t], dg, grads.V, /*accumulate=*/true);
            if (t > t_begin) {
                // Route gradient through s_t into the previous step's logits;
                // at t_begin the previous prediction lies past the truncation
                // boundary and receives nothing.
                matmul_bt_into(dg, params.V, ds);
                dy_pending.zero();
                surprisal_to_dy_prev(ds, cache.p[t - 1], x, mode, dy_pending);
                have_pending = true;
            }
        }

        std::swap(dh, dh_prev);
        std::swap(dc, dc_prev);
    }

    grads.delta_h = dh;
    grads.delta_c = dc;
    return grads;
}

Gradients backward_window(const Params& params, const ModelConfig& config, const StepCache& cache,
                          const std::vector<std::vector<int>>& targets, GradMode mode) {
    return backward_steps(params, config, cache, targets, mode, 0, cache.steps);
}

}  // namespace sfrn
