#include "sfrn/model.hpp"

#include <cmath>
#include <stdexcept>

#include "sfrn/rng.hpp"

namespace sfrn {

void ModelConfig::validate() const {
    if (input_size < 2) throw std::invalid_argument("input_size must be >= 2");
    if (hidden_size < 1) throw std::invalid_argument("hidden_size must be >= 1");
    if (bptt_len < 2) throw std::invalid_argument("bptt_len must be >= 2");
}

Params Params::shaped(const ModelConfig& config) {
    const int m = config.input_size;
    const int n = config.hidden_size;
    const int g = config.gate_width();
    Params p;
    p.W = Matrix(m, g);
    p.U = Matrix(n, g);
    p.V = Matrix(1, g);
    p.b = Matrix(1, g);
    p.Wy = Matrix(n, m);
    p.by = Matrix(1, m);
    return p;
}

void Params::for_each_block(const std::function<void(const char*, Matrix&)>& fn) {
    fn("W", W);
    fn("U", U);
    fn("V", V);
    fn("b", b);
    fn("Wy", Wy);
    fn("by", by);
}

void Params::for_each_block(const std::function<void(const char*, const Matrix&)>& fn) const {
    fn("W", W);
    fn("U", U);
    fn("V", V);
    fn("b", b);
    fn("Wy", Wy);
    fn("by", by);
}

namespace {

void xavier_fill(Matrix& m, Rng& rng) {
    const double bound = std::sqrt(6.0 / (m.rows + m.cols));
    for (double& v : m.data) v = rng.next_symmetric(bound);
}

}  // namespace

Params init_params(const ModelConfig& config, uint64_t seed) {
    config.validate();
    Params p = Params::shaped(config);
    Rng rng(seed);
    // Draw order is fixed (W, U, V, Wy, row-major within each) so a seed
    // replays identically.
    xavier_fill(p.W, rng);
    xavier_fill(p.U, rng);
    if (config.feedback) xavier_fill(p.V, rng);
    xavier_fill(p.Wy, rng);
    if (config.cell == CellKind::lstm) {
        const int n = config.hidden_size;
        for (int j = 0; j < n; ++j) p.b(0, kGateF * n + j) = 1.0;
    }
    return p;
}

CarryState CarryState::fresh(const ModelConfig& config, int batch) {
    CarryState st;
    st.h = Matrix(batch, config.hidden_size);
    st.c = Matrix(batch, config.hidden_size);
    st.p_prev = Matrix(batch, config.input_size);
    st.p_prev.fill(1.0 / config.input_size);
    return st;
}

void surprisal_into(const Matrix& p_prev, const Matrix& x, Matrix& s) {
    if (!p_prev.same_shape(x)) {
        throw std::invalid_argument("surprisal: p_prev is " + shape_str(p_prev) + ", x is " +
                                    shape_str(x));
    }
    if (s.rows != x.rows || s.cols != 1) s = Matrix(x.rows, 1);
    for (int i = 0; i < x.rows; ++i) {
        const double* xr = x.row(i);
        const double* pr = p_prev.row(i);
        double acc = 0.0;
        for (int j = 0; j < x.cols; ++j) {
            if (xr[j] != 0.0) {
                if (pr[j] <= 0.0) {
                    throw std::domain_error("surprisal: zero probability at an observed index");
                }
                acc += -std::log(pr[j]) * xr[j];
            }
        }
        s(i, 0) = acc;
    }
}

Matrix surprisal(const Matrix& p_prev, const Matrix& x) {
    Matrix s(x.rows, 1);
    surprisal_into(p_prev, x, s);
    return s;
}

namespace {

// Adds h_prev*U, the per-lane surprisal feedback s (x) V and the bias onto a
// pre-activation already holding x*W. Shared by the generic and one-hot paths
// so both produce identical bits.
void preact_tail(const Params& params, const ModelConfig& config, const Matrix& h_prev,
                 const Matrix& s, Matrix& preact) {
    matmul_into(h_prev, params.U, preact, /*accumulate=*/true);
    const int g = preact.cols;
    if (config.feedback) {
        const double* vrow = params.V.row(0);
        for (int i = 0; i < preact.rows; ++i) {
            const double si = s(i, 0);
            double* pr = preact.row(i);
            for (int j = 0; j < g; ++j) pr[j] += si * vrow[j];
        }
    }
    const double* brow = params.b.row(0);
    for (int i = 0; i < preact.rows; ++i) {
        double* pr = preact.row(i);
        for (int j = 0; j < g; ++j) pr[j] += brow[j];
    }
}

void preact_generic(const Params& params, const ModelConfig& config, const Matrix& h_prev,
                    const Matrix& x, const Matrix& s, Matrix& preact) {
    matmul_into(x, params.W, preact);
    preact_tail(params, config, h_prev, s, preact);
}

// x given as one byte index per lane; x*W is a row gather.
void preact_onehot(const Params& params, const ModelConfig& config, const Matrix& h_prev,
                   const std::vector<int>& x_idx, const Matrix& s, Matrix& preact) {
    const int g = preact.cols;
    for (int i = 0; i < preact.rows; ++i) {
        const double* wrow = params.W.row(x_idx[i]);
        double* pr = preact.row(i);
        for (int j = 0; j < g; ++j) pr[j] = wrow[j];
    }
    preact_tail(params, config, h_prev, s, preact);
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// preact (B x 4N) -> gate activations, cell update, hidden output.
void lstm_from_preact(CellConvention conv, const Matrix& preact, const Matrix& c_prev,
                      Matrix& gates, Matrix& c, Matrix& chat, Matrix& h) {
    const int batch = preact.rows;
    const int n = preact.cols / 4;
    for (int i = 0; i < batch; ++i) {
        const double* pr = preact.row(i);
        double* gr = gates.row(i);
        for (int j = 0; j < 3 * n; ++j) gr[j] = sigmoid(pr[j]);      // i, f, o
        for (int j = 3 * n; j < 4 * n; ++j) gr[j] = std::tanh(pr[j]);  // u
        const double* cp = c_prev.row(i);
        double* cr = c.row(i);
        double* chr = chat.row(i);
        double* hr = h.row(i);
        for (int j = 0; j < n; ++j) {
            const double gi = gr[kGateI * n + j];
            const double gf = gr[kGateF * n + j];
            const double go = gr[kGateO * n + j];
            const double gu = gr[kGateU * n + j];
            const double retain = conv == CellConvention::paper ? (1.0 - gf) : gf;
            cr[j] = retain * cp[j] + gi * gu;
            chr[j] = std::tanh(cr[j]);
            hr[j] = go * chr[j];
        }
    }
}

int onehot_index(const Matrix& x, int row) {
    const double* xr = x.row(row);
    for (int j = 0; j < x.cols; ++j) {
        if (xr[j] == 1.0) return j;
    }
    throw std::invalid_argument("input row " + std::to_string(row) + " is not one-hot");
}

}  // namespace

Matrix rnn_step(const Params& params, const ModelConfig& config, const Matrix& h_prev,
                const Matrix& x, const Matrix& s) {
    Matrix preact(x.rows, config.gate_width());
    preact_generic(params, config, h_prev, x, s, preact);
    map_into(preact, Unary::tanh, preact);
    return preact;
}

LstmStepResult lstm_step(const Params& params, const ModelConfig& config, const Matrix& h_prev,
                         const Matrix& c_prev, const Matrix& x, const Matrix& s) {
    const int batch = x.rows;
    const int n = config.hidden_size;
    Matrix preact(batch, config.gate_width());
    preact_generic(params, config, h_prev, x, s, preact);
    LstmStepResult r;
    r.gates = Matrix(batch, 4 * n);
    r.c = Matrix(batch, n);
    r.chat = Matrix(batch, n);
    r.h = Matrix(batch, n);
    lstm_from_preact(config.convention, preact, c_prev, r.gates, r.c, r.chat, r.h);
    return r;
}

void output_probs_into(const Params& params, const Matrix& h, Matrix& y, Matrix& p) {
    const int batch = h.rows;
    const int m = params.Wy.cols;
    if (y.rows != batch || y.cols != m) y = Matrix(batch, m);
    if (p.rows != batch || p.cols != m) p = Matrix(batch, m);
    matmul_into(h, params.Wy, y);
    const double* brow = params.by.row(0);
    for (int i = 0; i < batch; ++i) {
        double* yr = y.row(i);
        for (int j = 0; j < m; ++j) yr[j] += brow[j];
    }
    for (int i = 0; i < batch; ++i) {
        const double* yr = y.row(i);
        double* pr = p.row(i);
        double mx = yr[0];
        for (int j = 1; j < m; ++j) mx = yr[j] > mx ? yr[j] : mx;
        double sum = 0.0;
        for (int j = 0; j < m; ++j) {
            pr[j] = std::exp(yr[j] - mx);
            sum += pr[j];
        }
        for (int j = 0; j < m; ++j) pr[j] /= sum;
        double floored_sum = 0.0;
        for (int j = 0; j < m; ++j) {
            if (pr[j] < kProbFloor) pr[j] = kProbFloor;
            floored_sum += pr[j];
        }
        for (int j = 0; j < m; ++j) pr[j] /= floored_sum;
    }
}

std::pair<Matrix, Matrix> output_probs(const Params& params, const Matrix& h) {
    Matrix y, p;
    output_probs_into(params, h, y, p);
    return {std::move(y), std::move(p)};
}

ForwardResult forward_window(const Params& params, const ModelConfig& config,
                             const CarryState& carry, const std::vector<Matrix>& inputs,
                             const std::vector<std::vector<int>>& targets) {
    const int steps = static_cast<int>(inputs.size());
    if (steps == 0) throw std::invalid_argument("forward_window: empty input sequence");
    if (targets.size() != inputs.size()) {
        throw std::invalid_argument("forward_window: " + std::to_string(inputs.size()) +
                                    " inputs vs " + std::to_string(targets.size()) + " targets");
    }
    const int batch = inputs[0].rows;
    const int n = config.hidden_size;
    const bool is_lstm = config.cell == CellKind::lstm;

    ForwardResult out;
    StepCache& cache = out.cache;
    cache.steps = steps;
    cache.h0 = carry.h;
    cache.c0 = carry.c;
    cache.x.resize(steps);
    cache.s.resize(steps);
    cache.h.resize(steps);
    cache.y.resize(steps);
    cache.p.resize(steps);
    if (is_lstm) {
        cache.gates.resize(steps);
        cache.c.resize(steps);
        cache.chat.resize(steps);
    }
    out.loss_nats = Matrix(batch, 1);

    Matrix preact(batch, config.gate_width());
    std::vector<int> x_idx(batch);
    const Matrix* p_prev = &carry.p_prev;
    const Matrix* h_prev = &carry.h;
    const Matrix* c_prev = &carry.c;

    for (int t = 0; t < steps; ++t) {
        const Matrix& x = inputs[t];
        for (int i = 0; i < batch; ++i) x_idx[i] = onehot_index(x, i);

        surprisal_into(*p_prev, x, cache.s[t]);
        preact_onehot(params, config, *h_prev, x_idx, cache.s[t], preact);
        if (is_lstm) {
            cache.gates[t] = Matrix(batch, 4 * n);
            cache.c[t] = Matrix(batch, n);
            cache.chat[t] = Matrix(batch, n);
            cache.h[t] = Matrix(batch, n);
            lstm_from_preact(config.convention, preact, *c_prev, cache.gates[t], cache.c[t],
                             cache.chat[t], cache.h[t]);
            c_prev = &cache.c[t];
        } else {
            cache.h[t] = Matrix(batch, n);
            map_into(preact, Unary::tanh, cache.h[t]);
        }
        output_probs_into(params, cache.h[t], cache.y[t], cache.p[t]);

        for (int i = 0; i < batch; ++i) {
            out.loss_nats(i, 0) += -std::log(cache.p[t](i, targets[t][i]));
        }
        cache.x[t] = x;
        p_prev = &cache.p[t];
        h_prev = &cache.h[t];
    }

    out.carry.h = cache.h[steps - 1];
    out.carry.c = is_lstm ? cache.c[steps - 1] : carry.c;
    out.carry.p_prev = cache.p[steps - 1];
    return out;
}

double bpc(double loss_nats, size_t char_count) {
    if (char_count == 0) throw std::invalid_argument("bpc: char_count must be positive");
    return (loss_nats / static_cast<double>(char_count)) / std::log(2.0);
}

}  // namespace sfrn
