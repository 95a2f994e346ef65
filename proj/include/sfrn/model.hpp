#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sfrn/matrix.hpp"

namespace sfrn {

enum class CellKind : uint8_t { simple_rnn = 0, lstm = 1 };

// Cell state recurrence variant. paper: c_t = (1 - f_t) * c_{t-1} + i_t * u_t,
// standard: c_t = f_t * c_{t-1} + i_t * u_t. The backward pass follows suit.
enum class CellConvention : uint8_t { paper = 0, standard = 1 };

// Probabilities are floored here and renormalized so that log(p) stays finite.
constexpr double kProbFloor = 1e-12;

struct ModelConfig {
    CellKind cell{CellKind::lstm};
    int input_size{256};   // M
    int hidden_size{128};  // N
    bool feedback{true};
    int bptt_len{100};  // S
    CellConvention convention{CellConvention::paper};

    // Width of the concatenated gate pre-activation: 4N for LSTM ([i|f|o|u]
    // blocks), N for the simple RNN.
    int gate_width() const { return cell == CellKind::lstm ? 4 * hidden_size : hidden_size; }

    void validate() const;
};

// LSTM gate block offsets into the concatenated width-4N layout.
enum GateBlock { kGateI = 0, kGateF = 1, kGateO = 2, kGateU = 3 };

// Trainable weights. Gate blocks are stored concatenated: W is M x G,
// U is N x G, V is 1 x G, b is 1 x G with G = gate_width().
struct Params {
    Matrix W;   // feedforward, input -> gates
    Matrix U;   // recurrent, hidden -> gates
    Matrix V;   // feedback, surprisal -> gates (single row; s is a per-lane scalar)
    Matrix b;   // gate bias
    Matrix Wy;  // output projection, N x M
    Matrix by;  // output bias, 1 x M

    static Params shaped(const ModelConfig& config);

    // Fixed block order used by the optimizer, checkpoints and gradient
    // sweeps: W, U, V, b, Wy, by.
    void for_each_block(const std::function<void(const char*, Matrix&)>& fn);
    void for_each_block(const std::function<void(const char*, const Matrix&)>& fn) const;
};

// Xavier-uniform init for W, U, V, Wy (bound sqrt(6/(rows+cols)) of the full
// concatenated matrix). Biases zero except the LSTM forget-gate block of b,
// which starts at 1. V stays zero when feedback is off.
Params init_params(const ModelConfig& config, uint64_t seed);

// State carried across BPTT windows: hidden h, cell c (LSTM), and the
// previous step's prediction rows.
struct CarryState {
    Matrix h;       // B x N
    Matrix c;       // B x N (unused for simple RNN, kept zero)
    Matrix p_prev;  // B x M probability rows

    // Fresh-sequence values: h = c = 0, p uniform 1/M.
    static CarryState fresh(const ModelConfig& config, int batch);
};

// Everything the backward pass needs from one forward window.
struct StepCache {
    int steps{0};
    Matrix h0, c0;              // state at window entry
    std::vector<Matrix> x;      // B x M one-hot inputs
    std::vector<Matrix> s;      // B x 1 surprisal
    std::vector<Matrix> gates;  // B x 4N gate activations [i|f|o|u] (LSTM)
    std::vector<Matrix> c;      // B x N cell state (LSTM)
    std::vector<Matrix> chat;   // B x N tanh(c) (LSTM)
    std::vector<Matrix> h;      // B x N hidden
    std::vector<Matrix> y;      // B x M logits
    std::vector<Matrix> p;      // B x M probabilities

    const Matrix& h_prev(int t) const { return t == 0 ? h0 : h[t - 1]; }
    const Matrix& c_prev(int t) const { return t == 0 ? c0 : c[t - 1]; }
};

// s[i] = -sum_j ln(p_prev[i][j]) * x[i][j]; for one-hot x this is the negative
// log probability assigned to the observed symbol. Natural log.
Matrix surprisal(const Matrix& p_prev, const Matrix& x);
void surprisal_into(const Matrix& p_prev, const Matrix& x, Matrix& s);

// h_t = tanh(x*W + h_prev*U + s (x) V + b). The feedback term scales the V row
// by each lane's surprisal scalar; it is skipped entirely when feedback is off.
Matrix rnn_step(const Params& params, const ModelConfig& config, const Matrix& h_prev,
                const Matrix& x, const Matrix& s);

struct LstmStepResult {
    Matrix h;
    Matrix c;
    Matrix chat;
    Matrix gates;  // B x 4N activations [i|f|o|u]
};

// Gates i,f,o = sigmoid, u = tanh of their pre-activation blocks;
// cell update per config.convention; h = o * tanh(c).
LstmStepResult lstm_step(const Params& params, const ModelConfig& config, const Matrix& h_prev,
                         const Matrix& c_prev, const Matrix& x, const Matrix& s);

// y = h*Wy + by; p = rowwise softmax (max-subtracted), floored at kProbFloor
// and renormalized.
void output_probs_into(const Params& params, const Matrix& h, Matrix& y, Matrix& p);
std::pair<Matrix, Matrix> output_probs(const Params& params, const Matrix& h);

struct ForwardResult {
    StepCache cache;
    Matrix loss_nats;  // B x 1 per-lane cross-entropy totals
    CarryState carry;  // state after the window
};

// Runs surprisal -> cell step -> output for each step of the window, scoring
// p_t against targets[t] (the next byte) and feeding p_t into step t+1's
// surprisal. inputs.size() determines the executed window length.
ForwardResult forward_window(const Params& params, const ModelConfig& config,
                             const CarryState& carry, const std::vector<Matrix>& inputs,
                             const std::vector<std::vector<int>>& targets);

// (loss_nats / char_count) / ln 2.
double bpc(double loss_nats, size_t char_count);

}  // namespace sfrn
