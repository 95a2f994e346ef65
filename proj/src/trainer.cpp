#include "sfrn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sfrn/rng.hpp"

namespace sfrn {

void TrainConfig::validate() const {
    model.validate();
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (seq_len < static_cast<size_t>(model.bptt_len) + 1) {
        throw std::invalid_argument("seq_len must be >= bptt_len + 1");
    }
    if (lr <= 0.0) throw std::invalid_argument("lr must be positive");
    if (decay <= 0.0 || decay >= 1.0) throw std::invalid_argument("decay must be in (0,1)");
}

std::string metrics_line(const MetricsRecord& rec) {
    nlohmann::ordered_json j;
    j["step"] = rec.step;
    j["chars_seen"] = rec.chars_seen;
    j["train_bpc"] = rec.train_bpc;
    j["smoothed_train_bpc"] = rec.smoothed_train_bpc;
    if (rec.valid_bpc.has_value()) j["valid_bpc"] = *rec.valid_bpc;
    j["wallclock_seconds"] = rec.wallclock_seconds;
    return j.dump();
}

double evaluate(const Params& params, const ModelConfig& config, const Corpus& corpus,
                Split split, int batch) {
    const Range& r = corpus.range(split);
    const size_t shard_len = r.length() / static_cast<size_t>(batch);
    if (shard_len < 2) {
        throw std::runtime_error(std::string("split '") + split_name(split) +
                                 "' too small to evaluate: " + std::to_string(r.length()) +
                                 " bytes across " + std::to_string(batch) +
                                 " shards leaves < 2 per shard");
    }
    const size_t predictions_per_shard = shard_len - 1;
    const int chunk_max = config.bptt_len;

    CarryState carry = CarryState::fresh(config, batch);
    std::vector<Matrix> inputs;
    std::vector<std::vector<int>> targets;

    double total_bits = 0.0;
    size_t done = 0;
    while (done < predictions_per_shard) {
        const int chunk =
            static_cast<int>(std::min<size_t>(chunk_max, predictions_per_shard - done));
        inputs.assign(chunk, Matrix());
        targets.assign(chunk, std::vector<int>(batch, 0));
        for (int t = 0; t < chunk; ++t) {
            inputs[t] = Matrix(batch, config.input_size);
            for (int i = 0; i < batch; ++i) {
                const size_t pos = r.begin + static_cast<size_t>(i) * shard_len + done + t;
                inputs[t](i, corpus.bytes[pos]) = 1.0;
                targets[t][i] = corpus.bytes[pos + 1];
            }
        }
        const ForwardResult fwd = forward_window(params, config, carry, inputs, targets);
        for (int t = 0; t < chunk; ++t) {
            for (int i = 0; i < batch; ++i) {
                total_bits += -std::log2(fwd.cache.p[t](i, targets[t][i]));
            }
        }
        carry = fwd.carry;
        done += static_cast<size_t>(chunk);
    }
    return total_bits / (static_cast<double>(batch) * static_cast<double>(predictions_per_shard));
}

TrainResult train(const TrainConfig& config) {
    config.validate();
    const Corpus corpus = load_corpus(config.data_path);
    const ModelConfig& model = config.model;
    const int window = model.bptt_len;
    const size_t chars_per_window =
        static_cast<size_t>(config.batch) * static_cast<size_t>(window);

    Params params = init_params(model, config.seed);
    OptState opt = OptState::fresh(model, config.lr, config.decay, config.eps, config.clip);
    BatchCursor cursor(config.batch, config.seq_len, window, config.seed + 1);
    CarryState carry = CarryState::fresh(model, config.batch);

    std::ofstream metrics(config.metrics_path, std::ios::trunc);
    if (!metrics) {
        throw std::runtime_error("cannot open metrics file for writing: " + config.metrics_path);
    }

    const auto run_start = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        if (!config.timing) return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - run_start)
            .count();
    };

    TrainResult result{std::move(params), std::move(opt), 0, 0.0, std::nullopt};
    cursor.resample(corpus, Split::train);

    Window win;
    double smoothed = 0.0;
    bool have_smoothed = false;

    for (int step = 1; step <= config.steps; ++step) {
        if (!cursor.next_window(corpus, win)) {
            // All lanes exhausted their L-length sequences: resample the whole
            // batch together and restart from fresh-sequence state.
            cursor.resample(corpus, Split::train);
            carry = CarryState::fresh(model, config.batch);
            if (!cursor.next_window(corpus, win)) {
                throw std::runtime_error("cursor produced no window after resample");
            }
        }

        ForwardResult fwd = forward_window(result.params, model, carry, win.inputs, win.targets);
        double total_nats = 0.0;
        for (double v : fwd.loss_nats.data) total_nats += v;
        if (!std::isfinite(total_nats)) {
            throw std::runtime_error("training diverged: non-finite loss at step " +
                                     std::to_string(step) + "; last checkpoint retained");
        }

        const Gradients grads =
            backward_window(result.params, model, fwd.cache, win.targets, config.grad_mode);
        opt_step(result.params, grads, result.opt);
        carry = std::move(fwd.carry);

        result.chars_seen += chars_per_window;
        const double window_bpc = bpc(total_nats, chars_per_window);
        smoothed = have_smoothed ? 0.99 * smoothed + 0.01 * window_bpc : window_bpc;
        have_smoothed = true;

        MetricsRecord rec;
        rec.step = step;
        rec.chars_seen = result.chars_seen;
        rec.train_bpc = window_bpc;
        rec.smoothed_train_bpc = smoothed;
        if (config.eval_every > 0 && step % config.eval_every == 0) {
            rec.valid_bpc = evaluate(result.params, model, corpus, Split::valid, config.batch);
            result.final_valid_bpc = rec.valid_bpc;
            save_checkpoint(result.params, result.opt, model, config.grad_mode, config.ckpt_path);
        }
        rec.wallclock_seconds = elapsed();
        metrics << metrics_line(rec) << "\n";
        metrics.flush();
    }

    result.smoothed_train_bpc = smoothed;
    save_checkpoint(result.params, result.opt, model, config.grad_mode, config.ckpt_path);
    if (!metrics) throw std::runtime_error("write error on metrics file: " + config.metrics_path);
    return result;
}

std::vector<uint8_t> sample_bytes(const Params& params, const ModelConfig& config, size_t length,
                                  uint64_t seed) {
    Rng rng(seed);
    CarryState st = CarryState::fresh(config, 1);
    Matrix x(1, config.input_size);
    std::vector<uint8_t> out;
    out.reserve(length);

    for (size_t k = 0; k < length; ++k) {
        // Invert the CDF of the current prediction row.
        const double r = rng.next_double();
        double cum = 0.0;
        int drawn = config.input_size - 1;
        for (int j = 0; j < config.input_size; ++j) {
            cum += st.p_prev(0, j);
            if (r < cum) {
                drawn = j;
                break;
            }
        }
        out.push_back(static_cast<uint8_t>(drawn));

        x.zero();
        x(0, drawn) = 1.0;
        const Matrix s = surprisal(st.p_prev, x);
        if (config.cell == CellKind::lstm) {
            LstmStepResult step = lstm_step(params, config, st.h, st.c, x, s);
            st.h = std::move(step.h);
            st.c = std::move(step.c);
        } else {
            st.h = rnn_step(params, config, st.h, x, s);
        }
        auto [y, p] = output_probs(params, st.h);
        st.p_prev = std::move(p);
    }
    return out;
}

}  // namespace sfrn
