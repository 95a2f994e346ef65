#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sfrn/backprop.hpp"
#include "sfrn/corpus.hpp"
#include "sfrn/model.hpp"
#include "sfrn/optimizer.hpp"

namespace sfrn {

struct TrainConfig {
    ModelConfig model;
    std::string data_path;
    int batch{128};         // parallel lanes
    size_t seq_len{10000};  // L, length of each sampled sequence
    int steps{1000};        // update steps (one BPTT window each)
    int eval_every{200};
    uint64_t seed{42};
    GradMode grad_mode{GradMode::exact};
    double lr{0.001};
    double decay{0.95};
    double eps{1e-8};
    double clip{0.0};
    std::string ckpt_path{"model.ckpt"};
    std::string metrics_path{"metrics.jsonl"};
    // When off, wallclock_seconds is written as 0 so metrics files are
    // byte-reproducible across runs with the same seed.
    bool timing{true};

    void validate() const;
};

struct MetricsRecord {
    int step{0};
    size_t chars_seen{0};
    double train_bpc{0.0};
    double smoothed_train_bpc{0.0};
    std::optional<double> valid_bpc;
    double wallclock_seconds{0.0};
};

std::string metrics_line(const MetricsRecord& rec);

struct TrainResult {
    Params params;
    OptState opt;
    size_t chars_seen{0};
    double smoothed_train_bpc{0.0};
    std::optional<double> final_valid_bpc;
};

// sample -> forward -> backward -> update, carrying state within each
// length-L sequence; when lanes are exhausted the whole batch resamples and
// the carry resets to fresh-sequence values. Writes one metrics line per
// window, evaluates the validation split and checkpoints every eval_every
// steps, and checkpoints at termination. Aborts on non-finite loss without
// touching the last written checkpoint.
TrainResult train(const TrainConfig& config);

// Forward-only BPC over a split: the split is cut into `batch` contiguous
// equal shards (tail remainder dropped), each streamed with carried state
// from a fresh start. Returns total bits / total predicted characters.
double evaluate(const Params& params, const ModelConfig& config, const Corpus& corpus,
                Split split, int batch);

// Autoregressive byte generation: draws from p, feeds the drawn byte back as
// the next input, and computes surprisal against its own prediction.
std::vector<uint8_t> sample_bytes(const Params& params, const ModelConfig& config, size_t length,
                                  uint64_t seed);

// ---- checkpoint format ----
// magic "SFRN", version 0x01, cell kind (1 byte: 0=rnn, 1=lstm), feedback
// flag (1 byte), grad mode (1 byte), M/N/S as uint32 LE, then W, U, V, b,
// Wy, by as float64 LE, the optimizer accumulators in the same order, and
// decay/lr/eps as three float64.

struct Checkpoint {
    ModelConfig model;  // cell, feedback, M, N, S (convention comes from flags)
    GradMode grad_mode{GradMode::exact};
    Params params;
    OptState opt;
};

void save_checkpoint(const Params& params, const OptState& opt, const ModelConfig& config,
                     GradMode mode, const std::string& path);

Checkpoint load_checkpoint(const std::string& path);

// Shape guard for loading into a requested configuration; throws naming both
// sides on any mismatch.
void require_same_shape(const ModelConfig& loaded, const ModelConfig& requested);

}  // namespace sfrn
