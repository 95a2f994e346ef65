#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfrn/matrix.hpp"
#include "sfrn/rng.hpp"

namespace sfrn {

// Byte alphabet: inputs are raw bytes, index == byte value.
constexpr int kVocabSize = 256;

inline int encode_byte(uint8_t b) { return b; }
inline uint8_t decode_index(int i) { return static_cast<uint8_t>(i); }

enum class Split { train, valid, test };

const char* split_name(Split s);

struct Range {
    size_t begin{0};
    size_t end{0};  // half-open

    size_t length() const { return end - begin; }
};

// Raw byte corpus with a fixed 90/5/5 train/valid/test split.
// train = floor(0.90*total), valid = floor(0.05*total), remainder goes to test.
struct Corpus {
    std::vector<uint8_t> bytes;
    Range train_range;
    Range valid_range;
    Range test_range;

    const Range& range(Split s) const;
};

// Reads the whole file. Requires at least 40 bytes so every split can host
// one (input, target) pair.
Corpus load_corpus(const std::string& path);

// Builds the split from an in-memory buffer (same rules as load_corpus).
Corpus corpus_from_bytes(std::vector<uint8_t> bytes);

// One training window: S one-hot input matrices (B x 256) and, per step,
// the next-byte target index for each lane.
struct Window {
    std::vector<Matrix> inputs;             // S of B x 256
    std::vector<std::vector<int>> targets;  // S of B
};

// Per-lane read positions into one split. Each lane owns a length-L sequence
// and serves it in S-sized windows; when a lane runs out the whole batch is
// resampled together.
class BatchCursor {
public:
    BatchCursor(int batch, size_t seq_len, int window, uint64_t seed);

    // Draws a fresh start for every lane, uniform over
    // [split.begin, split.end - L - 1] inclusive, in lane order.
    void resample(const Corpus& corpus, Split split);

    // Fills `out` with the next window. Returns false when any lane would
    // cross its L-boundary; the caller must resample first.
    bool next_window(const Corpus& corpus, Window& out);

    int batch() const { return batch_; }
    size_t seq_len() const { return seq_len_; }
    int window() const { return window_; }
    const std::vector<size_t>& lane_starts() const { return lane_starts_; }
    const std::vector<size_t>& lane_pos() const { return lane_pos_; }

private:
    int batch_;
    size_t seq_len_;  // L
    int window_;      // S
    Rng rng_;
    std::vector<size_t> lane_starts_;
    std::vector<size_t> lane_pos_;
    bool sampled_{false};
};

}  // namespace sfrn
