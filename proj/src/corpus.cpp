#include "sfrn/corpus.hpp"

#include <fstream>
#include <stdexcept>

namespace sfrn {

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        case Split::test: return "test";
    }
    return "?";
}

const Range& Corpus::range(Split s) const {
    switch (s) {
        case Split::train: return train_range;
        case Split::valid: return valid_range;
        case Split::test: return test_range;
    }
    return train_range;
}

Corpus corpus_from_bytes(std::vector<uint8_t> bytes) {
    const size_t total = bytes.size();
    if (total < 40) {
        throw std::runtime_error("corpus too small: " + std::to_string(total) +
                                 " bytes, need at least 40");
    }
    Corpus c;
    c.bytes = std::move(bytes);
    const size_t train_len = total * 90 / 100;
    const size_t valid_len = total * 5 / 100;
    c.train_range = {0, train_len};
    c.valid_range = {train_len, train_len + valid_len};
    c.test_range = {train_len + valid_len, total};  // remainder goes to test
    return c;
}

Corpus load_corpus(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot open corpus file: " + path);
    }
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    if (f.bad()) {
        throw std::runtime_error("read error on corpus file: " + path);
    }
    return corpus_from_bytes(std::move(bytes));
}

BatchCursor::BatchCursor(int batch, size_t seq_len, int window, uint64_t seed)
    : batch_(batch), seq_len_(seq_len), window_(window), rng_(seed),
      lane_starts_(batch, 0), lane_pos_(batch, 0) {
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    if (window < 2) throw std::invalid_argument("window must be >= 2");
    if (seq_len < static_cast<size_t>(window)) {
        throw std::invalid_argument("seq_len must be >= window length");
    }
}

void BatchCursor::resample(const Corpus& corpus, Split split) {
    const Range& r = corpus.range(split);
    if (r.length() < seq_len_ + 1) {
        throw std::runtime_error(std::string("split '") + split_name(split) + "' has " +
                                 std::to_string(r.length()) + " bytes, need at least " +
                                 std::to_string(seq_len_ + 1) + " (seq_len + 1)");
    }
    const size_t lo = r.begin;
    const size_t hi = r.end - seq_len_ - 1;
    for (int i = 0; i < batch_; ++i) {
        lane_starts_[i] = rng_.next_range(lo, hi);
        lane_pos_[i] = lane_starts_[i];
    }
    sampled_ = true;
}

bool BatchCursor::next_window(const Corpus& corpus, Window& out) {
    if (!sampled_) throw std::runtime_error("next_window called before resample");
    for (int i = 0; i < batch_; ++i) {
        // inputs read [pos, pos+S), targets read up to pos+S; both must stay
        // inside the lane's length-L sequence.
        if (lane_pos_[i] - lane_starts_[i] + window_ > seq_len_) return false;
    }

    out.inputs.resize(window_);
    out.targets.resize(window_);
    for (int t = 0; t < window_; ++t) {
        Matrix& x = out.inputs[t];
        if (x.rows != batch_ || x.cols != kVocabSize) x = Matrix(batch_, kVocabSize);
        else x.zero();
        out.targets[t].resize(batch_);
        for (int i = 0; i < batch_; ++i) {
            const size_t pos = lane_pos_[i] + t;
            x(i, corpus.bytes[pos]) = 1.0;
            out.targets[t][i] = corpus.bytes[pos + 1];
        }
    }
    for (int i = 0; i < batch_; ++i) lane_pos_[i] += window_;
    return true;
}

}  // namespace sfrn
