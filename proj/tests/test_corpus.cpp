#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "sfrn/corpus.hpp"

using namespace sfrn;

namespace {

std::vector<uint8_t> pattern_bytes(size_t n) {
    std::vector<uint8_t> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = static_cast<uint8_t>((i * 31 + 7) & 0xFF);
    return v;
}

std::string write_temp(const std::vector<uint8_t>& bytes) {
    const std::string path = "corpus_test_tmp.bin";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    return path;
}

}  // namespace

TEST_CASE("90/5/5 split with remainder to test") {
    const Corpus c100 = corpus_from_bytes(pattern_bytes(100));
    CHECK(c100.train_range.length() == 90);
    CHECK(c100.valid_range.length() == 5);
    CHECK(c100.test_range.length() == 5);

    const Corpus c1000 = corpus_from_bytes(pattern_bytes(1000));
    CHECK(c1000.train_range.length() == 900);
    CHECK(c1000.valid_range.length() == 50);
    CHECK(c1000.test_range.length() == 50);

    const Corpus c101 = corpus_from_bytes(pattern_bytes(101));
    CHECK(c101.train_range.length() == 90);
    CHECK(c101.valid_range.length() == 5);
    CHECK(c101.test_range.length() == 6);

    // contiguous, ordered, covering
    CHECK(c101.train_range.begin == 0);
    CHECK(c101.valid_range.begin == c101.train_range.end);
    CHECK(c101.test_range.begin == c101.valid_range.end);
    CHECK(c101.test_range.end == 101);
}

TEST_CASE("byte vocabulary is the identity over all 256 values") {
    for (int i = 0; i < kVocabSize; ++i) {
        CHECK(encode_byte(decode_index(i)) == i);
    }
}

TEST_CASE("load errors: missing file and too-small corpus") {
    CHECK_THROWS_AS(load_corpus("no_such_file_anywhere.bin"), std::runtime_error);
    CHECK_THROWS_AS(corpus_from_bytes(pattern_bytes(39)), std::runtime_error);
    CHECK_NOTHROW(corpus_from_bytes(pattern_bytes(40)));

    const std::string path = write_temp(pattern_bytes(100));
    const Corpus c = load_corpus(path);
    CHECK(c.bytes == pattern_bytes(100));  // byte-exact content
    std::remove(path.c_str());
}

TEST_CASE("resample: determinism, degenerate range, independent draws") {
    const Corpus c = corpus_from_bytes(pattern_bytes(2000));

    BatchCursor a(4, 100, 10, 99);
    BatchCursor b(4, 100, 10, 99);
    a.resample(c, Split::train);
    b.resample(c, Split::train);
    CHECK(a.lane_starts() == b.lane_starts());

    // split length exactly L+1: every lane starts at split begin
    const Corpus tight = corpus_from_bytes(pattern_bytes(100));
    BatchCursor t(3, 89, 5, 1);  // train split has 90 bytes = L+1
    t.resample(tight, Split::train);
    for (size_t s : t.lane_starts()) CHECK(s == 0);

    // too-short split rejected with the required minimum
    BatchCursor big(2, 95, 5, 1);
    try {
        big.resample(tight, Split::train);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("96") != std::string::npos);
    }

    // 128 lanes draw 128 starts
    BatchCursor wide(128, 100, 10, 5);
    wide.resample(c, Split::train);
    CHECK(wide.lane_starts().size() == 128);
}

TEST_CASE("next_window: one-hot encoding and next-byte targets") {
    std::vector<uint8_t> bytes(50, 0);
    const std::string text = "abcd";
    for (size_t i = 0; i < text.size(); ++i) bytes[i] = static_cast<uint8_t>(text[i]);
    bytes[10] = 'A';
    const Corpus c = corpus_from_bytes(std::move(bytes));

    // force a single lane starting at 0: train split is 45 bytes, L = 44
    BatchCursor cur(1, 44, 2, 1);
    cur.resample(c, Split::train);
    REQUIRE(cur.lane_starts()[0] == 0);

    Window w;
    REQUIRE(cur.next_window(c, w));
    REQUIRE(w.inputs.size() == 2);

    // step 0 encodes 'a', step 1 encodes 'b'; targets are 'b' then 'c'
    CHECK(w.inputs[0](0, 'a') == 1.0);
    CHECK(w.inputs[1](0, 'b') == 1.0);
    CHECK(w.targets[0][0] == 'b');
    CHECK(w.targets[1][0] == 'c');

    double sum = 0.0;
    int nonzero = 0;
    for (int j = 0; j < kVocabSize; ++j) {
        sum += w.inputs[0](0, j);
        nonzero += w.inputs[0](0, j) != 0.0;
    }
    CHECK(sum == 1.0);
    CHECK(nonzero == 1);
}

TEST_CASE("windows align: inputs[t+1] is the one-hot of targets[t]") {
    const Corpus c = corpus_from_bytes(pattern_bytes(500));
    BatchCursor cur(3, 60, 6, 17);
    cur.resample(c, Split::train);
    Window w;
    REQUIRE(cur.next_window(c, w));
    for (size_t t = 0; t + 1 < w.inputs.size(); ++t) {
        for (int i = 0; i < 3; ++i) {
            CHECK(w.inputs[t + 1](i, w.targets[t][i]) == 1.0);
        }
    }
}

TEST_CASE("lane round-trip: concatenated windows reproduce the byte slice") {
    const Corpus c = corpus_from_bytes(pattern_bytes(800));
    const size_t L = 60;
    const int S = 10;
    BatchCursor cur(2, L, S, 3);
    cur.resample(c, Split::train);
    const std::vector<size_t> starts = cur.lane_starts();

    std::vector<std::vector<uint8_t>> seen(2);
    Window w;
    while (cur.next_window(c, w)) {
        for (int t = 0; t < S; ++t) {
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < kVocabSize; ++j) {
                    if (w.inputs[t](i, j) != 0.0) seen[i].push_back(static_cast<uint8_t>(j));
                }
            }
        }
    }
    for (int i = 0; i < 2; ++i) {
        CHECK(seen[i].size() == L);  // exactly L/S windows were served
        for (size_t k = 0; k < seen[i].size(); ++k) {
            CHECK(seen[i][k] == c.bytes[starts[i] + k]);
        }
    }
}

TEST_CASE("equal seeds produce identical window streams") {
    const Corpus c = corpus_from_bytes(pattern_bytes(3000));
    BatchCursor a(4, 50, 5, 123);
    BatchCursor b(4, 50, 5, 123);
    a.resample(c, Split::train);
    b.resample(c, Split::train);
    Window wa, wb;
    for (int round = 0; round < 25; ++round) {
        const bool ra = a.next_window(c, wa);
        const bool rb = b.next_window(c, wb);
        CHECK(ra == rb);
        if (!ra) {
            a.resample(c, Split::train);
            b.resample(c, Split::train);
            continue;
        }
        for (size_t t = 0; t < wa.inputs.size(); ++t) {
            CHECK(wa.targets[t] == wb.targets[t]);
            CHECK(wa.inputs[t].data == wb.inputs[t].data);
        }
    }
}

TEST_CASE("exhausted lanes signal resample instead of crossing the L boundary") {
    const Corpus c = corpus_from_bytes(pattern_bytes(200));
    BatchCursor cur(2, 20, 10, 7);
    cur.resample(c, Split::train);
    Window w;
    CHECK(cur.next_window(c, w));
    CHECK(cur.next_window(c, w));
    CHECK_FALSE(cur.next_window(c, w));  // 2 windows of 10 exhaust L=20
    cur.resample(c, Split::train);
    CHECK(cur.next_window(c, w));
}
