#include <cstring>
#include <fstream>
#include <stdexcept>

#include "sfrn/trainer.hpp"

namespace sfrn {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'R', 'N'};
constexpr uint8_t kVersion = 0x01;

void write_u32(std::ofstream& f, uint32_t v) {
    const uint8_t bytes[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                              static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    f.write(reinterpret_cast<const char*>(bytes), 4);
}

uint32_t read_u32(std::ifstream& f) {
    uint8_t bytes[4];
    f.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<uint32_t>(bytes[0]) | static_cast<uint32_t>(bytes[1]) << 8 |
           static_cast<uint32_t>(bytes[2]) << 16 | static_cast<uint32_t>(bytes[3]) << 24;
}

// float64 little-endian; this code targets little-endian hosts and writes
// the in-memory representation directly.
void write_matrix(std::ofstream& f, const Matrix& m) {
    f.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void read_matrix(std::ifstream& f, Matrix& m) {
    f.read(reinterpret_cast<char*>(m.data.data()),
           static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void write_double(std::ofstream& f, double v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(double));
}

double read_double(std::ifstream& f) {
    double v = 0.0;
    f.read(reinterpret_cast<char*>(&v), sizeof(double));
    return v;
}

}  // namespace

void save_checkpoint(const Params& params, const OptState& opt, const ModelConfig& config,
                     GradMode mode, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    f.write(kMagic, 4);
    f.put(static_cast<char>(kVersion));
    f.put(static_cast<char>(config.cell));
    f.put(config.feedback ? 1 : 0);
    f.put(static_cast<char>(mode));
    write_u32(f, static_cast<uint32_t>(config.input_size));
    write_u32(f, static_cast<uint32_t>(config.hidden_size));
    write_u32(f, static_cast<uint32_t>(config.bptt_len));
    params.for_each_block([&](const char*, const Matrix& m) { write_matrix(f, m); });
    write_matrix(f, opt.W);
    write_matrix(f, opt.U);
    write_matrix(f, opt.V);
    write_matrix(f, opt.b);
    write_matrix(f, opt.Wy);
    write_matrix(f, opt.by);
    write_double(f, opt.decay);
    write_double(f, opt.lr);
    write_double(f, opt.eps);
    if (!f) throw std::runtime_error("write error on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);

    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("checkpoint format error: bad magic in " + path);
    }
    const int version = f.get();
    if (version != kVersion) {
        throw std::runtime_error("checkpoint version mismatch in " + path + ": found " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(kVersion));
    }
    const int cell_byte = f.get();
    const int feedback_byte = f.get();
    const int mode_byte = f.get();
    if (cell_byte < 0 || cell_byte > 1 || mode_byte < 0 || mode_byte > 1) {
        throw std::runtime_error("checkpoint header error: unknown cell or grad mode in " + path);
    }

    Checkpoint ck;
    ck.model.cell = static_cast<CellKind>(cell_byte);
    ck.model.feedback = feedback_byte != 0;
    ck.grad_mode = static_cast<GradMode>(mode_byte);
    ck.model.input_size = static_cast<int>(read_u32(f));
    ck.model.hidden_size = static_cast<int>(read_u32(f));
    ck.model.bptt_len = static_cast<int>(read_u32(f));
    if (!f) throw std::runtime_error("truncated checkpoint header: " + path);
    ck.model.validate();

    ck.params = Params::shaped(ck.model);
    ck.opt = OptState::fresh(ck.model, 0.0, 0.0, 0.0, 0.0);

    ck.params.for_each_block([&](const char*, Matrix& m) { read_matrix(f, m); });
    read_matrix(f, ck.opt.W);
    read_matrix(f, ck.opt.U);
    read_matrix(f, ck.opt.V);
    read_matrix(f, ck.opt.b);
    read_matrix(f, ck.opt.Wy);
    read_matrix(f, ck.opt.by);
    ck.opt.decay = read_double(f);
    ck.opt.lr = read_double(f);
    ck.opt.eps = read_double(f);
    if (!f) {
        throw std::runtime_error("truncated checkpoint: " + path +
                                 " ends before the payload promised by its shape header");
    }
    // Exactly at EOF: anything further means the payload disagrees with the header.
    f.peek();
    if (!f.eof()) {
        throw std::runtime_error("checkpoint payload longer than its shape header implies: " +
                                 path);
    }
    return ck;
}

void require_same_shape(const ModelConfig& loaded, const ModelConfig& requested) {
    const auto fail = [](const std::string& what, int got, int want) {
        throw std::runtime_error("checkpoint shape mismatch: " + what + " is " +
                                 std::to_string(got) + " in the checkpoint but " +
                                 std::to_string(want) + " was requested");
    };
    if (loaded.cell != requested.cell) {
        throw std::runtime_error(std::string("checkpoint shape mismatch: cell is ") +
                                 (loaded.cell == CellKind::lstm ? "lstm" : "rnn") +
                                 " in the checkpoint but " +
                                 (requested.cell == CellKind::lstm ? "lstm" : "rnn") +
                                 " was requested");
    }
    if (loaded.input_size != requested.input_size) {
        fail("input size", loaded.input_size, requested.input_size);
    }
    if (loaded.hidden_size != requested.hidden_size) {
        fail("hidden size", loaded.hidden_size, requested.hidden_size);
    }
}

}  // namespace sfrn
