#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sfrn/backprop.hpp"
#include "sfrn/model.hpp"

namespace sfrn {

struct BlockReport {
    std::string name;
    double max_rel_err{0.0};
    int argmax_row{-1};
    int argmax_col{-1};
    bool pass{true};
};

struct CheckReport {
    std::vector<BlockReport> blocks;
    bool pass{true};
    std::string fingerprint;  // config summary the report was produced under
    double eps{0.0};
    double tolerance{0.0};
};

// Central difference (L(th+eps) - L(th-eps)) / (2*eps) on one coordinate of
// one parameter block. The loss callback must be deterministic and
// side-effect-free; params are restored before returning.
double numeric_grad(const std::function<double(const Params&)>& loss, Params& params,
                    const std::string& block, size_t flat_index, double eps);

// Sweeps every coordinate of every trainable block on a seeded hermetic
// window (random one-hot inputs, fresh-start carry) and compares central
// differences of the total window loss against backward_window. Relative
// error is |a-n| / max(|a|, |n|, 1e-8).
CheckReport check(const ModelConfig& config, uint64_t seed, GradMode mode, double eps,
                  double tolerance);

// Hard health gate: exact-mode check on all four {cell} x {feedback}
// combinations (small config M=5, N=4, S=4, B=2). Passes only if every sweep
// passes.
std::vector<CheckReport> check_all(uint64_t seed, double eps, double tolerance);

bool all_pass(const std::vector<CheckReport>& reports);

// One line per block plus a verdict, suitable for a terminal.
std::string format_report(const CheckReport& report);

// Machine-readable summary with the same fields.
std::string report_json(const std::vector<CheckReport>& reports);

}  // namespace sfrn
