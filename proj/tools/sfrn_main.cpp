// Command-line front end: train / eval / gradcheck / sample.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfrn/corpus.hpp"
#include "sfrn/gradcheck.hpp"
#include "sfrn/trainer.hpp"

namespace {

using sfrn::CellConvention;
using sfrn::CellKind;
using sfrn::GradMode;

struct CliOptions {
    std::string data;
    std::string cell{"lstm"};
    std::string feedback{"on"};
    int hidden{128};
    int bptt{100};
    int batch{128};
    size_t seq_len{10000};
    double lr{0.001};
    double decay{0.95};
    double clip{0.0};
    std::string grad_mode{"exact"};
    int steps{1000};
    int eval_every{200};
    uint64_t seed{42};
    std::string ckpt{"model.ckpt"};
    std::string metrics{"metrics.jsonl"};
    std::string convention{"paper"};
    std::string timing{"on"};
    bool print_config{false};

    std::string split{"test"};  // eval
    size_t length{1000};        // sample
    std::string out;            // sample
    double eps{1e-5};           // gradcheck
    double tol{1e-6};           // gradcheck
    std::string json_path;      // gradcheck
};

sfrn::ModelConfig model_config(const CliOptions& o) {
    sfrn::ModelConfig m;
    m.cell = o.cell == "lstm" ? CellKind::lstm : CellKind::simple_rnn;
    m.feedback = o.feedback == "on";
    m.hidden_size = o.hidden;
    m.bptt_len = o.bptt;
    m.convention = o.convention == "paper" ? CellConvention::paper : CellConvention::standard;
    return m;
}

sfrn::TrainConfig train_config(const CliOptions& o) {
    sfrn::TrainConfig c;
    c.model = model_config(o);
    c.data_path = o.data;
    c.batch = o.batch;
    c.seq_len = o.seq_len;
    c.steps = o.steps;
    c.eval_every = o.eval_every;
    c.seed = o.seed;
    c.grad_mode = o.grad_mode == "paper" ? GradMode::paper : GradMode::exact;
    c.lr = o.lr;
    c.decay = o.decay;
    c.clip = o.clip;
    c.ckpt_path = o.ckpt;
    c.metrics_path = o.metrics;
    c.timing = o.timing == "on";
    return c;
}

nlohmann::ordered_json resolved_config(const std::string& subcommand, const CliOptions& o) {
    nlohmann::ordered_json j;
    j["subcommand"] = subcommand;
    j["data"] = o.data;
    j["cell"] = o.cell;
    j["feedback"] = o.feedback;
    j["hidden"] = o.hidden;
    j["bptt"] = o.bptt;
    j["batch"] = o.batch;
    j["seq-len"] = o.seq_len;
    j["lr"] = o.lr;
    j["decay"] = o.decay;
    j["clip"] = o.clip;
    j["grad-mode"] = o.grad_mode;
    j["steps"] = o.steps;
    j["eval-every"] = o.eval_every;
    j["seed"] = o.seed;
    j["ckpt"] = o.ckpt;
    j["metrics"] = o.metrics;
    j["cell-convention"] = o.convention;
    j["timing"] = o.timing;
    if (subcommand == "eval") j["split"] = o.split;
    if (subcommand == "sample") {
        j["length"] = o.length;
        j["out"] = o.out;
    }
    if (subcommand == "gradcheck") {
        j["eps"] = o.eps;
        j["tol"] = o.tol;
        j["json"] = o.json_path;
    }
    return j;
}

void add_model_flags(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--cell", o.cell, "Cell kind")->check(CLI::IsMember({"lstm", "rnn"}));
    cmd->add_option("--feedback", o.feedback, "Surprisal feedback")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--hidden", o.hidden, "Hidden units N");
    cmd->add_option("--bptt", o.bptt, "BPTT window length S");
    cmd->add_option("--cell-convention", o.convention,
                    "Cell retention: (1-f)*c_prev ('paper') or f*c_prev ('standard')")
        ->check(CLI::IsMember({"paper", "standard"}));
    cmd->add_flag("--print-config", o.print_config,
                  "Print the resolved configuration as JSON and exit");
}

int run_train(const CliOptions& o) {
    const sfrn::TrainResult result = sfrn::train(train_config(o));
    std::cout << "trained " << o.steps << " steps, " << result.chars_seen << " chars"
              << ", smoothed train bpc " << result.smoothed_train_bpc;
    if (result.final_valid_bpc.has_value()) {
        std::cout << ", valid bpc " << *result.final_valid_bpc;
    }
    std::cout << "\ncheckpoint: " << o.ckpt << "\nmetrics: " << o.metrics << "\n";
    return 0;
}

int run_eval(const CliOptions& o, bool hidden_given, bool cell_given) {
    const sfrn::Checkpoint ck = sfrn::load_checkpoint(o.ckpt);
    sfrn::ModelConfig requested = ck.model;
    if (hidden_given) requested.hidden_size = o.hidden;
    if (cell_given) requested.cell = o.cell == "lstm" ? CellKind::lstm : CellKind::simple_rnn;
    sfrn::require_same_shape(ck.model, requested);

    sfrn::ModelConfig config = ck.model;
    config.convention =
        o.convention == "paper" ? CellConvention::paper : CellConvention::standard;
    const sfrn::Corpus corpus = sfrn::load_corpus(o.data);
    const sfrn::Split split = o.split == "train"   ? sfrn::Split::train
                              : o.split == "valid" ? sfrn::Split::valid
                                                   : sfrn::Split::test;
    const double bpc = sfrn::evaluate(ck.params, config, corpus, split, o.batch);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", bpc);
    std::cout << buf << "\n";
    return 0;
}

int run_gradcheck(const CliOptions& o, bool cell_given) {
    std::vector<sfrn::CheckReport> reports;
    if (cell_given) {
        sfrn::ModelConfig config;
        config.cell = o.cell == "lstm" ? CellKind::lstm : CellKind::simple_rnn;
        config.feedback = o.feedback == "on";
        config.input_size = 5;
        config.hidden_size = o.hidden;
        config.bptt_len = o.bptt;
        const GradMode mode = o.grad_mode == "paper" ? GradMode::paper : GradMode::exact;
        reports.push_back(sfrn::check(config, o.seed, mode, o.eps, o.tol));
    } else {
        // Self-test: every cell x feedback combination must pass in exact mode.
        reports = sfrn::check_all(o.seed, o.eps, o.tol);
    }
    for (const sfrn::CheckReport& r : reports) std::cout << sfrn::format_report(r);
    if (!o.json_path.empty()) {
        std::ofstream jf(o.json_path, std::ios::trunc);
        if (!jf) throw std::runtime_error("cannot open json report path: " + o.json_path);
        jf << sfrn::report_json(reports) << "\n";
    }
    return sfrn::all_pass(reports) ? 0 : 2;
}

int run_sample(const CliOptions& o) {
    const sfrn::Checkpoint ck = sfrn::load_checkpoint(o.ckpt);
    sfrn::ModelConfig config = ck.model;
    config.convention =
        o.convention == "paper" ? CellConvention::paper : CellConvention::standard;
    const std::vector<uint8_t> bytes = sfrn::sample_bytes(ck.params, config, o.length, o.seed);
    if (o.out.empty()) {
        std::cout.write(reinterpret_cast<const char*>(bytes.data()),
                        static_cast<std::streamsize>(bytes.size()));
    } else {
        std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open output path: " + o.out);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sfrn: surprisal-feedback character-level RNN/LSTM"};
    app.require_subcommand(1);
    CliOptions o;

    CLI::App* train = app.add_subcommand("train", "Train on a byte corpus");
    train->add_option("--data", o.data, "Corpus file (raw bytes)")->required();
    add_model_flags(train, o);
    train->add_option("--batch", o.batch, "Batch lanes B");
    train->add_option("--seq-len", o.seq_len, "Sampled sequence length L");
    train->add_option("--lr", o.lr, "Learning rate");
    train->add_option("--decay", o.decay, "Squared-gradient EMA decay");
    train->add_option("--clip", o.clip, "Elementwise gradient clip (0 = off)");
    train->add_option("--grad-mode", o.grad_mode, "Surprisal-path backward formula")
        ->check(CLI::IsMember({"exact", "paper"}));
    train->add_option("--steps", o.steps, "Update steps");
    train->add_option("--eval-every", o.eval_every, "Validation interval in steps");
    train->add_option("--seed", o.seed, "RNG seed");
    train->add_option("--ckpt", o.ckpt, "Checkpoint path");
    train->add_option("--metrics", o.metrics, "Metrics JSON-lines path");
    train->add_option("--timing", o.timing,
                      "Write measured wallclock into metrics; 'off' makes metrics "
                      "byte-reproducible")
        ->check(CLI::IsMember({"on", "off"}));

    CLI::App* eval = app.add_subcommand("eval", "Report BPC of a checkpoint on a split");
    eval->add_option("--data", o.data, "Corpus file (raw bytes)")->required();
    eval->add_option("--ckpt", o.ckpt, "Checkpoint path")->required();
    add_model_flags(eval, o);
    eval->add_option("--split", o.split, "Corpus split")
        ->check(CLI::IsMember({"train", "valid", "test"}));
    eval->add_option("--batch", o.batch, "Evaluation shards");
    eval->add_option("--seed", o.seed, "RNG seed (unused; accepted for symmetry)");

    CLI::App* gradcheck = app.add_subcommand(
        "gradcheck", "Finite-difference sweep of every gradient path");
    add_model_flags(gradcheck, o);
    gradcheck->get_option("--hidden")->default_val(4);
    gradcheck->get_option("--bptt")->default_val(4);
    gradcheck->add_option("--grad-mode", o.grad_mode, "Surprisal-path backward formula")
        ->check(CLI::IsMember({"exact", "paper"}));
    gradcheck->add_option("--seed", o.seed, "RNG seed");
    gradcheck->add_option("--eps", o.eps, "Central-difference step");
    gradcheck->add_option("--tol", o.tol, "Max relative error");
    gradcheck->add_option("--json", o.json_path, "Write a JSON summary here");

    CLI::App* sample = app.add_subcommand("sample", "Generate bytes from a checkpoint "
                                                    "(inspection aid, no training analogue)");
    sample->add_option("--ckpt", o.ckpt, "Checkpoint path")->required();
    add_model_flags(sample, o);
    sample->add_option("--length", o.length, "Bytes to generate");
    sample->add_option("--seed", o.seed, "RNG seed");
    sample->add_option("--out", o.out, "Output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (app.got_subcommand(train)) {
            if (o.print_config) {
                std::cout << resolved_config("train", o).dump(2) << "\n";
                return 0;
            }
            return run_train(o);
        }
        if (app.got_subcommand(eval)) {
            if (o.print_config) {
                std::cout << resolved_config("eval", o).dump(2) << "\n";
                return 0;
            }
            return run_eval(o, eval->count("--hidden") > 0, eval->count("--cell") > 0);
        }
        if (app.got_subcommand(gradcheck)) {
            if (o.print_config) {
                std::cout << resolved_config("gradcheck", o).dump(2) << "\n";
                return 0;
            }
            return run_gradcheck(o, gradcheck->count("--cell") > 0);
        }
        if (app.got_subcommand(sample)) {
            if (o.print_config) {
                std::cout << resolved_config("sample", o).dump(2) << "\n";
                return 0;
            }
            return run_sample(o);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
