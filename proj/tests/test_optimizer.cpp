#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "sfrn/optimizer.hpp"
#include "sfrn/rng.hpp"

using namespace sfrn;

namespace {

ModelConfig tiny_cfg() {
    ModelConfig c;
    c.cell = CellKind::lstm;
    c.input_size = 3;
    c.hidden_size = 2;
    c.bptt_len = 2;
    return c;
}

Gradients zero_grads(const ModelConfig& cfg) { return Gradients::zeros(cfg, 1); }

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged and decays the accumulator") {
    const ModelConfig cfg = tiny_cfg();
    Params p = init_params(cfg, 1);
    const Params before = p;
    OptState st = OptState::fresh(cfg, 0.001, 0.95, 1e-8, 0.0);
    st.W.fill(0.04);  // pre-existing accumulator mass

    opt_step(p, zero_grads(cfg), st);

    CHECK(p.W.data == before.W.data);
    CHECK(p.U.data == before.U.data);
    CHECK(p.b.data == before.b.data);
    for (double v : st.W.data) CHECK(v == doctest::Approx(0.95 * 0.04).epsilon(1e-15));
}

TEST_CASE("single-coordinate update matches the hand-evaluated rule") {
    const ModelConfig cfg = tiny_cfg();
    Params p = Params::shaped(cfg);
    p.W(0, 0) = 0.5;
    OptState st = OptState::fresh(cfg, 0.001, 0.95, 1e-8, 0.0);
    Gradients g = zero_grads(cfg);
    g.W(0, 0) = 0.1;

    opt_step(p, g, st);

    const double acc = 0.05 * 0.01;  // (1-rho) * g^2 on a fresh accumulator
    CHECK(st.W(0, 0) == doctest::Approx(acc).epsilon(1e-15));
    const double delta = -0.001 * 0.1 / (std::sqrt(acc) + 1e-8);
    CHECK(delta == doctest::Approx(-4.4721e-3).epsilon(1e-4));
    CHECK(p.W(0, 0) == doctest::Approx(0.5 + delta).epsilon(1e-15));
}

TEST_CASE("equal gradients receive equal updates") {
    const ModelConfig cfg = tiny_cfg();
    Params p = Params::shaped(cfg);
    p.U(0, 0) = 1.0;
    p.U(1, 3) = 1.0;
    OptState st = OptState::fresh(cfg, 0.01, 0.9, 1e-8, 0.0);
    Gradients g = zero_grads(cfg);
    g.U(0, 0) = -0.37;
    g.U(1, 3) = -0.37;
    opt_step(p, g, st);
    CHECK(p.U(0, 0) == p.U(1, 3));
}

TEST_CASE("update is scale-equivariant in the learning rate") {
    const ModelConfig cfg = tiny_cfg();
    Rng rng(5);
    Params p1 = init_params(cfg, 2);
    Params p2 = p1;
    Gradients g = zero_grads(cfg);
    for (double& v : g.W.data) v = rng.next_symmetric(0.2);

    OptState st1 = OptState::fresh(cfg, 0.001, 0.95, 1e-8, 0.0);
    OptState st2 = OptState::fresh(cfg, 0.002, 0.95, 1e-8, 0.0);
    const Params base = p1;
    opt_step(p1, g, st1);
    opt_step(p2, g, st2);
    for (size_t i = 0; i < p1.W.size(); ++i) {
        const double d1 = p1.W.data[i] - base.W.data[i];
        const double d2 = p2.W.data[i] - base.W.data[i];
        CHECK(d2 == doctest::Approx(2.0 * d1).epsilon(1e-12));
    }
}

TEST_CASE("non-finite gradients abort naming the offending block") {
    const ModelConfig cfg = tiny_cfg();
    Params p = init_params(cfg, 3);
    OptState st = OptState::fresh(cfg, 0.001, 0.95, 1e-8, 0.0);
    Gradients g = zero_grads(cfg);
    g.Wy(1, 2) = std::numeric_limits<double>::quiet_NaN();
    try {
        opt_step(p, g, st);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("Wy") != std::string::npos);
    }

    Gradients g2 = zero_grads(cfg);
    g2.b(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(opt_step(p, g2, st), std::runtime_error);
}

TEST_CASE("clipping clamps each element before accumulation") {
    const ModelConfig cfg = tiny_cfg();
    Params p = Params::shaped(cfg);
    OptState st = OptState::fresh(cfg, 0.001, 0.95, 1e-8, 0.05);
    Gradients g = zero_grads(cfg);
    g.W(0, 0) = 0.1;    // clipped to 0.05
    g.W(0, 1) = -0.2;   // clipped to -0.05
    g.W(0, 2) = 0.01;   // untouched
    opt_step(p, g, st);
    CHECK(st.W(0, 0) == doctest::Approx(0.05 * 0.05 * 0.05).epsilon(1e-15));
    CHECK(st.W(0, 1) == doctest::Approx(0.05 * 0.05 * 0.05).epsilon(1e-15));
    CHECK(st.W(0, 2) == doctest::Approx(0.05 * 0.01 * 0.01).epsilon(1e-15));
    CHECK(p.W(0, 0) == -p.W(0, 1));
}

TEST_CASE("accumulators stay nonnegative and updates are deterministic") {
    const ModelConfig cfg = tiny_cfg();
    Rng rng(9);
    Params p1 = init_params(cfg, 4);
    Params p2 = p1;
    OptState s1 = OptState::fresh(cfg, 0.005, 0.9, 1e-8, 0.0);
    OptState s2 = OptState::fresh(cfg, 0.005, 0.9, 1e-8, 0.0);
    for (int round = 0; round < 20; ++round) {
        Gradients g = zero_grads(cfg);
        g.for_each_block([&](const char*, Matrix& m) {
            for (double& v : m.data) v = rng.next_symmetric(0.5);
        });
        opt_step(p1, g, s1);
        opt_step(p2, g, s2);
        for (double v : s1.W.data) CHECK(v >= 0.0);
        for (double v : s1.U.data) CHECK(v >= 0.0);
    }
    CHECK(p1.W.data == p2.W.data);
    CHECK(p1.by.data == p2.by.data);
}
