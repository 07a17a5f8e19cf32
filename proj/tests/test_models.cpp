#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "qdraw/models/model.hpp"
#include "qdraw/sketch/synth.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace qdraw;
using namespace qdraw::models;
using autograd::Shape;
using autograd::Tensor;
using autograd::Value;
using Catch::Matchers::WithinAbs;

namespace {

constexpr double kPi = std::numbers::pi;

sketch::EncodedDataset toy_dataset(std::size_t per_class = 4, std::uint64_t seed = 11) {
    sketch::EncodeOptions opt;
    opt.seed = seed;
    opt.log = nullptr;
    return sketch::encode_dataset(sketch::synth::corpus(per_class, seed), opt);
}

ModelConfig small_cfg(Kind kind, std::uint64_t seed = 3) {
    ModelConfig cfg;
    cfg.kind = kind;
    cfg.hidden_size = 8;
    cfg.n_qubits = 3;
    cfg.seed = seed;
    return cfg;
}

std::vector<double> all_tensor_data(const HybridModel &m) {
    std::vector<double> out;
    for (const Value &v : trainable_params(m))
        out.insert(out.end(), v.data().v.begin(), v.data().v.end());
    return out;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

} // namespace

TEST_CASE("build_model wiring per variant", "[models]") {
    ModelConfig cfg;
    cfg.kind = Kind::QD;
    cfg.seed = 1;
    const HybridModel qd = build_model(cfg);
    REQUIRE(qd.layout.n_embed == 5);
    REQUIRE(qd.layout.n_train == 15);
    REQUIRE(qd.layout.entangling);
    int cnots = 0;
    for (const auto &g : qd.layout.gates)
        cnots += g.kind == qsim::GateKind::CNOT ? 1 : 0;
    REQUIRE(cnots == 4);
    REQUIRE(qd.fc1.W.data().shape == autograd::Shape{64, 64}); // pooled width
    REQUIRE(qd.fc_embed.W.data().shape == autograd::Shape{5, 64});
    REQUIRE(qd.fc_out.W.data().shape == autograd::Shape{3, 5});
    REQUIRE(qd.theta.data().numel() == 15);
    REQUIRE(qd.theta.requires_grad());

    cfg.kind = Kind::QDSep;
    const HybridModel sep = build_model(cfg);
    REQUIRE_FALSE(sep.layout.entangling);
    for (const auto &g : sep.layout.gates)
        REQUIRE(g.kind != qsim::GateKind::CNOT);

    cfg.kind = Kind::QDFrozen;
    REQUIRE_FALSE(build_model(cfg).theta.requires_grad());

    cfg.kind = Kind::Baseline;
    const HybridModel base = build_model(cfg);
    REQUIRE(base.fc_out.W.data().shape == autograd::Shape{3, 128});

    cfg.hidden_size = 7;
    REQUIRE_THROWS_AS(build_model(cfg), std::invalid_argument);
}

TEST_CASE("same seed gives bit-identical builds; variants share classical weights",
          "[models]") {
    const HybridModel a = build_model(small_cfg(Kind::QD, 17));
    const HybridModel b = build_model(small_cfg(Kind::QD, 17));
    REQUIRE(all_tensor_data(a) == all_tensor_data(b));

    const HybridModel sep = build_model(small_cfg(Kind::QDSep, 17));
    REQUIRE(a.lstm1.w_i.data().v == sep.lstm1.w_i.data().v);
    REQUIRE(a.lstm2.u_o.data().v == sep.lstm2.u_o.data().v);
    REQUIRE(a.fc1.W.data().v == sep.fc1.W.data().v);
    REQUIRE(a.fc_embed.W.data().v == sep.fc_embed.W.data().v);
    REQUIRE(a.fc_out.W.data().v == sep.fc_out.W.data().v);
    REQUIRE(a.theta.data().v == sep.theta.data().v);
    REQUIRE(a.layout.entangling);
    REQUIRE_FALSE(sep.layout.entangling);

    const HybridModel frozen = build_model(small_cfg(Kind::QDFrozen, 17));
    REQUIRE(a.theta.data().v == frozen.theta.data().v);
}

TEST_CASE("forward produces finite logits and validates input", "[models]") {
    const sketch::EncodedDataset ds = toy_dataset();
    const HybridModel m = build_model(small_cfg(Kind::QD));
    for (const auto &sample : ds.samples) {
        const Value logits = forward(m, sample);
        REQUIRE(logits.data().numel() == 3);
        for (double v : logits.data().v)
            REQUIRE(std::isfinite(v));
    }

    SECTION("all-zero-coordinate sample with one valid row") {
        sketch::EncodedSample degenerate;
        degenerate.rows.assign(ds.n_rows * sketch::kRowWidth, 0.0);
        degenerate.rows[8] = 1.0; // eos
        degenerate.rows[9] = 1.0; // valid
        const Value logits = forward(m, degenerate);
        for (double v : logits.data().v)
            REQUIRE(std::isfinite(v));
    }
    SECTION("zero valid rows is an error") {
        sketch::EncodedSample empty;
        empty.rows.assign(ds.n_rows * sketch::kRowWidth, 0.0);
        REQUIRE_THROWS_WITH(forward(m, empty),
                            Catch::Matchers::ContainsSubstring("zero valid rows"));
    }
    SECTION("width mismatch is an error") {
        sketch::EncodedSample ragged;
        ragged.rows.assign(7, 0.0);
        REQUIRE_THROWS_AS(forward(m, ragged), std::invalid_argument);
    }
}

TEST_CASE("identity circuit contribution shows through fc_out", "[models]") {
    const sketch::EncodedDataset ds = toy_dataset();
    HybridModel m = build_model(small_cfg(Kind::QD));
    m.fc_embed.W.mutable_data().fill(0.0);
    m.fc_embed.b.mutable_data().fill(0.0);
    m.theta.mutable_data().fill(0.0);
    // circuit now sees embed angles 0 and theta 0 -> expvals all +1,
    // so logits = fc_out bias + row sums of fc_out weights
    const Value logits = forward(m, ds.samples[0]);
    for (std::size_t c = 0; c < 3; ++c) {
        double expect = m.fc_out.b.data().v[c];
        for (std::size_t q = 0; q < 3; ++q)
            expect += m.fc_out.W.data().at(c, q);
        REQUIRE_THAT(logits.data().v[c], WithinAbs(expect, 1e-12));
    }
}

TEST_CASE("angle squash keeps every embedding angle inside (-pi, pi)", "[models][property]") {
    const sketch::EncodedDataset ds = toy_dataset(6, 99);
    const HybridModel m = build_model(small_cfg(Kind::QD, 5));
    REQUIRE(m.cfg.angle_squash);
    for (const auto &sample : ds.samples) {
        const ForwardTrace trace = forward_traced(m, sample);
        for (double a : trace.embed_angles.data().v) {
            REQUIRE(a > -kPi);
            REQUIRE(a < kPi);
        }
    }
}

TEST_CASE("QD-Sep circuit outputs match independent single-qubit simulations",
          "[models][property]") {
    Rng rng(2024);
    const HybridModel m = build_model(small_cfg(Kind::QDSep, 8));
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> embed(3), theta(9);
        for (double &v : embed)
            v = rng.uniform(-kPi, kPi);
        for (double &v : theta)
            v = rng.uniform(0.0, 2.0 * kPi);
        const std::vector<double> full = qsim::run_circuit(m.layout, embed, theta);
        const std::vector<double> oracle = oracles::separable_run(m.layout, embed, theta);
        for (std::size_t q = 0; q < full.size(); ++q)
            REQUIRE_THAT(full[q], WithinAbs(oracle[q], 1e-10));
    }
}

TEST_CASE("full-pipeline gradients match finite differences", "[models][oracle]") {
    const sketch::EncodedDataset ds = toy_dataset();
    const sketch::EncodedSample &sample = ds.samples[1];
    const std::size_t label = static_cast<std::size_t>(ds.samples[1].label);

    auto check_model = [&](Kind kind) {
        HybridModel m = build_model(small_cfg(kind, 23));
        const std::vector<Value> params = trainable_params(m);
        auto loss_value = [&]() {
            return autograd::softmax_cross_entropy(forward(m, sample), label);
        };

        // probe >= 10 entries spanning every layer
        struct Probe {
            Value v;
            std::size_t idx;
        };
        std::vector<Probe> probes;
        auto add = [&probes](Value v, std::size_t idx) { probes.push_back({v, idx}); };
        add(m.lstm1.w_i, 0);
        add(m.lstm1.u_f, 3);
        add(m.lstm1.b_g, 1);
        add(m.lstm1.w_o, 11);
        add(m.lstm2.w_o, 5);
        add(m.lstm2.u_g, 7);
        add(m.lstm2.b_i, 2);
        add(m.lstm2.u_i, 9);
        if (kind != Kind::Baseline) {
            add(m.fc1.W, 2);
            add(m.fc2.W, 9);
            add(m.fc_embed.W, 4);
            add(m.fc_embed.b, 0);
            if (m.theta.requires_grad()) {
                add(m.theta, 0);
                add(m.theta, 7);
            }
        }
        add(m.fc_out.W, 1);
        add(m.fc_out.b, 2);
        REQUIRE(probes.size() >= 10);

        for (Value &p : const_cast<std::vector<Value> &>(params))
            p.zero_grad();
        loss_value().backward();

        const double h = 1e-5;
        for (Probe &probe : probes) {
            const double keep = probe.v.data().v[probe.idx];
            probe.v.mutable_data().v[probe.idx] = keep + h;
            const double plus = loss_value().data().v[0];
            probe.v.mutable_data().v[probe.idx] = keep - h;
            const double minus = loss_value().data().v[0];
            probe.v.mutable_data().v[probe.idx] = keep;
            const double fd = (plus - minus) / (2.0 * h);
            REQUIRE(rel_err(probe.v.grad().v[probe.idx], fd) < 1e-4);
        }
    };

    SECTION("QD") { check_model(Kind::QD); }
    SECTION("QD-Sep") { check_model(Kind::QDSep); }
    SECTION("baseline") { check_model(Kind::Baseline); }
}

TEST_CASE("frozen theta is bit-identical after optimizer steps", "[models]") {
    const sketch::EncodedDataset ds = toy_dataset();
    HybridModel m = build_model(small_cfg(Kind::QDFrozen, 31));
    const std::vector<double> theta0 = m.theta.data().v;
    std::vector<Value> params = trainable_params(m);
    for (const Value &p : params)
        REQUIRE(p.node() != m.theta.node());
    autograd::AdamState adam;
    for (int step = 0; step < 3; ++step) {
        for (Value &p : params)
            p.zero_grad();
        const std::size_t label = static_cast<std::size_t>(ds.samples[step].label);
        autograd::softmax_cross_entropy(forward(m, ds.samples[static_cast<std::size_t>(step)]),
                                        label)
            .backward();
        autograd::adam_step(params, adam);
    }
    REQUIRE(m.theta.data().v == theta0);
}

TEST_CASE("predict follows argmax with lowest-index ties", "[models]") {
    const sketch::EncodedDataset ds = toy_dataset();
    HybridModel m = build_model(small_cfg(Kind::QD));
    m.fc_out.W.mutable_data().fill(0.0);

    m.fc_out.b.mutable_data().v = {0.1, 0.9, 0.0};
    REQUIRE(predict(m, ds.samples[0]) == 1);

    m.fc_out.b.mutable_data().v = {0.5, 0.5, 0.1};
    REQUIRE(predict(m, ds.samples[0]) == 0);

    const std::vector<double> p = probabilities(m, ds.samples[0]);
    REQUIRE_THAT(p[0] + p[1] + p[2], WithinAbs(1.0, 1e-10));
}

TEST_CASE("model checkpoints round trip", "[models]") {
    namespace fs = std::filesystem;
    const sketch::EncodedDataset ds = toy_dataset();
    const HybridModel m = build_model(small_cfg(Kind::QDSep, 77));
    const fs::path path = fs::temp_directory_path() / "qdraw_model_ckpt.txt";
    save_model(path.string(), m, {{"note", "test"}});
    const HybridModel back = load_model(path.string());
    REQUIRE(back.cfg.kind == Kind::QDSep);
    REQUIRE(back.cfg.hidden_size == m.cfg.hidden_size);
    REQUIRE(back.theta.data().v == m.theta.data().v);
    REQUIRE(back.lstm1.u_g.data().v == m.lstm1.u_g.data().v);
    // identical predictions
    for (const auto &sample : ds.samples)
        REQUIRE(forward(back, sample).data().v == forward(m, sample).data().v);
    fs::remove(path);
}
