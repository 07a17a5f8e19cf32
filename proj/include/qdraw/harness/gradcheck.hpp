#pragma once

#include "qdraw/harness/train.hpp"
#include "qdraw/models/model.hpp"
#include "qdraw/qsim/circuit.hpp"
#include "qdraw/sketch/synth.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

namespace qdraw::harness {

/// Outcome of one finite-difference audit: the worst observed deviation, the
/// identifier of the offender, and the tolerance it was held to.
struct GradCheckReport {
    std::string scope;
    double max_deviation = 0.0;
    std::string worst = "none";
    double tolerance = 0.0;
    std::size_t checks = 0;

    bool pass() const { return max_deviation < tolerance; }
};

namespace detail {

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

/// Central finite differences of every circuit output with respect to one
/// slot; forward evaluations only, independent of the shift rule it audits.
inline std::vector<double> circuit_fd(const qsim::CircuitLayout &layout,
                                      std::vector<double> embed, std::vector<double> theta,
                                      bool is_embed, std::size_t slot, double h = 1e-5) {
    std::vector<double> &v = is_embed ? embed : theta;
    const double x = v[slot];
    v[slot] = x + h;
    std::vector<double> plus = qsim::run_circuit(layout, embed, theta);
    v[slot] = x - h;
    const std::vector<double> minus = qsim::run_circuit(layout, embed, theta);
    for (std::size_t w = 0; w < plus.size(); ++w)
        plus[w] = (plus[w] - minus[w]) / (2.0 * h);
    return plus;
}

} // namespace detail

/// Parameter-shift Jacobians vs central finite differences over random HEA
/// instances; absolute tolerance 1e-6. `corrupt_slot` (e.g. "train7" or
/// "embed2") perturbs that Jacobian column to exercise the failure path.
inline GradCheckReport gradcheck_qsim(std::uint64_t seed, int trials = 20,
                                      const std::string &corrupt_slot = "") {
    GradCheckReport report;
    report.scope = "qsim";
    report.tolerance = 1e-6;
    Rng rng(seed);
    for (int trial = 0; trial < trials; ++trial) {
        const qsim::CircuitLayout layout = qsim::build_hea(5, trial % 2 == 0);
        std::vector<double> embed(static_cast<std::size_t>(layout.n_embed));
        std::vector<double> theta(static_cast<std::size_t>(layout.n_train));
        for (double &v : embed)
            v = rng.uniform(-std::numbers::pi, std::numbers::pi);
        for (double &v : theta)
            v = rng.uniform(0.0, 2.0 * std::numbers::pi);
        qsim::ShiftJacobians jac = qsim::param_shift_grad(layout, embed, theta);
        if (!corrupt_slot.empty()) {
            if (corrupt_slot.rfind("embed", 0) == 0)
                jac.wrt_embed[0][std::stoul(corrupt_slot.substr(5))] += 1e-3;
            else if (corrupt_slot.rfind("train", 0) == 0)
                jac.wrt_theta[0][std::stoul(corrupt_slot.substr(5))] += 1e-3;
            else
                throw std::invalid_argument("gradcheck: bad corrupt slot '" + corrupt_slot + "'");
        }
        auto scan = [&](bool is_embed, std::size_t count, const char *prefix) {
            for (std::size_t s = 0; s < count; ++s) {
                const std::vector<double> fd = detail::circuit_fd(layout, embed, theta, is_embed, s);
                for (std::size_t w = 0; w < fd.size(); ++w) {
                    const double got =
                        is_embed ? jac.wrt_embed[w][s] : jac.wrt_theta[w][s];
                    const double dev = std::abs(got - fd[w]);
                    ++report.checks;
                    if (dev > report.max_deviation) {
                        std::ostringstream id;
                        id << "trial" << trial << " wire" << w << " " << prefix << s;
                        report.max_deviation = dev;
                        report.worst = id.str();
                    }
                }
            }
        };
        scan(true, embed.size(), "embed");
        scan(false, theta.size(), "train");
    }
    return report;
}

/// Analytic gradients of a composite graph (two LSTM steps into a softmax
/// cross entropy) vs finite differences; relative tolerance 1e-4.
inline GradCheckReport gradcheck_autograd(std::uint64_t seed) {
    GradCheckReport report;
    report.scope = "autograd";
    report.tolerance = 1e-4;
    Rng rng(seed);
    const int in = 5, hidden = 6;
    autograd::LstmParams p = autograd::LstmParams::init(in, hidden, rng);
    autograd::Tensor w(autograd::Shape{3, static_cast<std::size_t>(hidden)});
    for (double &x : w.v)
        x = rng.uniform(-0.7, 0.7);
    autograd::Value head = autograd::Value::param(std::move(w));
    autograd::Tensor x1(autograd::Shape{static_cast<std::size_t>(in)});
    autograd::Tensor x2(autograd::Shape{static_cast<std::size_t>(in)});
    for (double &x : x1.v)
        x = rng.uniform(-1.0, 1.0);
    for (double &x : x2.v)
        x = rng.uniform(-1.0, 1.0);

    std::vector<std::pair<std::string, autograd::Value>> leaves;
    const char *names[] = {"w_i", "u_i", "b_i", "w_f", "u_f", "b_f",
                           "w_g", "u_g", "b_g", "w_o", "u_o", "b_o"};
    std::vector<autograd::Value> lstm_values = p.params();
    for (std::size_t i = 0; i < lstm_values.size(); ++i)
        leaves.emplace_back(std::string("lstm.") + names[i], lstm_values[i]);
    leaves.emplace_back("head.W", head);

    auto loss_of = [&]() {
        const auto shape = autograd::Shape{static_cast<std::size_t>(hidden)};
        autograd::Value h = autograd::Value::constant(autograd::Tensor(shape));
        autograd::Value c = autograd::Value::constant(autograd::Tensor(shape));
        std::tie(h, c) = autograd::lstm_cell(autograd::Value::constant(x1), h, c, p);
        std::tie(h, c) = autograd::lstm_cell(autograd::Value::constant(x2), h, c, p);
        const autograd::Value pooled = autograd::max_pool1d(h);
        const autograd::Value logits =
            autograd::matmul(head, autograd::concat({pooled, pooled}));
        return autograd::softmax_cross_entropy(logits, 1);
    };

    for (auto &[name, leaf] : leaves)
        leaf.zero_grad();
    loss_of().backward();

    const double h = 1e-5;
    for (auto &[name, leaf] : leaves) {
        for (std::size_t i = 0; i < leaf.data().numel(); ++i) {
            const double keep = leaf.data().v[i];
            leaf.mutable_data().v[i] = keep + h;
            const double plus = loss_of().data().v[0];
            leaf.mutable_data().v[i] = keep - h;
            const double minus = loss_of().data().v[0];
            leaf.mutable_data().v[i] = keep;
            const double fd = (plus - minus) / (2.0 * h);
            const double dev = detail::rel_err(leaf.grad().v[i], fd);
            ++report.checks;
            if (dev > report.max_deviation) {
                report.max_deviation = dev;
                report.worst = name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return report;
}

/// Full-pipeline audit: loss gradients of a QD model on a generated toy
/// sample, probing entries across every layer; relative tolerance 1e-4.
inline GradCheckReport gradcheck_model(std::uint64_t seed, int hidden_size = 16,
                                       int n_qubits = 5) {
    GradCheckReport report;
    report.scope = "model";
    report.tolerance = 1e-4;

    sketch::EncodeOptions opt;
    opt.seed = seed;
    opt.log = nullptr;
    const sketch::EncodedDataset ds = sketch::encode_dataset(sketch::synth::corpus(2, seed), opt);
    const sketch::EncodedSample &sample = ds.samples[0];
    const auto label = static_cast<std::size_t>(sample.label);

    models::ModelConfig cfg;
    cfg.kind = models::Kind::QD;
    cfg.hidden_size = hidden_size;
    cfg.n_qubits = n_qubits;
    cfg.seed = seed;
    models::HybridModel m = models::build_model(cfg);

    struct Probe {
        std::string name;
        models::Value v;
        std::size_t idx;
    };
    std::vector<Probe> probes = {
        {"lstm1.w_i[0]", m.lstm1.w_i, 0},   {"lstm1.u_f[3]", m.lstm1.u_f, 3},
        {"lstm1.b_g[1]", m.lstm1.b_g, 1},   {"lstm2.w_o[5]", m.lstm2.w_o, 5},
        {"lstm2.u_g[7]", m.lstm2.u_g, 7},   {"fc1.W[2]", m.fc1.W, 2},
        {"fc2.W[9]", m.fc2.W, 9},           {"fc_embed.W[4]", m.fc_embed.W, 4},
        {"fc_embed.b[0]", m.fc_embed.b, 0}, {"theta[0]", m.theta, 0},
        {"theta[7]", m.theta, 7},           {"fc_out.W[1]", m.fc_out.W, 1},
        {"fc_out.b[2]", m.fc_out.b, 2},
    };

    auto loss_of = [&]() {
        return autograd::softmax_cross_entropy(models::forward(m, sample), label);
    };
    for (models::Value &p : models::trainable_params(m))
        p.zero_grad();
    loss_of().backward();

    const double h = 1e-5;
    for (Probe &probe : probes) {
        const double keep = probe.v.data().v[probe.idx];
        probe.v.mutable_data().v[probe.idx] = keep + h;
        const double plus = loss_of().data().v[0];
        probe.v.mutable_data().v[probe.idx] = keep - h;
        const double minus = loss_of().data().v[0];
        probe.v.mutable_data().v[probe.idx] = keep;
        const double fd = (plus - minus) / (2.0 * h);
        const double dev = detail::rel_err(probe.v.grad().v[probe.idx], fd);
        ++report.checks;
        if (dev > report.max_deviation) {
            report.max_deviation = dev;
            report.worst = probe.name;
        }
    }
    return report;
}

} // namespace qdraw::harness
