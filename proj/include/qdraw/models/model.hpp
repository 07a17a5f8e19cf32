#pragma once

#include "qdraw/autograd/adam.hpp"
#include "qdraw/autograd/checkpoint.hpp"
#include "qdraw/autograd/lstm.hpp"
#include "qdraw/autograd/value.hpp"
#include "qdraw/qsim/circuit.hpp"
#include "qdraw/rng.hpp"
#include "qdraw/sketch/encode.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace qdraw::models {

using autograd::Tensor;
using autograd::Value;

enum class Kind { Baseline, QD, QDFrozen, QDSep };

inline const char *kind_name(Kind k) {
    switch (k) {
    case Kind::Baseline: return "baseline";
    case Kind::QD: return "qd";
    case Kind::QDFrozen: return "qd-frozen";
    case Kind::QDSep: return "qd-sep";
    }
    return "?";
}

inline Kind kind_from_string(const std::string &s) {
    for (Kind k : {Kind::Baseline, Kind::QD, Kind::QDFrozen, Kind::QDSep})
        if (s == kind_name(k))
            return k;
    throw std::invalid_argument("unknown model kind '" + s +
                                "' (expected qd, qd-frozen, qd-sep, or baseline)");
}

struct ModelConfig {
    Kind kind = Kind::QD;
    int hidden_size = 128;
    int n_qubits = 5;
    int n_classes = 3;
    bool angle_squash = true;
    int hea_layers = 1;
    std::uint64_t seed = 0;
};

struct Affine {
    Value W, b;

    static Affine init(int out, int in, Rng &rng) {
        const double a = 1.0 / std::sqrt(static_cast<double>(in));
        Tensor w(autograd::Shape{static_cast<std::size_t>(out), static_cast<std::size_t>(in)});
        for (double &x : w.v)
            x = rng.uniform(-a, a);
        return {Value::param(std::move(w)),
                Value::param(Tensor(autograd::Shape{static_cast<std::size_t>(out)}))};
    }

    Value operator()(const Value &x) const { return autograd::linear(W, x, b); }
};

/// The stacked-LSTM front end feeding either a plain affine head (baseline) or
/// the pooled FC stack -> angle embedding -> quantum circuit -> affine head.
struct HybridModel {
    ModelConfig cfg;
    autograd::LstmParams lstm1, lstm2;
    Affine fc1, fc2, fc_embed; // QD family only
    qsim::CircuitLayout layout;
    Value theta;
    Affine fc_out;

    bool is_quantum() const { return cfg.kind != Kind::Baseline; }
};

/// Deterministic build: all classical weights are drawn in a fixed order from
/// the seed, so QD / QD-Frozen / QD-Sep built from one seed share identical
/// classical initializations and theta; only the layout (and theta
/// trainability) differ.
inline HybridModel build_model(const ModelConfig &cfg) {
    if (cfg.hidden_size < 2 || cfg.hidden_size % 2 != 0)
        throw std::invalid_argument("build_model: hidden_size must be even and >= 2, got " +
                                    std::to_string(cfg.hidden_size));
    if (cfg.n_qubits < 1 || cfg.n_classes < 2)
        throw std::invalid_argument("build_model: bad n_qubits/n_classes");
    HybridModel m;
    m.cfg = cfg;
    Rng rng(cfg.seed);
    Rng init = rng.derive(0x6d6f64656cULL); // model init stream
    m.lstm1 = autograd::LstmParams::init(static_cast<int>(sketch::kRowWidth), cfg.hidden_size,
                                         init);
    m.lstm2 = autograd::LstmParams::init(cfg.hidden_size, cfg.hidden_size, init);
    const int pooled = cfg.hidden_size / 2;
    if (m.is_quantum()) {
        m.fc1 = Affine::init(pooled, pooled, init);
        m.fc2 = Affine::init(pooled, pooled, init);
        m.fc_embed = Affine::init(cfg.n_qubits, pooled, init);
        m.fc_out = Affine::init(cfg.n_classes, cfg.n_qubits, init);
        m.layout = qsim::build_hea(cfg.n_qubits, cfg.kind != Kind::QDSep, cfg.hea_layers);
        Tensor th(autograd::Shape{static_cast<std::size_t>(m.layout.n_train)});
        for (double &x : th.v)
            x = init.uniform(0.0, 2.0 * std::numbers::pi);
        m.theta = Value::param(std::move(th));
        if (cfg.kind == Kind::QDFrozen)
            m.theta.set_requires_grad(false);
    } else {
        m.fc_out = Affine::init(cfg.n_classes, cfg.hidden_size, init);
    }
    return m;
}

/// Everything the optimizer updates, in a stable order. Frozen theta is
/// excluded entirely, which both skips its shift gradients and guarantees the
/// initialization survives any number of steps bit-for-bit.
inline std::vector<Value> trainable_params(const HybridModel &m) {
    std::vector<Value> out;
    for (const Value &v : m.lstm1.params())
        out.push_back(v);
    for (const Value &v : m.lstm2.params())
        out.push_back(v);
    if (m.is_quantum()) {
        for (const Affine *fc : {&m.fc1, &m.fc2, &m.fc_embed, &m.fc_out}) {
            out.push_back(fc->W);
            out.push_back(fc->b);
        }
        if (m.theta.requires_grad())
            out.push_back(m.theta);
    } else {
        out.push_back(m.fc_out.W);
        out.push_back(m.fc_out.b);
    }
    return out;
}

/// Graph node evaluating the circuit exactly in the forward pass and chaining
/// parameter-shift Jacobians in the backward pass: upstream gradients flow
/// through the EMBED slots into the classical stack, and into theta unless it
/// is frozen.
inline Value circuit_expectations(const qsim::CircuitLayout &layout, const Value &embed,
                                  const Value &theta) {
    std::vector<double> ev = qsim::run_circuit(layout, embed.data().v, theta.data().v);
    return Value::custom(
        Tensor::vector(std::move(ev)), {embed, theta}, [layout](autograd::Node &self) {
            autograd::Node &pe = *self.parents[0];
            autograd::Node &pt = *self.parents[1];
            const qsim::ShiftJacobians jac =
                qsim::param_shift_grad(layout, pe.data.v, pt.data.v, pt.requires_grad);
            const std::vector<double> &g = self.grad.v;
            if (pe.requires_grad) {
                Tensor &ge = pe.ensure_grad();
                for (std::size_t i = 0; i < ge.numel(); ++i)
                    for (std::size_t w = 0; w < g.size(); ++w)
                        ge.v[i] += g[w] * jac.wrt_embed[w][i];
            }
            if (pt.requires_grad) {
                Tensor &gt = pt.ensure_grad();
                for (std::size_t j = 0; j < gt.numel(); ++j)
                    for (std::size_t w = 0; w < g.size(); ++w)
                        gt.v[j] += g[w] * jac.wrt_theta[w][j];
            }
        });
}

struct ForwardTrace {
    Value logits;
    Value embed_angles; // undefined for the baseline
};

/// Runs the recurrence over the valid rows of one encoded sample and the
/// head for the configured variant. Padded rows are skipped outright so
/// padding cannot leak into the recurrent state.
inline ForwardTrace forward_traced(const HybridModel &m, const sketch::EncodedSample &sample) {
    if (sample.rows.size() % sketch::kRowWidth != 0)
        throw std::invalid_argument("forward: sample width is not " +
                                    std::to_string(sketch::kRowWidth));
    const std::size_t n_rows = sample.rows.size() / sketch::kRowWidth;
    const auto hidden = autograd::Shape{static_cast<std::size_t>(m.cfg.hidden_size)};
    Value h1 = Value::constant(Tensor(hidden)), c1 = Value::constant(Tensor(hidden));
    Value h2 = Value::constant(Tensor(hidden)), c2 = Value::constant(Tensor(hidden));
    std::size_t seen = 0;
    for (std::size_t r = 0; r < n_rows; ++r) {
        if (sample.at(r, sketch::kRowWidth - 1) == 0.0)
            continue;
        ++seen;
        Tensor row(autograd::Shape{sketch::kRowWidth});
        for (std::size_t c = 0; c < sketch::kRowWidth; ++c)
            row.v[c] = sample.at(r, c);
        const Value x = Value::constant(std::move(row));
        std::tie(h1, c1) = autograd::lstm_cell(x, h1, c1, m.lstm1);
        std::tie(h2, c2) = autograd::lstm_cell(h1, h2, c2, m.lstm2);
    }
    if (seen == 0)
        throw std::invalid_argument("forward: sample has zero valid rows");

    ForwardTrace out;
    if (!m.is_quantum()) {
        out.logits = m.fc_out(h2);
        return out;
    }
    const Value pooled = autograd::max_pool1d(h2);
    const Value a1 = autograd::relu(m.fc1(pooled));
    const Value a2 = autograd::relu(m.fc2(a1));
    const Value z = m.fc_embed(a2);
    out.embed_angles =
        m.cfg.angle_squash ? autograd::scale(autograd::tanh(z), std::numbers::pi) : z;
    const Value expvals = circuit_expectations(m.layout, out.embed_angles, m.theta);
    out.logits = m.fc_out(expvals);
    return out;
}

inline Value forward(const HybridModel &m, const sketch::EncodedSample &sample) {
    return forward_traced(m, sample).logits;
}

/// Argmax of the logits; ties resolve to the lowest class index.
inline int predict(const HybridModel &m, const sketch::EncodedSample &sample) {
    const Value out = forward(m, sample);
    const Tensor &logits = out.data();
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.numel(); ++i)
        if (logits.v[i] > logits.v[best])
            best = i;
    return static_cast<int>(best);
}

inline std::vector<double> probabilities(const HybridModel &m,
                                         const sketch::EncodedSample &sample) {
    const Value out = forward(m, sample);
    const Tensor &logits = out.data();
    const double zmax = *std::max_element(logits.v.begin(), logits.v.end());
    std::vector<double> p(logits.numel());
    double denom = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits.v[i] - zmax);
        denom += p[i];
    }
    for (double &x : p)
        x /= denom;
    return p;
}

// ---------------------------------------------------------------------------
// Checkpointing
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::pair<std::string, Value>> named_values(const HybridModel &m) {
    std::vector<std::pair<std::string, Value>> out;
    auto lstm = [&out](const char *prefix, const autograd::LstmParams &p) {
        const char *names[] = {"w_i", "u_i", "b_i", "w_f", "u_f", "b_f",
                               "w_g", "u_g", "b_g", "w_o", "u_o", "b_o"};
        std::vector<Value> vs = p.params();
        for (std::size_t i = 0; i < vs.size(); ++i)
            out.emplace_back(std::string(prefix) + "." + names[i], vs[i]);
    };
    lstm("lstm1", m.lstm1);
    lstm("lstm2", m.lstm2);
    if (m.cfg.kind != Kind::Baseline) {
        out.emplace_back("fc1.W", m.fc1.W);
        out.emplace_back("fc1.b", m.fc1.b);
        out.emplace_back("fc2.W", m.fc2.W);
        out.emplace_back("fc2.b", m.fc2.b);
        out.emplace_back("fc_embed.W", m.fc_embed.W);
        out.emplace_back("fc_embed.b", m.fc_embed.b);
        out.emplace_back("theta", m.theta);
    }
    out.emplace_back("fc_out.W", m.fc_out.W);
    out.emplace_back("fc_out.b", m.fc_out.b);
    return out;
}

} // namespace detail

/// Checkpoint = named parameter tensors + ModelConfig echo + layout dump.
inline void save_model(const std::string &path, const HybridModel &m,
                       std::vector<std::pair<std::string, std::string>> extra_meta = {}) {
    autograd::Checkpoint ckpt;
    ckpt.meta.emplace_back("model", kind_name(m.cfg.kind));
    ckpt.meta.emplace_back("hidden_size", std::to_string(m.cfg.hidden_size));
    ckpt.meta.emplace_back("n_qubits", std::to_string(m.cfg.n_qubits));
    ckpt.meta.emplace_back("n_classes", std::to_string(m.cfg.n_classes));
    ckpt.meta.emplace_back("angle_squash", m.cfg.angle_squash ? "1" : "0");
    ckpt.meta.emplace_back("hea_layers", std::to_string(m.cfg.hea_layers));
    ckpt.meta.emplace_back("seed", std::to_string(m.cfg.seed));
    for (auto &[k, v] : extra_meta)
        ckpt.meta.emplace_back(k, v);
    if (m.cfg.kind != Kind::Baseline)
        ckpt.texts.emplace_back("layout", qsim::layout_to_text(m.layout));
    for (auto &[name, value] : detail::named_values(m))
        ckpt.tensors.emplace_back(name, value.data());
    autograd::save_checkpoint(path, ckpt);
}

/// Rebuilds the model from the config echo and overwrites every parameter
/// tensor from the container.
inline HybridModel load_model(const std::string &path) {
    const autograd::Checkpoint ckpt = autograd::load_checkpoint(path);
    ModelConfig cfg;
    cfg.kind = kind_from_string(ckpt.meta_value("model"));
    cfg.hidden_size = std::stoi(ckpt.meta_value("hidden_size"));
    cfg.n_qubits = std::stoi(ckpt.meta_value("n_qubits"));
    cfg.n_classes = std::stoi(ckpt.meta_value("n_classes"));
    cfg.angle_squash = ckpt.meta_value("angle_squash") == "1";
    cfg.hea_layers = std::stoi(ckpt.meta_value("hea_layers"));
    cfg.seed = std::stoull(ckpt.meta_value("seed"));
    HybridModel m = build_model(cfg);
    for (auto &&[name, value] : detail::named_values(m)) {
        const Tensor &stored = ckpt.tensor(name);
        if (stored.shape != value.data().shape)
            throw std::runtime_error("load_model: shape mismatch for " + name + ": " +
                                     stored.shape.str() + " vs " + value.data().shape.str());
        value.mutable_data() = stored;
    }
    return m;
}

} // namespace qdraw::models
