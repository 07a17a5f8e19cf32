#pragma once

#include "qdraw/autograd/adam.hpp"
#include "qdraw/models/model.hpp"
#include "qdraw/rng.hpp"
#include "qdraw/sketch/encode.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace qdraw::harness {

struct TrainConfig {
    models::ModelConfig model;
    int epochs = 100;
    int batch_size = 32;
    double lr = 1e-3;
    std::vector<std::uint64_t> seeds = {0};
    std::string dataset_path;
    std::string out_dir;
    int workers = 0; // 0 = hardware concurrency
    bool write_svg = true;

    void validate() const {
        if (epochs < 1)
            throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (batch_size < 1)
            throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
        if (seeds.empty())
            throw std::invalid_argument("TrainConfig: seeds must be nonempty");
        for (std::size_t i = 0; i < seeds.size(); ++i)
            for (std::size_t j = i + 1; j < seeds.size(); ++j)
                if (seeds[i] == seeds[j])
                    throw std::invalid_argument("TrainConfig: duplicate seed " +
                                                std::to_string(seeds[i]));
    }
};

/// Per-epoch metric curves of one (kind, seed) run.
struct ExperimentRecord {
    models::Kind kind = models::Kind::QD;
    std::uint64_t seed = 0;
    std::vector<double> train_loss, val_loss, train_acc, val_acc;
    double wall_seconds = 0.0;

    double final_train_loss() const { return train_loss.back(); }
    double final_val_loss() const { return val_loss.back(); }
    double final_train_acc() const { return train_acc.back(); }
    double final_val_acc() const { return val_acc.back(); }
};

struct TrainResult {
    ExperimentRecord record;
    models::HybridModel model;
};

/// Mean cross entropy and argmax accuracy over one split. Pure: parameters
/// are read, never written.
inline std::pair<double, double> evaluate(const models::HybridModel &model,
                                          const sketch::EncodedDataset &ds, sketch::Split split) {
    double loss_sum = 0.0;
    std::size_t correct = 0, count = 0;
    for (const sketch::EncodedSample &sample : ds.samples) {
        if (sample.split != split)
            continue;
        ++count;
        const auto label = static_cast<std::size_t>(sample.label);
        const models::Value logits = models::forward(model, sample);
        loss_sum += autograd::softmax_cross_entropy(logits, label).data().v[0];
        const auto &z = logits.data().v;
        std::size_t best = 0;
        for (std::size_t i = 1; i < z.size(); ++i)
            if (z[i] > z[best])
                best = i;
        correct += best == label ? 1 : 0;
    }
    if (count == 0)
        throw std::invalid_argument("evaluate: empty split");
    return {loss_sum / static_cast<double>(count),
            static_cast<double>(correct) / static_cast<double>(count)};
}

/// One seeded training run: seeded build, seeded shuffles, Adam on gradients
/// averaged over each mini-batch, full train/val metrics after every epoch.
/// A non-finite loss aborts with the epoch and batch in the diagnostic.
inline TrainResult train(const TrainConfig &cfg, std::uint64_t seed,
                         const sketch::EncodedDataset &ds) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    models::ModelConfig mc = cfg.model;
    mc.seed = seed;
    TrainResult out{{}, models::build_model(mc)};
    out.record.kind = mc.kind;
    out.record.seed = seed;

    std::vector<models::Value> params = models::trainable_params(out.model);
    for (models::Value &p : params)
        p.zero_grad();
    autograd::AdamState adam;
    adam.lr = cfg.lr;

    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        if (ds.samples[i].split == sketch::Split::Train)
            train_idx.push_back(i);
    if (train_idx.empty())
        throw std::invalid_argument("train: dataset has no training samples");

    Rng shuffle_rng = Rng(seed).derive(0x73687566666cULL);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(train_idx);
        const std::size_t n = train_idx.size();
        for (std::size_t start = 0, batch = 0; start < n;
             start += static_cast<std::size_t>(cfg.batch_size), ++batch) {
            const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                const sketch::EncodedSample &sample = ds.samples[train_idx[k]];
                const models::Value loss = autograd::softmax_cross_entropy(
                    models::forward(out.model, sample), static_cast<std::size_t>(sample.label));
                if (!std::isfinite(loss.data().v[0]))
                    throw std::runtime_error("train: non-finite loss (model " +
                                             std::string(models::kind_name(mc.kind)) + ", seed " +
                                             std::to_string(seed) + ", epoch " +
                                             std::to_string(epoch) + ", batch " +
                                             std::to_string(batch) + ")");
                loss.backward(inv);
            }
            autograd::adam_step(params, adam);
        }
        const auto [tl, ta] = evaluate(out.model, ds, sketch::Split::Train);
        const auto [vl, va] = evaluate(out.model, ds, sketch::Split::Val);
        if (!std::isfinite(tl) || !std::isfinite(vl))
            throw std::runtime_error("train: non-finite evaluation loss (epoch " +
                                     std::to_string(epoch) + ")");
        out.record.train_loss.push_back(tl);
        out.record.train_acc.push_back(ta);
        out.record.val_loss.push_back(vl);
        out.record.val_acc.push_back(va);
    }
    out.record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

// ---------------------------------------------------------------------------
// Record persistence
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace detail

inline std::string run_stem(models::Kind kind, std::uint64_t seed) {
    return std::string(models::kind_name(kind)) + "-seed" + std::to_string(seed);
}

/// Canonical per-run record: epoch,train_loss,val_loss,train_acc,val_acc.
inline void save_metrics_csv(const std::string &path, const ExperimentRecord &r) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_metrics_csv: cannot open " + path);
    out << "epoch,train_loss,val_loss,train_acc,val_acc\n";
    for (std::size_t e = 0; e < r.train_loss.size(); ++e)
        out << e + 1 << "," << detail::fmt17(r.train_loss[e]) << ","
            << detail::fmt17(r.val_loss[e]) << "," << detail::fmt17(r.train_acc[e]) << ","
            << detail::fmt17(r.val_acc[e]) << "\n";
    if (!out)
        throw std::runtime_error("save_metrics_csv: write failed for " + path);
}

inline void save_meta(const std::string &path, const ExperimentRecord &r,
                      const TrainConfig &cfg) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_meta: cannot open " + path);
    out << "model " << models::kind_name(r.kind) << "\n";
    out << "seed " << r.seed << "\n";
    out << "epochs " << r.train_loss.size() << "\n";
    out << "batch_size " << cfg.batch_size << "\n";
    out << "lr " << detail::fmt17(cfg.lr) << "\n";
    out << "wall_seconds " << detail::fmt17(r.wall_seconds) << "\n";
    out << "final_train_loss " << detail::fmt17(r.final_train_loss()) << "\n";
    out << "final_val_loss " << detail::fmt17(r.final_val_loss()) << "\n";
    out << "final_train_acc " << detail::fmt17(r.final_train_acc()) << "\n";
    out << "final_val_acc " << detail::fmt17(r.final_val_acc()) << "\n";
}

struct LoadedRecord {
    ExperimentRecord record;
};

/// Reads back one persisted record (meta + metrics CSV) by stem.
inline ExperimentRecord load_record(const std::string &dir, const std::string &stem) {
    ExperimentRecord r;
    {
        std::ifstream meta(dir + "/" + stem + ".meta");
        if (!meta)
            throw std::runtime_error("load_record: missing meta for " + stem);
        std::string key;
        while (meta >> key) {
            std::string value;
            meta >> value;
            if (key == "model")
                r.kind = models::kind_from_string(value);
            else if (key == "seed")
                r.seed = std::stoull(value);
            else if (key == "wall_seconds")
                r.wall_seconds = std::strtod(value.c_str(), nullptr);
        }
    }
    std::ifstream csv(dir + "/" + stem + ".metrics.csv");
    if (!csv)
        throw std::runtime_error("load_record: missing metrics CSV for " + stem);
    std::string line;
    if (!std::getline(csv, line) || line != "epoch,train_loss,val_loss,train_acc,val_acc")
        throw std::runtime_error("load_record: bad CSV header in " + stem);
    while (std::getline(csv, line)) {
        if (line.empty())
            continue;
        double epoch, tl, vl, ta, va;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &epoch, &tl, &vl, &ta, &va) != 5)
            throw std::runtime_error("load_record: bad CSV row in " + stem + ": " + line);
        r.train_loss.push_back(tl);
        r.val_loss.push_back(vl);
        r.train_acc.push_back(ta);
        r.val_acc.push_back(va);
    }
    if (r.train_loss.empty())
        throw std::runtime_error("load_record: no rows in " + stem);
    return r;
}

} // namespace qdraw::harness
