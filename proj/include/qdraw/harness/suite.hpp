#pragma once

#include "qdraw/harness/svg.hpp"
#include "qdraw/harness/train.hpp"

#include <atomic>
#include <optional>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <thread>

namespace qdraw::harness {

/// Mean/min/max of the final-epoch metrics of one model kind over seeds.
struct KindStats {
    models::Kind kind = models::Kind::QD;
    std::size_t n_runs = 0;
    double train_acc_mean = 0, train_acc_min = 0, train_acc_max = 0;
    double val_acc_mean = 0, val_acc_min = 0, val_acc_max = 0;
    double train_loss_mean = 0, train_loss_min = 0, train_loss_max = 0;
    double val_loss_mean = 0, val_loss_min = 0, val_loss_max = 0;
};

struct Summary {
    std::vector<KindStats> rows; // fixed kind order: qd, qd-frozen, qd-sep, baseline
    std::vector<std::string> failures;

    bool partial() const { return !failures.empty(); }

    const KindStats *find(models::Kind k) const {
        for (const KindStats &row : rows)
            if (row.kind == k)
                return &row;
        return nullptr;
    }
};

namespace detail {

struct Agg {
    std::vector<double> xs;
    double mean() const {
        double s = 0;
        for (double x : xs)
            s += x;
        return s / static_cast<double>(xs.size());
    }
    double min() const { return *std::min_element(xs.begin(), xs.end()); }
    double max() const { return *std::max_element(xs.begin(), xs.end()); }
};

} // namespace detail

/// Final-epoch aggregation across records, grouped by model kind; row order is
/// the fixed report order and is independent of the record order handed in.
inline Summary aggregate(const std::vector<ExperimentRecord> &records) {
    Summary summary;
    for (models::Kind kind :
         {models::Kind::QD, models::Kind::QDFrozen, models::Kind::QDSep, models::Kind::Baseline}) {
        detail::Agg ta, va, tl, vl;
        for (const ExperimentRecord &r : records) {
            if (r.kind != kind)
                continue;
            ta.xs.push_back(r.final_train_acc());
            va.xs.push_back(r.final_val_acc());
            tl.xs.push_back(r.final_train_loss());
            vl.xs.push_back(r.final_val_loss());
        }
        if (ta.xs.empty())
            continue;
        KindStats row;
        row.kind = kind;
        row.n_runs = ta.xs.size();
        row.train_acc_mean = ta.mean(); row.train_acc_min = ta.min(); row.train_acc_max = ta.max();
        row.val_acc_mean = va.mean(); row.val_acc_min = va.min(); row.val_acc_max = va.max();
        row.train_loss_mean = tl.mean(); row.train_loss_min = tl.min(); row.train_loss_max = tl.max();
        row.val_loss_mean = vl.mean(); row.val_loss_min = vl.min(); row.val_loss_max = vl.max();
        summary.rows.push_back(row);
    }
    return summary;
}

/// Trains one record per seed on a bounded worker pool, persists each record,
/// and aggregates the finals. A failed seed is reported in the summary, never
/// dropped silently, and leaves no record files behind.
inline Summary run_suite(const TrainConfig &cfg, const sketch::EncodedDataset &ds) {
    cfg.validate();
    if (!cfg.out_dir.empty())
        std::filesystem::create_directories(cfg.out_dir);
    const std::size_t n_jobs = cfg.seeds.size();
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t n_workers =
        std::min<std::size_t>(n_jobs, cfg.workers > 0 ? static_cast<unsigned>(cfg.workers) : hw);

    std::vector<std::optional<TrainResult>> results(n_jobs);
    std::vector<std::string> errors(n_jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= n_jobs)
                return;
            try {
                results[job] = train(cfg, cfg.seeds[job], ds);
            } catch (const std::exception &e) {
                errors[job] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w)
        pool.emplace_back(worker);
    for (std::thread &t : pool)
        t.join();

    Summary summary;
    std::vector<ExperimentRecord> records;
    for (std::size_t job = 0; job < n_jobs; ++job) {
        if (!results[job]) {
            summary.failures.push_back("seed " + std::to_string(cfg.seeds[job]) + ": " +
                                       errors[job]);
            continue;
        }
        const TrainResult &res = *results[job];
        records.push_back(res.record);
        if (!cfg.out_dir.empty()) {
            const std::string stem = cfg.out_dir + "/" + run_stem(res.record.kind, res.record.seed);
            save_metrics_csv(stem + ".metrics.csv", res.record);
            save_meta(stem + ".meta", res.record, cfg);
            models::save_model(stem + ".ckpt", res.model,
                               {{"final_val_acc", detail::fmt17(res.record.final_val_acc())}});
            if (cfg.write_svg)
                save_curves_svg(stem + ".svg", res.record);
        }
    }
    summary.rows = aggregate(records).rows;
    return summary;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

inline std::string summary_csv(const Summary &s) {
    std::ostringstream os;
    os << "model,seeds,train_acc_mean,train_acc_min,train_acc_max,val_acc_mean,val_acc_min,"
          "val_acc_max,train_loss_mean,train_loss_min,train_loss_max,val_loss_mean,val_loss_min,"
          "val_loss_max\n";
    for (const KindStats &row : s.rows) {
        os << models::kind_name(row.kind) << "," << row.n_runs;
        for (double v :
             {row.train_acc_mean, row.train_acc_min, row.train_acc_max, row.val_acc_mean,
              row.val_acc_min, row.val_acc_max, row.train_loss_mean, row.train_loss_min,
              row.train_loss_max, row.val_loss_mean, row.val_loss_min, row.val_loss_max})
            os << "," << detail::fmt17(v);
        os << "\n";
    }
    return os.str();
}

/// Text table in the mean (min, max) style.
inline std::string summary_table(const Summary &s) {
    auto cell = [](double mean, double lo, double hi) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4f (%.4f, %.4f)", mean, lo, hi);
        return std::string(buf);
    };
    std::ostringstream os;
    os << std::left << std::setw(12) << "model" << std::setw(7) << "seeds" << std::setw(28)
       << "train_acc" << std::setw(28) << "val_acc" << std::setw(28) << "train_loss"
       << std::setw(28) << "val_loss" << "\n";
    for (const KindStats &row : s.rows) {
        os << std::left << std::setw(12) << models::kind_name(row.kind) << std::setw(7)
           << row.n_runs << std::setw(28)
           << cell(row.train_acc_mean, row.train_acc_min, row.train_acc_max) << std::setw(28)
           << cell(row.val_acc_mean, row.val_acc_min, row.val_acc_max) << std::setw(28)
           << cell(row.train_loss_mean, row.train_loss_min, row.train_loss_max) << std::setw(28)
           << cell(row.val_loss_mean, row.val_loss_min, row.val_loss_max) << "\n";
    }
    for (const std::string &f : s.failures)
        os << "FAILED RUN: " << f << "\n";
    return os.str();
}

/// Rebuilds a Summary from the records persisted in a directory.
inline Summary report_from_dir(const std::string &records_dir) {
    namespace fs = std::filesystem;
    std::vector<std::string> stems;
    if (fs::is_directory(records_dir))
        for (const fs::directory_entry &e : fs::directory_iterator(records_dir)) {
            const std::string name = e.path().filename().string();
            const std::string suffix = ".metrics.csv";
            if (name.size() > suffix.size() &&
                name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0)
                stems.push_back(name.substr(0, name.size() - suffix.size()));
        }
    if (stems.empty())
        throw std::runtime_error("report_from_dir: no records in " + records_dir);
    std::sort(stems.begin(), stems.end());
    std::vector<ExperimentRecord> records;
    for (const std::string &stem : stems)
        records.push_back(load_record(records_dir, stem));
    return aggregate(records);
}

} // namespace qdraw::harness
