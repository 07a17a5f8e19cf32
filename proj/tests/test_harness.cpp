#include <catch2/catch_amalgamated.hpp>

#include "qdraw/harness/suite.hpp"
#include "qdraw/sketch/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace qdraw;
using namespace qdraw::harness;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

sketch::EncodedDataset toy_dataset(std::size_t per_class = 4, std::uint64_t seed = 11) {
    sketch::EncodeOptions opt;
    opt.seed = seed;
    opt.log = nullptr;
    return sketch::encode_dataset(sketch::synth::corpus(per_class, seed), opt);
}

TrainConfig toy_config(models::Kind kind, int epochs = 2) {
    TrainConfig cfg;
    cfg.model.kind = kind;
    cfg.model.hidden_size = 8;
    cfg.model.n_qubits = 3;
    cfg.epochs = epochs;
    cfg.batch_size = 4;
    cfg.seeds = {1};
    cfg.write_svg = false;
    return cfg;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentRecord stub_record(models::Kind kind, std::uint64_t seed, double val_acc) {
    ExperimentRecord r;
    r.kind = kind;
    r.seed = seed;
    r.train_loss = {0.9, 0.5};
    r.val_loss = {1.0, 0.6};
    r.train_acc = {0.4, val_acc};
    r.val_acc = {0.4, val_acc};
    return r;
}

} // namespace

TEST_CASE("toy training run produces finite per-epoch metrics", "[harness]") {
    const sketch::EncodedDataset ds = toy_dataset();
    const TrainConfig cfg = toy_config(models::Kind::QD);
    const TrainResult res = train(cfg, 1, ds);
    REQUIRE(res.record.train_loss.size() == 2);
    REQUIRE(res.record.val_loss.size() == 2);
    REQUIRE(res.record.train_acc.size() == 2);
    REQUIRE(res.record.val_acc.size() == 2);
    for (std::size_t e = 0; e < 2; ++e) {
        REQUIRE(std::isfinite(res.record.train_loss[e]));
        REQUIRE(std::isfinite(res.record.val_loss[e]));
        REQUIRE(res.record.train_acc[e] >= 0.0);
        REQUIRE(res.record.train_acc[e] <= 1.0);
    }
    REQUIRE(res.record.wall_seconds > 0.0);
}

TEST_CASE("untrained balanced-class loss is near ln 3", "[harness]") {
    const sketch::EncodedDataset ds = toy_dataset(12, 5);
    for (models::Kind kind : {models::Kind::QD, models::Kind::Baseline}) {
        models::ModelConfig mc = toy_config(kind).model;
        mc.seed = 2;
        const models::HybridModel m = models::build_model(mc);
        const auto [loss, acc] = evaluate(m, ds, sketch::Split::Val);
        REQUIRE_THAT(loss, WithinAbs(std::log(3.0), 0.2));
        (void)acc;
    }
}

TEST_CASE("same config and seed reproduce the record bit-for-bit", "[harness]") {
    const sketch::EncodedDataset ds = toy_dataset();
    const TrainConfig cfg = toy_config(models::Kind::QDSep);
    const TrainResult a = train(cfg, 7, ds);
    const TrainResult b = train(cfg, 7, ds);
    REQUIRE(a.record.train_loss == b.record.train_loss);
    REQUIRE(a.record.val_loss == b.record.val_loss);
    REQUIRE(a.record.train_acc == b.record.train_acc);
    REQUIRE(a.record.val_acc == b.record.val_acc);
}

TEST_CASE("evaluate counts argmax hits and is pure", "[harness]") {
    const sketch::EncodedDataset balanced = toy_dataset(6, 9);
    models::ModelConfig mc = toy_config(models::Kind::QD).model;
    models::HybridModel m = models::build_model(mc);
    m.fc_out.W.mutable_data().fill(0.0);
    m.fc_out.b.mutable_data().v = {1.0, 0.0, 0.0}; // predicts class 0 always

    SECTION("balanced split gives one third") {
        const auto [loss, acc] = evaluate(m, balanced, sketch::Split::Val);
        double class0 = 0, total = 0;
        for (const auto &s : balanced.samples)
            if (s.split == sketch::Split::Val) {
                total += 1;
                class0 += s.label == 0 ? 1 : 0;
            }
        REQUIRE_THAT(acc, WithinAbs(class0 / total, 1e-12));
        REQUIRE(std::isfinite(loss));
    }

    SECTION("single-class split makes the constant predictor perfect") {
        sketch::EncodeOptions opt;
        opt.seed = 3;
        opt.log = nullptr;
        std::vector<sketch::RawDrawing> drawings;
        Rng rng(77);
        for (int i = 0; i < 6; ++i)
            drawings.push_back(sketch::synth::drawing("calculator", rng));
        const sketch::EncodedDataset single = sketch::encode_dataset(drawings, opt);
        const auto [loss, acc] = evaluate(m, single, sketch::Split::Val);
        REQUIRE(acc == 1.0);
        (void)loss;
    }

    SECTION("evaluation is repeatable on a snapshot") {
        const auto a = evaluate(m, balanced, sketch::Split::Val);
        const auto b = evaluate(m, balanced, sketch::Split::Val);
        REQUIRE(a == b);
    }

    SECTION("empty split is an error") {
        sketch::EncodedDataset empty = balanced;
        for (auto &s : empty.samples)
            s.split = sketch::Split::Train;
        REQUIRE_THROWS_AS(evaluate(m, empty, sketch::Split::Val), std::invalid_argument);
    }
}

TEST_CASE("aggregation follows the mean (min, max) contract", "[harness]") {
    SECTION("three seeds") {
        const std::vector<ExperimentRecord> records = {
            stub_record(models::Kind::QD, 1, 0.61), stub_record(models::Kind::QD, 2, 0.85),
            stub_record(models::Kind::QD, 3, 0.96)};
        const Summary s = aggregate(records);
        REQUIRE(s.rows.size() == 1);
        REQUIRE_THAT(s.rows[0].val_acc_mean, WithinAbs(0.8067, 1e-4));
        REQUIRE(s.rows[0].val_acc_min == 0.61);
        REQUIRE(s.rows[0].val_acc_max == 0.96);
    }
    SECTION("single seed degenerates to min = mean = max") {
        const Summary s = aggregate({stub_record(models::Kind::Baseline, 1, 0.5)});
        REQUIRE(s.rows[0].val_acc_mean == 0.5);
        REQUIRE(s.rows[0].val_acc_min == 0.5);
        REQUIRE(s.rows[0].val_acc_max == 0.5);
    }
    SECTION("record order does not matter") {
        std::vector<ExperimentRecord> records = {
            stub_record(models::Kind::QD, 1, 0.61), stub_record(models::Kind::Baseline, 9, 0.7),
            stub_record(models::Kind::QD, 2, 0.96)};
        const Summary a = aggregate(records);
        std::swap(records[0], records[2]);
        std::swap(records[0], records[1]);
        const Summary b = aggregate(records);
        REQUIRE(summary_csv(a) == summary_csv(b));
        // fixed row order: qd before baseline
        REQUIRE(a.rows[0].kind == models::Kind::QD);
        REQUIRE(a.rows[1].kind == models::Kind::Baseline);
    }
}

TEST_CASE("run_suite persists records and the report reproduces its summary", "[harness]") {
    const fs::path dir = fs::temp_directory_path() / "qdraw_suite_test";
    fs::remove_all(dir);
    const sketch::EncodedDataset ds = toy_dataset();
    TrainConfig cfg = toy_config(models::Kind::QDSep);
    cfg.seeds = {3, 4};
    cfg.out_dir = dir.string();
    cfg.write_svg = true;
    const Summary emitted = run_suite(cfg, ds);
    REQUIRE_FALSE(emitted.partial());
    REQUIRE(emitted.rows.size() == 1);
    REQUIRE(emitted.rows[0].n_runs == 2);
    for (const char *suffix : {".metrics.csv", ".meta", ".ckpt", ".svg"}) {
        REQUIRE(fs::exists(dir / ("qd-sep-seed3" + std::string(suffix))));
        REQUIRE(fs::exists(dir / ("qd-sep-seed4" + std::string(suffix))));
    }

    const Summary reloaded = report_from_dir(dir.string());
    REQUIRE(summary_csv(reloaded) == summary_csv(emitted));

    SECTION("worker count does not change results") {
        TrainConfig serial = cfg;
        serial.out_dir.clear();
        serial.workers = 1;
        const Summary one = run_suite(serial, ds);
        serial.workers = 2;
        const Summary two = run_suite(serial, ds);
        REQUIRE(summary_csv(one) == summary_csv(two));
        REQUIRE(summary_csv(one) == summary_csv(emitted));
    }

    SECTION("rerun is byte-identical") {
        const std::string before = slurp(dir / "qd-sep-seed3.metrics.csv");
        fs::remove_all(dir);
        run_suite(cfg, ds);
        REQUIRE(slurp(dir / "qd-sep-seed3.metrics.csv") == before);
    }
    fs::remove_all(dir);
}

TEST_CASE("non-finite loss aborts the run with a diagnostic", "[harness]") {
    const sketch::EncodedDataset ds = toy_dataset();
    TrainConfig cfg = toy_config(models::Kind::Baseline);
    cfg.lr = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_WITH(train(cfg, 1, ds), Catch::Matchers::ContainsSubstring("non-finite") &&
                                               Catch::Matchers::ContainsSubstring("epoch"));

    SECTION("a failing seed marks the suite partial and leaves no row or files") {
        const fs::path dir = fs::temp_directory_path() / "qdraw_suite_fail";
        fs::remove_all(dir);
        cfg.out_dir = dir.string();
        const Summary s = run_suite(cfg, ds);
        REQUIRE(s.partial());
        REQUIRE(s.rows.empty());
        REQUIRE_THAT(s.failures[0], Catch::Matchers::ContainsSubstring("seed 1"));
        REQUIRE_FALSE(fs::exists(dir / "baseline-seed1.metrics.csv"));
        fs::remove_all(dir);
    }
}

TEST_CASE("summary renderings are stable", "[harness]") {
    const Summary s = aggregate({stub_record(models::Kind::QD, 1, 0.61),
                                 stub_record(models::Kind::QD, 2, 0.96),
                                 stub_record(models::Kind::Baseline, 3, 0.7)});
    const std::string table = summary_table(s);
    REQUIRE_THAT(table, Catch::Matchers::ContainsSubstring("qd"));
    REQUIRE_THAT(table, Catch::Matchers::ContainsSubstring("0.7850 (0.6100, 0.9600)"));
    REQUIRE(summary_table(s) == table);
    const std::string csv = summary_csv(s);
    REQUIRE_THAT(csv, Catch::Matchers::ContainsSubstring("qd,2,"));
    REQUIRE_THAT(csv, Catch::Matchers::ContainsSubstring("baseline,1,"));
}
