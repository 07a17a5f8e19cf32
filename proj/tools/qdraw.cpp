// qdraw: hybrid classical-quantum sketch recognition lab CLI.
//
// Subcommands: data (fetch/encode a dataset), train (multi-seed runs),
// report (Table-style aggregation of persisted records), gradcheck
// (finite-difference audits of every gradient path).
// Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

#include <CLI11.hpp>

#include "qdraw/harness/gradcheck.hpp"
#include "qdraw/harness/suite.hpp"
#include "qdraw/models/model.hpp"
#include "qdraw/sketch/encode.hpp"
#include "qdraw/sketch/fetch.hpp"
#include "qdraw/sketch/synth.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace qdraw;

namespace {

std::string sha256_file(const fs::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot hash missing file " + path.string());
    EVP_MD_CTX *ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof b, "%02x", digest[i]);
        hex << b;
    }
    return hex.str();
}

void write_manifest(const fs::path &path, const std::string &command,
                    const std::string &config_echo,
                    const std::vector<std::pair<std::string, fs::path>> &artifacts) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write manifest " + path.string());
    out << "command " << command << "\n";
    out << "config_begin\n" << config_echo << "config_end\n";
    for (const auto &[name, file] : artifacts)
        out << "artifact " << name << " " << file.string() << " sha256:" << sha256_file(file)
            << "\n";
}

std::string env_or(const char *name, const std::string &fallback) {
    const char *v = std::getenv(name);
    return v && *v ? v : fallback;
}

struct DataArgs {
    std::vector<std::string> categories = {"calculator", "camera", "cellphone"};
    std::string cache_dir;
    std::string base_url;
    std::string out = "dataset.qds";
    double tol = 0.02;
    double split = 0.8;
    std::uint64_t seed = 1;
    int cap = 500;
    int segment_cap = 64;
    bool synthetic = false;
};

int cmd_data(const DataArgs &args, const std::string &config_echo) {
    if (args.synthetic)
        sketch::synth::write_ndjson(args.cache_dir, static_cast<std::size_t>(args.cap),
                                    args.seed);
    std::vector<sketch::RawDrawing> drawings;
    std::map<std::string, std::size_t> parsed, rejected;
    std::vector<std::pair<std::string, fs::path>> inputs;
    for (const std::string &category : args.categories) {
        const fs::path file = sketch::fetch_category(category, args.cache_dir, args.base_url);
        inputs.emplace_back(category, file);
        std::ifstream in(file);
        std::string line;
        while (parsed[category] < static_cast<std::size_t>(args.cap) && std::getline(in, line)) {
            if (line.empty())
                continue;
            try {
                sketch::RawDrawing d = sketch::parse_drawing(line);
                if (d.category != category)
                    throw std::invalid_argument("category mismatch: got '" + d.category + "'");
                drawings.push_back(std::move(d));
                ++parsed[category];
            } catch (const std::invalid_argument &) {
                ++rejected[category];
            }
        }
    }

    sketch::EncodeOptions opt;
    opt.tol = args.tol;
    opt.split = args.split;
    opt.seed = args.seed;
    opt.segment_cap = static_cast<std::size_t>(args.segment_cap);
    const sketch::EncodedDataset ds = sketch::encode_dataset(drawings, opt);
    if (const fs::path parent = fs::path(args.out).parent_path(); !parent.empty())
        fs::create_directories(parent);
    sketch::save_dataset(args.out, ds);

    std::size_t rejected_total = 0;
    for (const auto &[cat, n] : rejected)
        rejected_total += n;
    std::cout << "dataset: " << args.out << "\n";
    std::cout << "segments per sample (N): " << ds.n_rows << "\n";
    std::map<int, std::size_t> train_count, val_count;
    for (const auto &s : ds.samples)
        (s.split == sketch::Split::Train ? train_count : val_count)[s.label] += 1;
    for (std::size_t cls = 0; cls < ds.class_names.size(); ++cls)
        std::cout << "class " << cls << " (" << ds.class_names[cls]
                  << "): " << train_count[static_cast<int>(cls)] << " train / "
                  << val_count[static_cast<int>(cls)] << " val\n";
    std::cout << "dropped: " << ds.dropped + rejected_total << " (" << rejected_total
              << " unparseable, " << ds.dropped << " at encode)\n";

    inputs.emplace_back("dataset", args.out);
    write_manifest(args.out + ".manifest", "data", config_echo, inputs);
    return 0;
}

struct TrainArgs {
    std::string model = "qd";
    std::string dataset;
    std::string out = "runs";
    int epochs = 100;
    int batch_size = 32;
    double lr = 1e-3;
    int hidden = 128;
    bool no_squash = false;
    std::vector<std::uint64_t> seeds = {1};
    int workers = 0;
    bool no_svg = false;
};

int cmd_train(const TrainArgs &args, const std::string &config_echo) {
    harness::TrainConfig cfg;
    cfg.model.kind = models::kind_from_string(args.model);
    cfg.model.hidden_size = args.hidden;
    cfg.model.angle_squash = !args.no_squash;
    cfg.epochs = args.epochs;
    cfg.batch_size = args.batch_size;
    cfg.lr = args.lr;
    cfg.seeds = args.seeds;
    cfg.dataset_path = args.dataset;
    cfg.out_dir = args.out;
    cfg.workers = args.workers;
    cfg.write_svg = !args.no_svg;
    cfg.validate();

    const sketch::EncodedDataset ds = sketch::load_dataset(args.dataset);
    const harness::Summary summary = harness::run_suite(cfg, ds);
    std::cout << harness::summary_table(summary);

    std::vector<std::pair<std::string, fs::path>> artifacts = {{"dataset", args.dataset}};
    for (const std::uint64_t seed : cfg.seeds) {
        const std::string stem = harness::run_stem(cfg.model.kind, seed);
        const fs::path csv = fs::path(args.out) / (stem + ".metrics.csv");
        if (fs::exists(csv))
            artifacts.emplace_back(stem, csv);
    }
    write_manifest(fs::path(args.out) / "manifest.txt", "train", config_echo, artifacts);
    if (summary.partial()) {
        std::cerr << "train: " << summary.failures.size() << " run(s) failed; outputs partial\n";
        return 1;
    }
    return 0;
}

struct ReportArgs {
    std::string records = "runs";
    std::string out;
};

int cmd_report(const ReportArgs &args, const std::string &config_echo) {
    const harness::Summary summary = harness::report_from_dir(args.records);
    const fs::path out_dir = args.out.empty() ? fs::path(args.records) : fs::path(args.out);
    fs::create_directories(out_dir);
    const std::string table = harness::summary_table(summary);
    const std::string csv = harness::summary_csv(summary);
    {
        std::ofstream txt(out_dir / "summary.txt");
        txt << table;
        std::ofstream csv_out(out_dir / "summary.csv");
        csv_out << csv;
    }
    std::cout << table;
    write_manifest(out_dir / "report.manifest", "report", config_echo,
                   {{"summary_csv", out_dir / "summary.csv"}});
    return 0;
}

struct GradcheckArgs {
    std::string scope = "qsim";
    std::uint64_t seed = 7;
    std::string corrupt;
};

int cmd_gradcheck(const GradcheckArgs &args) {
    harness::GradCheckReport report;
    if (args.scope == "qsim")
        report = harness::gradcheck_qsim(args.seed, 20, args.corrupt);
    else if (args.scope == "autograd")
        report = harness::gradcheck_autograd(args.seed);
    else // "model", guaranteed by the CLI validator
        report = harness::gradcheck_model(args.seed);
    std::printf("gradcheck %s: %zu checks, max deviation %.3e (tolerance %.0e) at %s\n",
                report.scope.c_str(), report.checks, report.max_deviation, report.tolerance,
                report.worst.c_str());
    if (!report.pass()) {
        std::printf("gradcheck %s: FAIL (worst offender: %s)\n", report.scope.c_str(),
                    report.worst.c_str());
        return 1;
    }
    std::printf("gradcheck %s: PASS\n", report.scope.c_str());
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"hybrid classical-quantum sketch recognition lab"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags also parse after the subcommand name
    app.set_config("--config", "", "flat key=value config file ([section] or section.key form)");

    DataArgs data;
    data.cache_dir = env_or("QDRAW_CACHE_DIR", "cache");
    data.base_url = env_or("QDRAW_DATA_URL", sketch::kDefaultBaseUrl);
    CLI::App *data_cmd = app.add_subcommand("data", "fetch and encode a sketch dataset");
    data_cmd->add_option("--categories", data.categories, "category names")
        ->delimiter(',')
        ->capture_default_str();
    data_cmd->add_option("--cache", data.cache_dir, "category file cache directory")
        ->capture_default_str();
    data_cmd->add_option("--base-url", data.base_url, "dataset bucket base URL");
    data_cmd->add_option("--out", data.out, "output dataset file")->capture_default_str();
    data_cmd->add_option("--tol", data.tol, "fit tolerance (fraction of sketch diagonal)")
        ->capture_default_str();
    data_cmd->add_option("--split", data.split, "train fraction")->capture_default_str();
    data_cmd->add_option("--seed", data.seed, "shuffle/split seed")->capture_default_str();
    data_cmd->add_option("--cap", data.cap, "max samples per class")->capture_default_str();
    data_cmd->add_option("--segment-cap", data.segment_cap, "drop sketches above this many segments")
        ->capture_default_str();
    data_cmd->add_flag("--synthetic", data.synthetic,
                       "generate the procedural corpus into the cache instead of downloading");

    TrainArgs train;
    CLI::App *train_cmd = app.add_subcommand("train", "train one model kind over seeds");
    train_cmd->add_option("--model", train.model, "qd | qd-frozen | qd-sep | baseline")
        ->check(CLI::IsMember({"qd", "qd-frozen", "qd-sep", "baseline"}))
        ->capture_default_str();
    train_cmd->add_option("--dataset", train.dataset, "encoded dataset file")->required();
    train_cmd->add_option("--out", train.out, "output directory")->capture_default_str();
    train_cmd->add_option("--epochs", train.epochs)->capture_default_str();
    train_cmd->add_option("--batch", train.batch_size)->capture_default_str();
    train_cmd->add_option("--lr", train.lr)->capture_default_str();
    train_cmd->add_option("--hidden", train.hidden)->capture_default_str();
    train_cmd->add_option("--seeds", train.seeds, "training seeds")
        ->delimiter(',')
        ->capture_default_str();
    train_cmd->add_option("--workers", train.workers, "concurrent seed runs (0 = cores)")
        ->capture_default_str();
    train_cmd->add_flag("--no-svg", train.no_svg, "skip learning-curve SVGs");
    train_cmd->add_flag("--no-squash", train.no_squash, "feed raw embedding outputs as angles");

    ReportArgs report;
    CLI::App *report_cmd = app.add_subcommand("report", "aggregate persisted records");
    report_cmd->add_option("--records", report.records, "records directory")
        ->capture_default_str();
    report_cmd->add_option("--out", report.out, "summary output directory (default: records)");

    GradcheckArgs grad;
    CLI::App *grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient audits");
    grad_cmd->add_option("scope", grad.scope, "qsim | autograd | model")
        ->check(CLI::IsMember({"qsim", "autograd", "model"}));
    grad_cmd->add_option("--seed", grad.seed)->capture_default_str();
    grad_cmd->add_option("--corrupt", grad.corrupt,
                         "test hook: perturb one Jacobian column (e.g. train7)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e); // help text, exit 0
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    }

    try {
        const std::string config_echo = app.config_to_str(true, false);
        if (data_cmd->parsed())
            return cmd_data(data, config_echo);
        if (train_cmd->parsed())
            return cmd_train(train, config_echo);
        if (report_cmd->parsed())
            return cmd_report(report, config_echo);
        if (grad_cmd->parsed())
            return cmd_gradcheck(grad);
    } catch (const std::exception &e) {
        std::cerr << "qdraw: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
