#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "qkd/config.hpp"
#include "qkd/dataset.hpp"
#include "qkd/preprocess.hpp"
#include "qkd/train.hpp"

using nlohmann::json;
using namespace qkd;

namespace {

// exit codes: 0 success, 2 usage/schema error, 1 runtime failure
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("QKD_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw UsageError("QKD_SEED is not a valid integer: " + std::string(env));
        }
    }
    return 42;
}

Config load_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    Config cfg;
    if (!config_path.empty()) {
        if (!std::filesystem::exists(config_path))
            throw UsageError("config file not found: " + config_path);
        cfg = Config::from_file(config_path);
    }
    cfg.apply_overrides(overrides);
    return cfg;
}

struct PreparedData {
    Split split;
    Scaler scaler;
    LabelCodec codec;
};

// Shared preprocessing path: select features, stratified split, scaler fit
// on the training side, noise injection on the training side only.
PreparedData prepare(const DatasetTable& table, double ratio, std::uint64_t split_seed,
                     double noise_sigma, int train_samples, std::uint64_t subsample_seed) {
    PreparedData out;
    out.codec = LabelCodec::standard();
    const auto labeled = select_features(table, out.codec);
    out.split = stratified_split(labeled.x, labeled.y, ratio, split_seed);
    if (train_samples > 0)
        out.split = subsample_train(out.split, train_samples, subsample_seed);
    out.scaler = fit_scaler(out.split.train_x);
    out.split.train_x =
        inject_noise(out.scaler.transform(out.split.train_x), noise_sigma, split_seed);
    out.split.test_x = out.scaler.transform(out.split.test_x);
    return out;
}

int run_generate(const std::string& out_path, std::uint64_t seed,
                 const std::string& config_path, const std::vector<std::string>& overrides) {
    Config cfg = load_config(config_path, overrides);
    DatasetConfig dataset_cfg;
    dataset_cfg.master_seed = seed;
    configure_dataset(cfg, dataset_cfg);
    train::TrainConfig sink;  // consume train.* keys so they are not "unused"
    configure_training(cfg, sink);
    reject_unused(cfg);

    const auto table = generate_dataset(dataset_cfg);
    write_csv(table, out_path);
    std::cout << out_path << "\n";
    return 0;
}

int run_train(const std::string& data_path, const std::string& model_name, int epochs,
              std::uint64_t seed, const std::string& ckpt_path, std::string history_path,
              double lr, double weight_decay, int t0, int patience, int batch_size,
              double split_ratio, double noise_sigma, int train_samples, int threads,
              const std::string& config_path, const std::vector<std::string>& overrides) {
    if (!std::filesystem::exists(data_path)) throw UsageError("data file not found: " + data_path);
    if (model_name != "qlstm" && model_name != "lstm")
        throw UsageError("--model must be qlstm or lstm");

    Config cfg = load_config(config_path, overrides);
    train::TrainConfig tc;
    tc.max_epochs = epochs;
    tc.batch_size = batch_size;
    tc.lr_init = lr;
    tc.weight_decay = weight_decay;
    tc.t_0 = t0;
    tc.patience = std::min(patience, epochs);
    tc.seed = seed;
    tc.threads = threads;
    configure_training(cfg, tc);

    const auto table = read_csv(data_path);
    const auto data = prepare(table, split_ratio, seed, noise_sigma, train_samples, seed);

    nn::ModelHyper hy;
    hy.kind = model_name == "qlstm" ? nn::ModelKind::Hybrid : nn::ModelKind::ClassicalLstm;
    hy.n_classes = data.codec.num_classes();
    hy.seq_len = kSequenceLength;
    nn::ModelParams init = nn::ModelParams::init(hy, seed);
    std::cout << "model=" << model_name << " parameters=" << init.param_count()
              << " train_rows=" << data.split.train_x.rows
              << " test_rows=" << data.split.test_x.rows << "\n";

    const auto result = qkd::train::train(init, data.split.train_x, data.split.train_y,
                                          data.split.test_x, data.split.test_y, tc);

    nn::CheckpointMeta meta;
    meta.split_seed = seed;
    meta.split_ratio = split_ratio;
    meta.init_seed = seed;
    meta.trained_epochs = static_cast<int>(result.history.size());
    nn::save_checkpoint(ckpt_path, result.best, data.scaler, data.codec, meta);

    if (history_path.empty()) history_path = ckpt_path + ".history.csv";
    train::write_history_csv(history_path, result.history);

    std::cout << ckpt_path << "\n" << history_path << "\n";
    const auto& last = result.history.back();
    std::cout << "epochs_run=" << result.history.size() << " best_epoch=" << result.best_epoch
              << " best_eval_loss=" << result.best_eval_loss
              << " final_accuracy=" << last.accuracy << "\n";
    return 0;
}

int run_evaluate(const std::string& ckpt_path, const std::string& data_path,
                 const std::string& report_path, const std::string& confusion_path,
                 const std::string& split_mode, int threads) {
    if (!std::filesystem::exists(ckpt_path))
        throw UsageError("checkpoint not found: " + ckpt_path);
    if (!std::filesystem::exists(data_path)) throw UsageError("data file not found: " + data_path);
    if (split_mode != "test" && split_mode != "all")
        throw UsageError("--split must be test or all");

    const auto ck = nn::load_checkpoint(ckpt_path);
    const auto table = read_csv(data_path);
    const auto labeled = select_features(table, ck.codec);

    Mat x;
    std::vector<int> y;
    if (split_mode == "test") {
        // reconstruct the held-out split the checkpoint was trained against
        const auto split =
            stratified_split(labeled.x, labeled.y, ck.meta.split_ratio, ck.meta.split_seed);
        x = ck.scaler.transform(split.test_x);
        y = split.test_y;
    } else {
        x = ck.scaler.transform(labeled.x);
        y = labeled.y;
    }

    const auto rep = train::evaluate(ck.params, x, y, threads);

    json j;
    j["model"] = ck.params.hyper.kind == nn::ModelKind::Hybrid ? "qlstm" : "lstm";
    j["trained_epochs"] = ck.meta.trained_epochs;
    j["split"] = split_mode;
    j["samples"] = rep.total;
    j["accuracy"] = rep.accuracy;
    j["precision"] = rep.precision;
    j["recall"] = rep.recall;
    j["f1"] = rep.f1;
    j["loss"] = rep.loss;
    j["note"] = "early stopping monitored the held-out test split; no third split is used";
    json per_class = json::array();
    for (int c = 0; c < static_cast<int>(ck.codec.labels.size()); ++c) {
        per_class.push_back({{"label", ck.codec.labels[c]},
                             {"tp", rep.tp[c]},
                             {"fp", rep.fp[c]},
                             {"fn", rep.fn[c]},
                             {"tn", rep.tn[c]}});
    }
    j["per_class"] = per_class;

    std::ofstream out(report_path);
    if (!out) throw std::runtime_error("cannot write report: " + report_path);
    out << j.dump(2) << "\n";
    out.close();

    train::write_confusion_csv(confusion_path, rep.confusion, ck.codec);

    std::cout << report_path << "\n" << confusion_path << "\n";
    std::cout << "accuracy=" << rep.accuracy << " precision=" << rep.precision
              << " recall=" << rep.recall << " f1=" << rep.f1 << " loss=" << rep.loss << "\n";
    return 0;
}

struct ReferenceRow {
    const char* model;
    int epochs;
    double accuracy, precision, recall, f1, test_loss;
};

// Published reference results for the same protocol (reported, not asserted).
constexpr ReferenceRow kReferenceRows[] = {
    {"lstm", 10, 0.858, 0.895, 0.858, 0.849, 0.258},
    {"lstm", 20, 0.882, 0.903, 0.882, 0.878, 0.239},
    {"lstm", 50, 0.851, 0.871, 0.855, 0.845, 0.310},
    {"qlstm", 10, 0.883, 0.900, 0.883, 0.870, 0.216},
    {"qlstm", 20, 0.938, 0.942, 0.938, 0.938, 0.208},
    {"qlstm", 50, 0.947, 0.951, 0.947, 0.947, 0.189},
};

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto pos = csv.find(',', start);
        if (pos == std::string::npos) {
            if (start < csv.size()) out.push_back(csv.substr(start));
            break;
        }
        out.push_back(csv.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

int run_report(const std::string& histories_csv, const std::string& evals_csv,
               const std::string& out_path) {
    const auto history_paths = split_list(histories_csv);
    const auto eval_paths = split_list(evals_csv);
    if (history_paths.empty()) throw UsageError("--histories requires at least one file");

    struct Row {
        std::string name;
        int epochs = 0;
        double accuracy = 0, eval_loss = 0;
        std::optional<json> eval;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < history_paths.size(); ++i) {
        if (!std::filesystem::exists(history_paths[i]))
            throw UsageError("history not found: " + history_paths[i]);
        const auto history = train::read_history_csv(history_paths[i]);
        if (history.empty()) throw UsageError("empty history: " + history_paths[i]);
        Row row;
        row.name = std::filesystem::path(history_paths[i]).stem().string();
        row.epochs = history.back().epoch;
        row.accuracy = history.back().accuracy;
        row.eval_loss = history.back().eval_loss;
        if (i < eval_paths.size()) {
            std::ifstream in(eval_paths[i]);
            if (!in) throw UsageError("eval report not found: " + eval_paths[i]);
            row.eval = json::parse(in);
        }
        rows.push_back(std::move(row));
    }

    std::ostringstream table;
    table << "run,epochs,accuracy,precision,recall,f1,test_loss\n";
    char buf[256];
    for (const auto& row : rows) {
        if (row.eval) {
            const auto& e = *row.eval;
            std::snprintf(buf, sizeof buf, "%s,%d,%.4f,%.4f,%.4f,%.4f,%.4f\n", row.name.c_str(),
                          row.epochs, e["accuracy"].get<double>(), e["precision"].get<double>(),
                          e["recall"].get<double>(), e["f1"].get<double>(),
                          e["loss"].get<double>());
        } else {
            std::snprintf(buf, sizeof buf, "%s,%d,%.4f,,,,%.4f\n", row.name.c_str(), row.epochs,
                          row.accuracy, row.eval_loss);
        }
        table << buf;
    }
    for (const auto& ref : kReferenceRows) {
        std::snprintf(buf, sizeof buf, "reference_%s,%d,%.4f,%.4f,%.4f,%.4f,%.4f\n", ref.model,
                      ref.epochs, ref.accuracy, ref.precision, ref.recall, ref.f1, ref.test_loss);
        table << buf;
    }

    std::cout << table.str();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write report: " + out_path);
        out << table.str();
        std::cout << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decoy-state BB84 attack simulator and QLSTM/LSTM intrusion detector"};
    app.require_subcommand(1);
    app.fallthrough();  // --config/--set may appear after the subcommand

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key=value config file with dotted sections");
    app.add_option("--set", overrides, "config override (key=value); wins over --config");

    // generate
    auto* gen = app.add_subcommand("generate", "simulate all scenarios and write the dataset CSV");
    std::uint64_t gen_seed = 0;
    bool gen_seed_set = false;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "master seed (default: QKD_SEED env or 42)")
        ->each([&](const std::string&) { gen_seed_set = true; });
    gen->add_option("--out", gen_out, "output CSV path")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a detector on a generated dataset");
    std::string tr_data, tr_model = "qlstm", tr_ckpt, tr_history;
    int tr_epochs = 50;
    std::uint64_t tr_seed = 0;
    bool tr_seed_set = false;
    double tr_lr = 5e-4, tr_wd = 1e-4, tr_ratio = 0.8, tr_sigma = 0.05;
    int tr_t0 = 50, tr_patience = 5, tr_batch = 64, tr_samples = 0, tr_threads = 0;
    tr->add_option("--data", tr_data, "dataset CSV from `generate`")->required();
    tr->add_option("--model", tr_model, "qlstm (hybrid) or lstm (classical baseline)")
        ->check(CLI::IsMember({"qlstm", "lstm"}));
    tr->add_option("--epochs", tr_epochs, "training epochs (protocol uses 10, 20 or 50)");
    tr->add_option("--seed", tr_seed, "seed for init/split/shuffle (default: QKD_SEED env or 42)")
        ->each([&](const std::string&) { tr_seed_set = true; });
    tr->add_option("--out", tr_ckpt, "checkpoint output path")->required();
    tr->add_option("--history", tr_history, "history CSV path (default: <out>.history.csv)");
    tr->add_option("--lr", tr_lr, "initial learning rate (eta_max)")->capture_default_str();
    tr->add_option("--weight-decay", tr_wd, "AdamW decoupled weight decay")->capture_default_str();
    tr->add_option("--t0", tr_t0, "cosine annealing restart period in epochs")->capture_default_str();
    tr->add_option("--patience", tr_patience, "early stopping patience in epochs")->capture_default_str();
    tr->add_option("--batch-size", tr_batch, "minibatch size")->capture_default_str();
    tr->add_option("--split-ratio", tr_ratio, "train fraction of the stratified split")->capture_default_str();
    tr->add_option("--noise-sigma", tr_sigma, "train-set gaussian noise sigma")->capture_default_str();
    tr->add_option("--train-samples", tr_samples,
                   "stratified train subsample size (0 = use the full split)")->capture_default_str();
    tr->add_option("--threads", tr_threads, "worker threads (0 = hardware)")->capture_default_str();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint and write the report");
    std::string ev_ckpt, ev_data, ev_report, ev_confusion, ev_split = "test";
    int ev_threads = 0;
    ev->add_option("--ckpt", ev_ckpt, "checkpoint from `train`")->required();
    ev->add_option("--data", ev_data, "dataset CSV")->required();
    ev->add_option("--out-report", ev_report, "evaluation report JSON path");
    ev->add_option("--out-confusion", ev_confusion, "confusion matrix CSV path");
    ev->add_option("--split", ev_split, "test (held-out reconstruction) or all")->capture_default_str()
        ->check(CLI::IsMember({"test", "all"}));
    ev->add_option("--threads", ev_threads, "worker threads (0 = hardware)")->capture_default_str();

    // report
    auto* rp = app.add_subcommand("report", "merge training runs into a comparison table");
    std::string rp_histories, rp_evals, rp_out;
    rp->add_option("--histories", rp_histories, "comma-separated history CSV paths")->required();
    rp->add_option("--evals", rp_evals, "comma-separated evaluation JSON paths (same order)");
    rp->add_option("--out", rp_out, "write the comparison table CSV here as well");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            if (!gen_seed_set) gen_seed = default_seed();
            return run_generate(gen_out, gen_seed, config_path, overrides);
        }
        if (tr->parsed()) {
            if (!tr_seed_set) tr_seed = default_seed();
            if (tr_ckpt.empty()) throw UsageError("--out is required");
            return run_train(tr_data, tr_model, tr_epochs, tr_seed, tr_ckpt, tr_history, tr_lr,
                             tr_wd, tr_t0, tr_patience, tr_batch, tr_ratio, tr_sigma, tr_samples,
                             tr_threads, config_path, overrides);
        }
        if (ev->parsed()) {
            if (ev_report.empty()) ev_report = ev_ckpt + ".eval.json";
            if (ev_confusion.empty()) ev_confusion = ev_ckpt + ".confusion.csv";
            return run_evaluate(ev_ckpt, ev_data, ev_report, ev_confusion, ev_split, ev_threads);
        }
        if (rp->parsed()) return run_report(rp_histories, rp_evals, rp_out);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
