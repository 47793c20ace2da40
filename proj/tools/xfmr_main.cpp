// xfmr: transformer matching-network synthesis workbench CLI.
//
// Subcommands: gen-data, train, transfer, eval, experiment, report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "xfmr/config.hpp"
#include "xfmr/dataset.hpp"
#include "xfmr/harness.hpp"
#include "xfmr/report.hpp"
#include "xfmr/surrogate.hpp"
#include "xfmr/train.hpp"

namespace fs = std::filesystem;
using namespace xfmr;

namespace {

Config load_config_with_technologies(const std::string& path) {
    Config cfg = Config::parse_file(path);
    if (cfg.has("technologies")) {
        const Config tech = Config::parse_file(cfg.resolve_path(cfg.str("technologies")));
        for (const std::string& key : tech.all_keys()) cfg.set(key, tech.raw(key));
    }
    if (cfg.has("plan.technologies")) {
        const Config tech = Config::parse_file(cfg.resolve_path(cfg.str("plan.technologies")));
        for (const std::string& key : tech.all_keys()) cfg.set(key, tech.raw(key));
    }
    return cfg;
}

TrainConfig train_config_from(const Config& cfg, bool fast, std::optional<std::uint64_t> seed) {
    TrainConfig tc = TrainConfig::from_config(cfg, "train");
    if (fast) {
        tc.epochs = static_cast<int>(cfg.integer("fast.epochs", 50));
        tc.hidden = static_cast<std::size_t>(cfg.integer("fast.hidden", 64));
        tc.batch_size = static_cast<std::size_t>(
            cfg.integer("fast.batch_size", static_cast<long long>(tc.batch_size)));
    }
    if (seed) tc.seed = *seed;
    return tc;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_path,
                 std::uint64_t seed, std::optional<double> density, bool export_csv_flag) {
    const Config cfg = load_config_with_technologies(config_path);
    const GridSpec spec = GridSpec::from_config(cfg, "grid");
    const TechnologyProfile tech = find_technology(cfg, spec.tech);

    GridDataset ds = generate_grid(spec, tech);
    assign_split(ds, seed);
    if (density) subsample_train(ds, *density, seed);
    compute_norm_stats(ds);
    save_dataset(ds, out_path);

    std::printf("grid %s\n", spec.describe().c_str());
    std::printf("points %llu (train %zu, val %zu, test %zu)\n",
                static_cast<unsigned long long>(ds.rows()), ds.split->train.size(),
                ds.split->val.size(), ds.split->test.size());
    for (int c = 0; c < kNumCols; ++c)
        std::printf("col %-7s mean %13.6g std %13.6g\n", kColumnNames[c], ds.norm->mean[c],
                    ds.norm->stddev[c]);
    std::printf("wrote %s\n", out_path.c_str());
    if (export_csv_flag) {
        const std::string csv = out_path + ".csv";
        export_csv(ds, csv);
        std::printf("wrote %s\n", csv.c_str());
    }
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_path, const std::string& init_from,
              std::optional<std::uint64_t> seed, std::optional<double> density, bool fast,
              int threads) {
    const Config cfg = Config::parse_file(config_path);
    TrainConfig tc = train_config_from(cfg, fast, seed);
    tc.threads = threads;

    GridDataset ds = load_dataset(data_path);
    if (!ds.split) assign_split(ds, tc.seed);
    if (density) {
        subsample_train(ds, *density, ds.split_seed);
        compute_norm_stats(ds);
    }
    if (!ds.norm) compute_norm_stats(ds);

    std::optional<SynthesisModel<float>> init;
    std::map<std::string, std::string> provenance{{"data", data_path}};
    if (!init_from.empty()) {
        auto [model, meta] = load_checkpoint(init_from);
        init = std::move(model);
        provenance["init_from"] = init_from;
    }
    TrainResult res = train(ds, tc, init ? &*init : nullptr, provenance);
    for (const std::string& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

    save_checkpoint(res.model, res.provenance, out_path);
    const std::string hist = out_path + ".history.csv";
    write_history_csv(res.history, hist);
    if (!res.history.empty())
        std::printf("final epoch %d: train_loss %.6g val_r2 %.6g\n", res.history.back().epoch,
                    res.history.back().train_loss, res.history.back().val_r2);
    std::printf("wrote %s\nwrote %s\n", out_path.c_str(), hist.c_str());
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& split) {
    auto [model, meta] = load_checkpoint(model_path);
    const GridDataset ds = load_dataset(data_path);
    const R2Report rep = evaluate(model, ds, split);
    std::fputs(rep.to_text().c_str(), stdout);
    return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& out_override, bool fast,
                   int workers) {
    const Config cfg = Config::parse_file(config_path);
    ExperimentPlan plan = ExperimentPlan::from_config(cfg, fast);
    if (!out_override.empty()) plan.out_dir = out_override;
    plan.workers = workers;

    const ExperimentResult res = run_experiment(plan);
    std::size_t ok = 0, failed = 0;
    for (const auto& r : res.records) (r.status == "ok" ? ok : failed) += 1;
    std::printf("experiment '%s': %zu records (%zu ok, %zu failed), %zu source models\n",
                plan.name.c_str(), res.records.size(), ok, failed, res.source_models.size());
    for (const auto& s : res.source_models)
        std::printf("source%s density %s: val_r2 %.4f test_r2 %.4f\n",
                    s.matched ? " (matched)" : "", format_density(s.density).c_str(), s.r2_val,
                    s.r2_test);
    std::printf("results: %s\n", res.results_csv_path.c_str());
    return 0;
}

int cmd_report(const std::string& results_path, const std::string& out_dir) {
    generate_report(results_path, out_dir);
    std::printf("report written to %s\n", out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transformer matching-network synthesis workbench"};
    app.require_subcommand(1);

    std::string config_path, out_path, data_path, model_path, init_from, results_path;
    std::string split = "test";
    std::uint64_t seed = 12345;
    std::optional<std::uint64_t> seed_opt;
    std::optional<double> density;
    bool fast = false, export_csv_flag = false;
    int workers = 1;

    auto* gen = app.add_subcommand("gen-data", "generate a grid dataset");
    gen->add_option("--config", config_path, "grid config file")->required();
    gen->add_option("--out", out_path, "output dataset path")->required();
    gen->add_option("--seed", seed, "split seed");
    double density_val = 0;
    auto* gen_density = gen->add_option("--density", density_val, "train-split density (0,1]");
    gen->add_flag("--export-csv", export_csv_flag, "also write a CSV twin");

    auto* train_cmd = app.add_subcommand("train", "train a synthesis model");
    std::uint64_t seed_val = 0;
    train_cmd->add_option("--config", config_path, "train config file")->required();
    train_cmd->add_option("--data", data_path, "dataset path")->required();
    train_cmd->add_option("--out", out_path, "output checkpoint path")->required();
    train_cmd->add_option("--init-from", init_from, "checkpoint to fine-tune from");
    auto* train_seed = train_cmd->add_option("--seed", seed_val, "training seed");
    auto* train_density = train_cmd->add_option("--density", density_val, "train-split density");
    train_cmd->add_flag("--fast", fast, "fast profile (fewer epochs, narrow net)");
    train_cmd->add_option("--workers", workers, "math threads");

    auto* transfer_cmd = app.add_subcommand("transfer", "fine-tune from a source checkpoint");
    transfer_cmd->add_option("--config", config_path, "train config file")->required();
    transfer_cmd->add_option("--data", data_path, "dataset path")->required();
    transfer_cmd->add_option("--out", out_path, "output checkpoint path")->required();
    transfer_cmd->add_option("--init-from", init_from, "source checkpoint")->required();
    auto* transfer_seed = transfer_cmd->add_option("--seed", seed_val, "training seed");
    auto* transfer_density =
        transfer_cmd->add_option("--density", density_val, "train-split density");
    transfer_cmd->add_flag("--fast", fast, "fast profile");
    transfer_cmd->add_option("--workers", workers, "math threads");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    eval_cmd->add_option("--model", model_path, "checkpoint path")->required();
    eval_cmd->add_option("--data", data_path, "dataset path")->required();
    eval_cmd->add_option("--split", split, "train|val|test");

    auto* exp_cmd = app.add_subcommand("experiment", "run the full experiment matrix");
    exp_cmd->add_option("--config", config_path, "experiment plan config")->required();
    exp_cmd->add_option("--out", out_path, "override plan output directory");
    exp_cmd->add_flag("--fast", fast, "CI profile: small grids, few epochs");
    exp_cmd->add_option("--workers", workers, "parallel training runs");

    auto* report_cmd = app.add_subcommand("report", "emit figure analogs from results.csv");
    report_cmd->add_option("--results", results_path, "results.csv path")->required();
    report_cmd->add_option("--out", out_path, "report output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (*gen_density) density = density_val;
            return cmd_gen_data(config_path, out_path, seed, density, export_csv_flag);
        }
        if (train_cmd->parsed()) {
            if (*train_seed) seed_opt = seed_val;
            if (*train_density) density = density_val;
            return cmd_train(config_path, data_path, out_path, init_from, seed_opt, density,
                             fast, workers);
        }
        if (transfer_cmd->parsed()) {
            if (*transfer_seed) seed_opt = seed_val;
            if (*transfer_density) density = density_val;
            return cmd_train(config_path, data_path, out_path, init_from, seed_opt, density,
                             fast, workers);
        }
        if (eval_cmd->parsed()) return cmd_eval(model_path, data_path, split);
        if (exp_cmd->parsed()) return cmd_experiment(config_path, out_path, fast, workers);
        if (report_cmd->parsed()) return cmd_report(results_path, out_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
