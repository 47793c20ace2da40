#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xfmr/config.hpp"
#include "xfmr/dataset.hpp"
#include "xfmr/surrogate.hpp"
#include "xfmr/train.hpp"

namespace xfmr {

struct TargetPlan {
    std::string id;
    GridSpec grid;
};

/// Full experiment matrix: source models at several densities, transfer vs
/// non-transfer target training across grids, densities and seeds, plus the
/// matched-grid variant and the data-reduction comparison cells.
struct ExperimentPlan {
    std::string name = "experiment";
    GridSpec source_grid;
    std::vector<TargetPlan> targets;
    std::vector<double> source_densities{0.25, 0.5, 0.75, 1.0};
    std::vector<double> target_densities{0.005, 0.01, 0.05, 1.0};
    std::vector<double> matched_densities;  // empty = same as target_densities
    std::vector<std::uint64_t> seeds{0, 1, 2};
    bool matched_grid = true;
    bool data_reduction = true;
    double reduction_factor = 4.0;
    TrainConfig train;
    std::uint64_t data_seed = 12345;
    std::string out_dir = "runs/out";
    int workers = 1;
    std::map<std::string, TechnologyProfile> techs;

    void validate() const;
    /// Reads [plan], [train], [source.grid] and [target.<id>.grid] sections;
    /// with `fast` the [fast] overrides (epochs, hidden, batch, grid step
    /// counts) are applied on top.
    static ExperimentPlan from_config(const Config& cfg, bool fast);
};

/// One completed (or failed) training run of the target stage.
/// source_density 0 marks the non-transfer baseline.
struct ResultRecord {
    std::string grid;
    double target_density = 1.0;
    double source_density = 0.0;
    std::uint64_t seed = 0;
    bool matched = false;
    double r2_val = 0, r2_test = 0;
    std::optional<double> ri_pct;  // vs the same-cell baseline; baselines have none
    std::string status = "ok";
    std::string history_file;
};

struct SourceModelInfo {
    double density = 0;
    bool matched = false;
    std::string footprint;  // sweep-values identity for matched models
    std::string checkpoint_path;
    double r2_val = 0, r2_test = 0;
};

struct RiCell {
    std::string grid;
    double target_density = 0, source_density = 0;
    bool matched = false;
    double ri_mean = 0, ri_min = 0, ri_max = 0;
    int n_defined = 0, n_seeds = 0;
};

struct BestRiCell {
    std::string grid;
    double target_density = 0;
    bool matched = false;
    bool defined = false;
    double ri = 0;
    double winning_source_density = 0;
};

struct ReductionRow {
    std::string grid;
    // transfer at the sparse density vs baseline at factor-times the density
    double transfer_r2 = 0, baseline_r2 = 0;
    bool pass = false;
    // the analogous one-step comparison (1% transfer vs 5% baseline by default)
    double transfer_r2_small = 0, baseline_r2_small = 0;
    bool pass_small = false;
};

struct ExperimentResult {
    std::vector<ResultRecord> records;
    std::vector<SourceModelInfo> source_models;
    std::string results_csv_path;
};

/// Per-cell relative improvement vs the matching baseline (same grid, target
/// density and seed), aggregated over seeds. Cells whose baseline R^2 is not
/// positive contribute no defined RI.
std::vector<RiCell> compute_ri_table(const std::vector<ResultRecord>& records);

/// Per (grid, target density): maximum seed-mean RI over source densities,
/// with the winning source density.
std::vector<BestRiCell> best_ri(const std::vector<ResultRecord>& records,
                                bool matched = false);

/// Whether best-transfer R^2_test at density d matches or beats the
/// non-transfer baseline at factor*d (seed-averaged), per grid.
std::vector<ReductionRow> data_reduction_check(const std::vector<ResultRecord>& records,
                                               double density = 0.05, double factor = 4.0);

/// Fills ri_pct on every transfer record from its same-cell baseline.
void annotate_ri(std::vector<ResultRecord>& records);

/// Runs the whole plan: datasets (cached), source stage, matched sources,
/// target stage, tables and results.csv under plan.out_dir. Independent runs
/// execute on `plan.workers` threads; results are identical for any count.
ExperimentResult run_experiment(const ExperimentPlan& plan);

/// Cache directory: $XFMR_CACHE_DIR if set, else <out_dir>/cache.
std::string cache_dir_for(const ExperimentPlan& plan);

void write_results_csv(const std::vector<ResultRecord>& records, const std::string& path);
std::vector<ResultRecord> read_results_csv(const std::string& path);

std::string format_density(double d);

}  // namespace xfmr
