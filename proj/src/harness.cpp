#include "xfmr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "xfmr/binio.hpp"
#include "xfmr/metrics.hpp"

namespace fs = std::filesystem;

namespace xfmr {

namespace {

bool approx_eq(double a, double b) {
    return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
}

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

std::string grid_footprint(const GridSpec& spec) {
    // sweep-values identity, independent of technology
    return spec.with_tech("-").describe();
}

}  // namespace

std::string format_density(double d) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", d);
    return buf;
}

void ExperimentPlan::validate() const {
    if (targets.empty()) throw std::invalid_argument("experiment plan has no target grids");
    if (seeds.empty()) throw std::invalid_argument("experiment plan needs at least one seed");
    for (double d : source_densities)
        if (!(d > 0 && d <= 1)) throw std::invalid_argument("source density outside (0,1]");
    for (double d : target_densities)
        if (!(d > 0 && d <= 1)) throw std::invalid_argument("target density outside (0,1]");
    for (double d : matched_densities)
        if (!(d > 0 && d <= 1)) throw std::invalid_argument("matched density outside (0,1]");
    if (!techs.count(source_grid.tech))
        throw ConfigError("unknown technology profile: " + source_grid.tech);
    for (const auto& t : targets)
        if (!techs.count(t.grid.tech))
            throw ConfigError("unknown technology profile: " + t.grid.tech);
    train.validate();
}

ExperimentPlan ExperimentPlan::from_config(const Config& cfg, bool fast) {
    ExperimentPlan plan;
    plan.name = cfg.str("plan.name", plan.name);
    plan.out_dir = cfg.str("plan.out_dir", plan.out_dir);
    if (cfg.has("plan.seeds")) {
        plan.seeds.clear();
        for (double s : cfg.number_list("plan.seeds"))
            plan.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (cfg.has("plan.source_densities")) plan.source_densities = cfg.number_list("plan.source_densities");
    if (cfg.has("plan.target_densities")) plan.target_densities = cfg.number_list("plan.target_densities");
    if (cfg.has("plan.matched_densities")) plan.matched_densities = cfg.number_list("plan.matched_densities");
    plan.matched_grid = cfg.boolean("plan.matched_grid", plan.matched_grid);
    plan.data_reduction = cfg.boolean("plan.data_reduction", plan.data_reduction);
    plan.reduction_factor = cfg.number("plan.reduction_factor", plan.reduction_factor);
    plan.data_seed = static_cast<std::uint64_t>(cfg.integer("plan.data_seed", 12345));
    plan.train = TrainConfig::from_config(cfg, "train");

    plan.techs = load_technologies(cfg);
    if (cfg.has("plan.technologies")) {
        const Config tech_cfg = Config::parse_file(cfg.resolve_path(cfg.str("plan.technologies")));
        for (auto& [name, tech] : load_technologies(tech_cfg)) plan.techs[name] = tech;
    }

    plan.source_grid = GridSpec::from_config(cfg, "source.grid");
    for (const std::string& id : cfg.subsections("target")) {
        TargetPlan t;
        t.id = id;
        t.grid = GridSpec::from_config(cfg, "target." + id + ".grid");
        plan.targets.push_back(std::move(t));
    }

    if (fast) {
        plan.train.epochs = static_cast<int>(cfg.integer("fast.epochs", 50));
        plan.train.hidden = static_cast<std::size_t>(cfg.integer("fast.hidden", 64));
        plan.train.batch_size = static_cast<std::size_t>(
            cfg.integer("fast.batch_size", static_cast<long long>(plan.train.batch_size)));
        if (cfg.has("fast.seeds")) {
            plan.seeds.clear();
            for (double s : cfg.number_list("fast.seeds"))
                plan.seeds.push_back(static_cast<std::uint64_t>(s));
        }
        if (cfg.has("fast.matched_densities"))
            plan.matched_densities = cfg.number_list("fast.matched_densities");
        auto apply_steps = [&](GridSpec& g) {
            if (cfg.has("fast.geom_steps")) {
                auto steps = cfg.number_list("fast.geom_steps");
                if (steps.size() != 3) throw ConfigError("fast.geom_steps needs 3 entries");
                g.d_out.steps = static_cast<int>(steps[0]);
                g.w_p.steps = static_cast<int>(steps[1]);
                g.w_s.steps = static_cast<int>(steps[2]);
            }
            if (cfg.has("fast.cap_steps")) {
                auto steps = cfg.number_list("fast.cap_steps");
                if (steps.size() != 2) throw ConfigError("fast.cap_steps needs 2 entries");
                g.c1.steps = static_cast<int>(steps[0]);
                g.c2.steps = static_cast<int>(steps[1]);
            }
        };
        apply_steps(plan.source_grid);
        for (auto& t : plan.targets) apply_steps(t.grid);
    }
    if (plan.matched_densities.empty()) plan.matched_densities = plan.target_densities;
    plan.validate();
    return plan;
}

std::string cache_dir_for(const ExperimentPlan& plan) {
    if (const char* env = std::getenv("XFMR_CACHE_DIR"); env != nullptr && *env != '\0')
        return env;
    return plan.out_dir + "/cache";
}

// ---------------------------------------------------------------------------
// result tables

void annotate_ri(std::vector<ResultRecord>& records) {
    std::map<std::string, double> baselines;
    auto cell_key = [](const ResultRecord& r) {
        return r.grid + "|" + format_density(r.target_density) + "|" + std::to_string(r.seed);
    };
    for (const auto& r : records)
        if (r.source_density == 0 && r.status == "ok") baselines[cell_key(r)] = r.r2_test;
    for (auto& r : records) {
        r.ri_pct.reset();
        if (r.source_density == 0 || r.status != "ok") continue;
        auto it = baselines.find(cell_key(r));
        if (it == baselines.end()) continue;
        r.ri_pct = relative_improvement(r.r2_test, it->second);
    }
}

std::vector<RiCell> compute_ri_table(const std::vector<ResultRecord>& records) {
    std::vector<ResultRecord> sorted = records;
    annotate_ri(sorted);
    std::map<std::string, RiCell> cells;
    std::vector<std::string> order;
    for (const auto& r : sorted) {
        if (r.source_density == 0 || r.status != "ok") continue;
        const std::string key = r.grid + "|" + format_density(r.target_density) + "|" +
                                format_density(r.source_density) + "|" + (r.matched ? "m" : "-");
        auto [it, fresh] = cells.try_emplace(key);
        RiCell& cell = it->second;
        if (fresh) {
            cell.grid = r.grid;
            cell.target_density = r.target_density;
            cell.source_density = r.source_density;
            cell.matched = r.matched;
            cell.ri_min = std::numeric_limits<double>::infinity();
            cell.ri_max = -std::numeric_limits<double>::infinity();
            order.push_back(key);
        }
        cell.n_seeds += 1;
        if (r.ri_pct) {
            cell.n_defined += 1;
            cell.ri_mean += *r.ri_pct;
            cell.ri_min = std::min(cell.ri_min, *r.ri_pct);
            cell.ri_max = std::max(cell.ri_max, *r.ri_pct);
        }
    }
    std::vector<RiCell> out;
    for (const std::string& key : order) {
        RiCell cell = cells[key];
        if (cell.n_defined > 0) cell.ri_mean /= cell.n_defined;
        out.push_back(cell);
    }
    return out;
}

std::vector<BestRiCell> best_ri(const std::vector<ResultRecord>& records, bool matched) {
    const std::vector<RiCell> table = compute_ri_table(records);
    std::map<std::string, BestRiCell> cells;
    std::vector<std::string> order;
    for (const RiCell& c : table) {
        if (c.matched != matched) continue;
        const std::string key = c.grid + "|" + format_density(c.target_density);
        auto [it, fresh] = cells.try_emplace(key);
        BestRiCell& best = it->second;
        if (fresh) {
            best.grid = c.grid;
            best.target_density = c.target_density;
            best.matched = matched;
            order.push_back(key);
        }
        if (c.n_defined == 0) continue;
        if (!best.defined || c.ri_mean > best.ri) {
            best.defined = true;
            best.ri = c.ri_mean;
            best.winning_source_density = c.source_density;
        }
    }
    std::vector<BestRiCell> out;
    for (const std::string& key : order) out.push_back(cells[key]);
    return out;
}

namespace {

// Seed-mean r2_test for one cell; nullopt when no record matches.
std::optional<double> cell_mean_r2(const std::vector<ResultRecord>& records,
                                   const std::string& grid, double tdens, double sdens,
                                   bool matched) {
    double sum = 0;
    int n = 0;
    for (const auto& r : records) {
        if (r.grid != grid || r.matched != matched || r.status != "ok") continue;
        if (!approx_eq(r.target_density, tdens) || !approx_eq(r.source_density, sdens)) continue;
        sum += r.r2_test;
        n += 1;
    }
    if (n == 0) return std::nullopt;
    return sum / n;
}

std::optional<double> best_transfer_r2(const std::vector<ResultRecord>& records,
                                       const std::string& grid, double tdens) {
    std::map<double, std::pair<double, int>> by_source;
    for (const auto& r : records) {
        if (r.grid != grid || r.matched || r.status != "ok") continue;
        if (!approx_eq(r.target_density, tdens) || r.source_density == 0) continue;
        auto& [sum, n] = by_source[r.source_density];
        sum += r.r2_test;
        n += 1;
    }
    std::optional<double> best;
    for (const auto& [sd, acc] : by_source) {
        const double mean = acc.first / acc.second;
        if (!best || mean > *best) best = mean;
    }
    return best;
}

}  // namespace

std::vector<ReductionRow> data_reduction_check(const std::vector<ResultRecord>& records,
                                               double density, double factor) {
    std::vector<std::string> grids;
    for (const auto& r : records)
        if (std::find(grids.begin(), grids.end(), r.grid) == grids.end()) grids.push_back(r.grid);
    std::sort(grids.begin(), grids.end());

    // the analogous one-step comparison pairs the next-smaller plan density
    // with `density` itself (1% transfer vs 5% baseline under defaults)
    std::vector<ReductionRow> out;
    for (const std::string& g : grids) {
        ReductionRow row;
        row.grid = g;
        const auto t5 = best_transfer_r2(records, g, density);
        const auto b20 = cell_mean_r2(records, g, density * factor, 0.0, false);
        if (t5 && b20) {
            row.transfer_r2 = *t5;
            row.baseline_r2 = *b20;
            row.pass = *t5 >= *b20;
        }
        const auto t1 = best_transfer_r2(records, g, density / 5.0);
        const auto b5 = cell_mean_r2(records, g, density, 0.0, false);
        if (t1 && b5) {
            row.transfer_r2_small = *t1;
            row.baseline_r2_small = *b5;
            row.pass_small = *t1 >= *b5;
        }
        out.push_back(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// results.csv

void write_results_csv(const std::vector<ResultRecord>& records, const std::string& path) {
    std::vector<ResultRecord> sorted = records;
    std::sort(sorted.begin(), sorted.end(), [](const ResultRecord& a, const ResultRecord& b) {
        if (a.grid != b.grid) return a.grid < b.grid;
        if (a.target_density != b.target_density) return a.target_density < b.target_density;
        if (a.source_density != b.source_density) return a.source_density < b.source_density;
        if (a.seed != b.seed) return a.seed < b.seed;
        return a.matched < b.matched;
    });
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open results file: " + path);
    out << "grid,target_density,source_density,seed,matched,r2_val,r2_test,ri_pct\n";
    char buf[64];
    for (const auto& r : sorted) {
        out << r.grid << ',' << format_density(r.target_density) << ','
            << format_density(r.source_density) << ',' << r.seed << ',' << (r.matched ? 1 : 0)
            << ',';
        if (r.status == "ok") {
            std::snprintf(buf, sizeof(buf), "%.12g,%.12g", r.r2_val, r.r2_test);
            out << buf;
        } else {
            out << ',';
        }
        out << ',';
        if (r.ri_pct) {
            std::snprintf(buf, sizeof(buf), "%.12g", *r.ri_pct);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("results write failed: " + path);
}

std::vector<ResultRecord> read_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty results file: " + path);
    std::vector<ResultRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::string item;
        std::istringstream ls(line);
        while (std::getline(ls, item, ',')) f.push_back(item);
        while (f.size() < 8) f.push_back("");
        ResultRecord r;
        r.grid = f[0];
        r.target_density = std::strtod(f[1].c_str(), nullptr);
        r.source_density = std::strtod(f[2].c_str(), nullptr);
        r.seed = static_cast<std::uint64_t>(std::strtoull(f[3].c_str(), nullptr, 10));
        r.matched = f[4] == "1";
        if (f[5].empty()) {
            r.status = "failed";
            r.r2_val = r.r2_test = nan_value();
        } else {
            r.r2_val = std::strtod(f[5].c_str(), nullptr);
            r.r2_test = std::strtod(f[6].c_str(), nullptr);
        }
        if (!f[7].empty()) r.ri_pct = std::strtod(f[7].c_str(), nullptr);
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// experiment execution

namespace {

struct RunOutcome {
    double r2_val = 0, r2_test = 0;
    std::string status = "ok";
};

class ResultsLog {
public:
    explicit ResultsLog(const std::string& path) : out_(path, std::ios::app) {}
    void append(const std::string& line) {
        std::lock_guard<std::mutex> lock(mu_);
        out_ << line << "\n";
        out_.flush();
    }

private:
    std::ofstream out_;
    std::mutex mu_;
};

std::string hash_hex(const std::string& s) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(s)));
    return buf;
}

// Builds (or loads from cache) a full grid dataset with its 6:2:2 split.
GridDataset dataset_for(const GridSpec& spec, const TechnologyProfile& tech,
                        std::uint64_t data_seed, const std::string& cache_dir) {
    const std::string key =
        hash_hex("grid|" + spec.describe() + "|split" + std::to_string(data_seed));
    const std::string path = cache_dir + "/" + key + ".xgrd";
    if (fs::exists(path)) {
        try {
            return load_dataset(path);
        } catch (const FileFormatError&) {
            fs::remove(path);  // stale or corrupt cache entry; regenerate
        }
    }
    GridDataset ds = generate_grid(spec, tech);
    assign_split(ds, data_seed);
    save_dataset(ds, path);
    return ds;
}

std::string run_id(const GridDataset& ds, const TrainConfig& cfg, const std::string& init_tag) {
    return "run|" + ds.spec.describe() + "|split" + std::to_string(ds.split_seed) + "|sub" +
           std::to_string(ds.subsample_seed) + "|dens" + format_density(ds.density) + "|" +
           cfg.fingerprint() + "|init:" + init_tag;
}

struct CachedRun {
    RunOutcome outcome;
    bool checkpoint_available = false;
};

// Executes one training run with record-level caching. When `want_checkpoint`
// the model file is kept in the cache (source models feed later transfers).
RunOutcome run_cached(const GridDataset& ds, const TrainConfig& cfg,
                      const SynthesisModel<float>* init, const std::string& init_tag,
                      const std::string& cache_dir, const std::string& history_path,
                      bool want_checkpoint, std::string* checkpoint_path,
                      std::map<std::string, std::string> provenance) {
    const std::string key = hash_hex(run_id(ds, cfg, init_tag));
    const std::string rec_path = cache_dir + "/" + key + ".rec";
    const std::string hist_path = cache_dir + "/" + key + ".hist.csv";
    const std::string ckpt_path = cache_dir + "/" + key + ".xckp";
    if (checkpoint_path != nullptr) *checkpoint_path = ckpt_path;

    RunOutcome out;
    const bool ckpt_ok = !want_checkpoint || fs::exists(ckpt_path);
    if (fs::exists(rec_path) && fs::exists(hist_path) && ckpt_ok) {
        try {
            const Config rec = Config::parse_file(rec_path);
            out.r2_val = rec.number("r2_val");
            out.r2_test = rec.number("r2_test");
            out.status = rec.str("status");
            if (!history_path.empty()) fs::copy_file(hist_path, history_path,
                                                     fs::copy_options::overwrite_existing);
            return out;
        } catch (const std::exception&) {
            // unreadable cache entry falls through to retraining
        }
    }

    TrainResult res = train(ds, cfg, init, std::move(provenance));
    out.r2_val = evaluate(res.model, ds, "val").mean;
    out.r2_test = evaluate(res.model, ds, "test").mean;
    write_history_csv(res.history, hist_path);
    if (!history_path.empty()) fs::copy_file(hist_path, history_path,
                                             fs::copy_options::overwrite_existing);
    if (want_checkpoint) save_checkpoint(res.model, res.provenance, ckpt_path);
    {
        std::ofstream rec(rec_path);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "r2_val = %.17g\nr2_test = %.17g\n", out.r2_val,
                      out.r2_test);
        rec << buf << "status = ok\n";
    }
    return out;
}

void run_pool(int workers, const std::vector<std::function<void()>>& tasks) {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            tasks[i]();
        }
    };
    if (workers <= 1) {
        work();
        return;
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
}

std::string history_name(const std::string& grid, double tdens, double sdens, bool matched,
                         std::uint64_t seed) {
    std::string s = grid + "_t" + format_density(tdens) + "_s" +
                    (sdens == 0 ? std::string("base") : format_density(sdens)) +
                    (matched ? "_m" : "") + "_seed" + std::to_string(seed) + ".csv";
    return s;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan) {
    plan.validate();
    const std::string cache = cache_dir_for(plan);
    fs::create_directories(plan.out_dir);
    fs::create_directories(plan.out_dir + "/history");
    fs::create_directories(cache);
    ResultsLog log(plan.out_dir + "/records.log");

    ExperimentResult result;
    const TechnologyProfile& src_tech = plan.techs.at(plan.source_grid.tech);

    // --- source stage -------------------------------------------------------
    const GridDataset source_full = dataset_for(plan.source_grid, src_tech, plan.data_seed, cache);

    struct SourceModel {
        double density;
        SynthesisModel<float> model;
    };
    std::vector<SourceModel> source_models;
    for (double dens : plan.source_densities) {
        GridDataset ds = source_full;
        subsample_train(ds, dens, plan.data_seed);
        compute_norm_stats(ds);
        TrainConfig cfg = plan.train;
        cfg.threads = 1;
        std::string ckpt;
        RunOutcome out = run_cached(
            ds, cfg, nullptr, "none", cache,
            plan.out_dir + "/history/source_d" + format_density(dens) + ".csv", true, &ckpt,
            {{"role", "source"}, {"source_density", format_density(dens)}});
        auto [model, meta] = load_checkpoint(ckpt);
        source_models.push_back({dens, std::move(model)});
        SourceModelInfo info;
        info.density = dens;
        info.checkpoint_path = ckpt;
        info.r2_val = out.r2_val;
        info.r2_test = out.r2_test;
        result.source_models.push_back(info);
        log.append("source density=" + format_density(dens) + " r2_test=" +
                   std::to_string(out.r2_test));
    }

    // --- matched-grid source models (one set per distinct target footprint) --
    std::map<std::string, std::vector<SourceModel>> matched_models;
    if (plan.matched_grid) {
        for (const auto& target : plan.targets) {
            const std::string fp = grid_footprint(target.grid);
            if (matched_models.count(fp)) continue;
            const GridSpec matched_spec = target.grid.with_tech(plan.source_grid.tech);
            const GridDataset matched_full =
                dataset_for(matched_spec, src_tech, plan.data_seed, cache);
            auto& models = matched_models[fp];
            for (double dens : plan.source_densities) {
                GridDataset ds = matched_full;
                subsample_train(ds, dens, plan.data_seed);
                compute_norm_stats(ds);
                TrainConfig cfg = plan.train;
                cfg.threads = 1;
                std::string ckpt;
                RunOutcome out = run_cached(
                    ds, cfg, nullptr, "none", cache,
                    plan.out_dir + "/history/matched_source_" + hash_hex(fp).substr(0, 6) + "_d" +
                        format_density(dens) + ".csv",
                    true, &ckpt,
                    {{"role", "matched_source"}, {"source_density", format_density(dens)}});
                auto [model, meta] = load_checkpoint(ckpt);
                models.push_back({dens, std::move(model)});
                SourceModelInfo info;
                info.density = dens;
                info.matched = true;
                info.footprint = fp;
                info.checkpoint_path = ckpt;
                info.r2_val = out.r2_val;
                info.r2_test = out.r2_test;
                result.source_models.push_back(info);
                log.append("matched-source density=" + format_density(dens) + " r2_test=" +
                           std::to_string(out.r2_test));
            }
        }
    }

    // --- target stage -------------------------------------------------------
    std::vector<double> all_target_densities = plan.target_densities;
    if (plan.data_reduction) {
        // the data-reduction comparison needs a non-transfer cell at
        // reduction_factor times the 5% density
        const double extra = 0.05 * plan.reduction_factor;
        bool present = false;
        for (double d : all_target_densities) present = present || approx_eq(d, extra);
        if (!present && extra <= 1.0) all_target_densities.push_back(extra);
    }

    struct Task {
        std::size_t record_index;
        const GridDataset* ds;
        const SynthesisModel<float>* init;
        std::string init_tag;
        std::string history_path;
        std::map<std::string, std::string> provenance;
    };

    for (const auto& target : plan.targets) {
        const TechnologyProfile& tech = plan.techs.at(target.grid.tech);
        const GridDataset target_full = dataset_for(target.grid, tech, plan.data_seed, cache);
        const std::string fp = grid_footprint(target.grid);

        for (double tdens : all_target_densities) {
            const bool extra_only = std::none_of(
                plan.target_densities.begin(), plan.target_densities.end(),
                [&](double d) { return approx_eq(d, tdens); });
            const bool matched_here =
                plan.matched_grid && !extra_only &&
                std::any_of(plan.matched_densities.begin(), plan.matched_densities.end(),
                            [&](double d) { return approx_eq(d, tdens); });

            GridDataset ds = target_full;
            subsample_train(ds, tdens, plan.data_seed);
            compute_norm_stats(ds);

            std::vector<ResultRecord> cell_records;
            std::vector<Task> tasks;
            auto add_task = [&](double sdens, bool matched, const SynthesisModel<float>* init,
                                const std::string& init_tag, std::uint64_t seed) {
                ResultRecord rec;
                rec.grid = target.id;
                rec.target_density = tdens;
                rec.source_density = sdens;
                rec.seed = seed;
                rec.matched = matched;
                rec.history_file =
                    "history/" + history_name(target.id, tdens, sdens, matched, seed);
                Task task;
                task.record_index = cell_records.size();
                task.ds = &ds;
                task.init = init;
                task.init_tag = init_tag;
                task.history_path = plan.out_dir + "/" + rec.history_file;
                task.provenance = {{"role", sdens == 0 ? "baseline" : "transfer"},
                                   {"target", target.id},
                                   {"target_density", format_density(tdens)},
                                   {"source_density", format_density(sdens)},
                                   {"matched", matched ? "1" : "0"}};
                cell_records.push_back(rec);
                tasks.push_back(std::move(task));
            };

            for (std::uint64_t seed : plan.seeds) {
                add_task(0.0, false, nullptr, "none", seed);
                if (!extra_only) {
                    for (const auto& sm : source_models)
                        add_task(sm.density, false, &sm.model,
                                 "src_d" + format_density(sm.density), seed);
                    if (matched_here)
                        for (const auto& sm : matched_models.at(fp))
                            add_task(sm.density, true, &sm.model,
                                     "msrc_" + hash_hex(fp).substr(0, 6) + "_d" +
                                         format_density(sm.density),
                                     seed);
                }
            }

            std::vector<std::function<void()>> jobs;
            for (const Task& task : tasks) {
                jobs.emplace_back([&plan, &cell_records, &log, task, cache] {
                    ResultRecord& rec = cell_records[task.record_index];
                    TrainConfig cfg = plan.train;
                    cfg.seed = rec.seed;
                    cfg.threads = plan.workers > 1 ? 1 : plan.train.threads;
                    try {
                        RunOutcome out =
                            run_cached(*task.ds, cfg, task.init, task.init_tag, cache,
                                       task.history_path, false, nullptr, task.provenance);
                        rec.r2_val = out.r2_val;
                        rec.r2_test = out.r2_test;
                        rec.status = out.status;
                    } catch (const std::exception& e) {
                        rec.status = std::string("failed: ") + e.what();
                        rec.r2_val = rec.r2_test = nan_value();
                    }
                    log.append("record grid=" + rec.grid +
                               " tdens=" + format_density(rec.target_density) +
                               " sdens=" + format_density(rec.source_density) + " seed=" +
                               std::to_string(rec.seed) + (rec.matched ? " matched" : "") +
                               " status=" + rec.status +
                               " r2_test=" + std::to_string(rec.r2_test) + " history=" +
                               rec.history_file);
                });
            }
            run_pool(plan.workers, jobs);
            result.records.insert(result.records.end(), cell_records.begin(),
                                  cell_records.end());
        }
    }

    annotate_ri(result.records);

    // --- outputs -------------------------------------------------------------
    result.results_csv_path = plan.out_dir + "/results.csv";
    write_results_csv(result.records, result.results_csv_path);

    {
        std::ofstream out(plan.out_dir + "/source_models.csv");
        out << "matched,density,r2_val,r2_test,checkpoint\n";
        char buf[64];
        for (const auto& s : result.source_models) {
            std::snprintf(buf, sizeof(buf), "%d,%s,%.12g,%.12g,", s.matched ? 1 : 0,
                          format_density(s.density).c_str(), s.r2_val, s.r2_test);
            out << buf << s.checkpoint_path << "\n";
        }
    }
    {
        std::ofstream out(plan.out_dir + "/ri_table.csv");
        out << "grid,target_density,source_density,matched,ri_mean,ri_min,ri_max,n_defined,n_seeds\n";
        char buf[128];
        for (const RiCell& c : compute_ri_table(result.records)) {
            if (c.n_defined > 0)
                std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%.12g,%.12g,%.12g,%d,%d",
                              c.grid.c_str(), format_density(c.target_density).c_str(),
                              format_density(c.source_density).c_str(), c.matched ? 1 : 0,
                              c.ri_mean, c.ri_min, c.ri_max, c.n_defined, c.n_seeds);
            else
                std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,,,,%d,%d", c.grid.c_str(),
                              format_density(c.target_density).c_str(),
                              format_density(c.source_density).c_str(), c.matched ? 1 : 0,
                              c.n_defined, c.n_seeds);
            out << buf << "\n";
        }
    }
    {
        std::ofstream out(plan.out_dir + "/best_ri.csv");
        out << "grid,target_density,matched,best_ri,winning_source_density\n";
        char buf[128];
        for (bool matched : {false, true}) {
            for (const BestRiCell& c : best_ri(result.records, matched)) {
                if (!c.defined)
                    std::snprintf(buf, sizeof(buf), "%s,%s,%d,,", c.grid.c_str(),
                                  format_density(c.target_density).c_str(), matched ? 1 : 0);
                else
                    std::snprintf(buf, sizeof(buf), "%s,%s,%d,%.12g,%s", c.grid.c_str(),
                                  format_density(c.target_density).c_str(), matched ? 1 : 0,
                                  c.ri, format_density(c.winning_source_density).c_str());
                out << buf << "\n";
            }
        }
    }
    if (plan.data_reduction) {
        std::ofstream out(plan.out_dir + "/data_reduction.csv");
        out << "grid,transfer_r2_5pct,baseline_r2_20pct,pass_4x,transfer_r2_1pct,"
               "baseline_r2_5pct,pass_5x\n";
        char buf[160];
        for (const ReductionRow& row :
             data_reduction_check(result.records, 0.05, plan.reduction_factor)) {
            std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g,%d,%.12g,%.12g,%d",
                          row.grid.c_str(), row.transfer_r2, row.baseline_r2, row.pass ? 1 : 0,
                          row.transfer_r2_small, row.baseline_r2_small, row.pass_small ? 1 : 0);
            out << buf << "\n";
        }
    }
    return result;
}

}  // namespace xfmr
