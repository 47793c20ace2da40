#include "xfmr/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "xfmr/harness.hpp"
#include "xfmr/svg.hpp"

namespace fs = std::filesystem;

namespace xfmr {

namespace {

struct HistoryRow {
    int epoch;
    double val_r2;
};

std::vector<HistoryRow> read_history(const std::string& path) {
    std::vector<HistoryRow> rows;
    std::ifstream in(path);
    if (!in) return rows;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        HistoryRow r;
        double lr, loss;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &r.epoch, &lr, &loss, &r.val_r2) == 4)
            rows.push_back(r);
    }
    return rows;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string fmtv(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string history_file_name(const std::string& grid, double tdens, double sdens, bool matched,
                              std::uint64_t seed) {
    return grid + "_t" + format_density(tdens) + "_s" +
           (sdens == 0 ? std::string("base") : format_density(sdens)) + (matched ? "_m" : "") +
           "_seed" + std::to_string(seed) + ".csv";
}

}  // namespace

void generate_report(const std::string& results_csv, const std::string& out_dir) {
    std::vector<ResultRecord> records = read_results_csv(results_csv);
    if (records.empty()) throw std::runtime_error("no records in " + results_csv);
    fs::create_directories(out_dir);
    const std::string history_dir = fs::path(results_csv).parent_path() / "history";

    std::vector<std::string> grids;
    std::set<double> tdens_set, sdens_set;
    std::uint64_t min_seed = std::numeric_limits<std::uint64_t>::max();
    for (const auto& r : records) {
        if (std::find(grids.begin(), grids.end(), r.grid) == grids.end()) grids.push_back(r.grid);
        tdens_set.insert(r.target_density);
        if (r.source_density > 0) sdens_set.insert(r.source_density);
        min_seed = std::min(min_seed, r.seed);
    }
    std::sort(grids.begin(), grids.end());
    const std::vector<double> tdens(tdens_set.begin(), tdens_set.end());
    const std::vector<double> sdens(sdens_set.begin(), sdens_set.end());

    auto seed_mean = [&](const std::string& grid, double td, double sd,
                         bool matched) -> double {
        double sum = 0;
        int n = 0;
        for (const auto& r : records) {
            if (r.grid != grid || r.matched != matched || r.status != "ok") continue;
            if (std::fabs(r.target_density - td) > 1e-12 ||
                std::fabs(r.source_density - sd) > 1e-12)
                continue;
            if (!std::isfinite(r.r2_test)) continue;
            sum += r.r2_test;
            n += 1;
        }
        return n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN();
    };

    // ---- 1. training dynamics (per-grid panels at the sparsest density) ----
    {
        const double focus = tdens.empty() ? 0.01 : tdens[std::min<std::size_t>(1, tdens.size() - 1)];
        std::vector<ChartPanel> panels;
        std::ostringstream csv;
        csv << "grid,source_density,epoch,val_r2\n";
        for (const std::string& g : grids) {
            ChartPanel panel;
            panel.title = g + " @ density " + format_density(focus);
            panel.x_label = "epoch";
            panel.y_label = "validation R^2";
            std::vector<double> sources{0.0};
            sources.insert(sources.end(), sdens.begin(), sdens.end());
            for (double sd : sources) {
                const std::string file =
                    history_dir + "/" + history_file_name(g, focus, sd, false, min_seed);
                const auto rows = read_history(file);
                if (rows.empty()) continue;
                Series s;
                s.label = sd == 0 ? "no transfer" : "src " + format_density(sd);
                s.dashed = sd == 0;
                for (const auto& row : rows) {
                    s.points.emplace_back(row.epoch, row.val_r2);
                    csv << g << ',' << format_density(sd) << ',' << row.epoch << ','
                        << fmtv(row.val_r2) << '\n';
                }
                panel.series.push_back(std::move(s));
            }
            panels.push_back(std::move(panel));
        }
        write_file(out_dir + "/training_dynamics.svg",
                   render_chart_svg(panels, 2, "Training dynamics by source density"));
        write_file(out_dir + "/training_dynamics.csv", csv.str());
    }

    // ---- 2. RI vs target density, one line per source density --------------
    {
        const auto table = compute_ri_table(records);
        std::vector<ChartPanel> panels;
        std::ostringstream csv;
        csv << "grid,target_density,source_density,ri_mean,ri_min,ri_max,n_defined,n_seeds\n";
        for (const std::string& g : grids) {
            ChartPanel panel;
            panel.title = g;
            panel.x_label = "target data density";
            panel.y_label = "RI (%)";
            panel.log_x = true;
            panel.x_ticks = tdens;
            for (double sd : sdens) {
                Series s;
                s.label = "src " + format_density(sd);
                for (double td : tdens) {
                    for (const RiCell& c : table) {
                        if (c.grid != g || c.matched) continue;
                        if (std::fabs(c.target_density - td) > 1e-12 ||
                            std::fabs(c.source_density - sd) > 1e-12)
                            continue;
                        const double y = c.n_defined > 0
                                             ? c.ri_mean
                                             : std::numeric_limits<double>::quiet_NaN();
                        s.points.emplace_back(td, y);
                        csv << g << ',' << format_density(td) << ',' << format_density(sd) << ','
                            << (c.n_defined > 0 ? fmtv(c.ri_mean) : "") << ','
                            << (c.n_defined > 0 ? fmtv(c.ri_min) : "") << ','
                            << (c.n_defined > 0 ? fmtv(c.ri_max) : "") << ',' << c.n_defined
                            << ',' << c.n_seeds << '\n';
                    }
                }
                panel.series.push_back(std::move(s));
            }
            panels.push_back(std::move(panel));
        }
        write_file(out_dir + "/ri_vs_density.svg",
                   render_chart_svg(panels, 2, "Relative improvement vs data densities"));
        write_file(out_dir + "/ri_vs_density.csv", csv.str());
    }

    // ---- 3. best RI vs target density (matched overlaid when present) ------
    {
        std::ostringstream csv;
        csv << "grid,target_density,matched,best_ri,winning_source_density\n";
        ChartPanel panel;
        panel.title = "Best RI over source models";
        panel.x_label = "target data density";
        panel.y_label = "best RI (%)";
        panel.log_x = true;
        panel.x_ticks = tdens;
        for (bool matched : {false, true}) {
            const auto best = best_ri(records, matched);
            if (best.empty()) continue;
            for (const std::string& g : grids) {
                Series s;
                s.label = g + (matched ? " (matched)" : "");
                s.dashed = matched;
                bool any = false;
                for (double td : tdens) {
                    for (const BestRiCell& c : best) {
                        if (c.grid != g || std::fabs(c.target_density - td) > 1e-12) continue;
                        const double y =
                            c.defined ? c.ri : std::numeric_limits<double>::quiet_NaN();
                        s.points.emplace_back(td, y);
                        any = true;
                        csv << g << ',' << format_density(td) << ',' << (matched ? 1 : 0) << ','
                            << (c.defined ? fmtv(c.ri) : "") << ','
                            << (c.defined ? format_density(c.winning_source_density) : "")
                            << '\n';
                    }
                }
                if (any) panel.series.push_back(std::move(s));
            }
        }
        write_file(out_dir + "/best_ri.svg",
                   render_chart_svg({panel}, 1, "Best RI from all source models"));
        write_file(out_dir + "/best_ri.csv", csv.str());
    }

    // ---- 4. target R^2: best transfer vs non-transfer ----------------------
    {
        std::vector<ChartPanel> panels;
        std::ostringstream csv;
        csv << "grid,target_density,baseline_r2,best_transfer_r2,best_matched_transfer_r2\n";
        for (const std::string& g : grids) {
            ChartPanel panel;
            panel.title = g;
            panel.x_label = "target data density";
            panel.y_label = "test R^2";
            panel.log_x = true;
            panel.x_ticks = tdens;
            Series base{"no transfer", {}, true};
            Series best{"best transfer", {}, false};
            Series matched{"best matched", {}, false};
            bool any_matched = false;
            for (double td : tdens) {
                const double b = seed_mean(g, td, 0.0, false);
                double bt = std::numeric_limits<double>::quiet_NaN();
                double mt = std::numeric_limits<double>::quiet_NaN();
                for (double sd : sdens) {
                    const double r = seed_mean(g, td, sd, false);
                    if (std::isfinite(r) && (!std::isfinite(bt) || r > bt)) bt = r;
                    const double rm = seed_mean(g, td, sd, true);
                    if (std::isfinite(rm) && (!std::isfinite(mt) || rm > mt)) mt = rm;
                }
                base.points.emplace_back(td, b);
                best.points.emplace_back(td, bt);
                if (std::isfinite(mt)) {
                    matched.points.emplace_back(td, mt);
                    any_matched = true;
                }
                csv << g << ',' << format_density(td) << ','
                    << (std::isfinite(b) ? fmtv(b) : "") << ','
                    << (std::isfinite(bt) ? fmtv(bt) : "") << ','
                    << (std::isfinite(mt) ? fmtv(mt) : "") << '\n';
            }
            panel.series.push_back(std::move(base));
            panel.series.push_back(std::move(best));
            if (any_matched) panel.series.push_back(std::move(matched));
            panels.push_back(std::move(panel));
        }
        write_file(out_dir + "/r2_comparison.svg",
                   render_chart_svg(panels, 2, "Target R^2: best transfer vs no transfer"));
        write_file(out_dir + "/r2_comparison.csv", csv.str());
    }
}

}  // namespace xfmr
