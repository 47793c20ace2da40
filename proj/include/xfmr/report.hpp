#pragma once

#include <string>

namespace xfmr {

/// Builds the four figure analogs from a results.csv: training dynamics,
/// RI vs densities, best RI, and target R^2 comparison. Each chart is one
/// SVG plus a backing CSV in `out_dir`. The dynamics chart additionally
/// reads per-epoch history CSVs from the `history/` directory next to the
/// results file, when present. Never retrains anything.
/// Throws std::runtime_error("no records") when the results file is empty.
void generate_report(const std::string& results_csv, const std::string& out_dir);

}  // namespace xfmr
