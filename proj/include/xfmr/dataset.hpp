#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xfmr/config.hpp"
#include "xfmr/surrogate.hpp"

namespace xfmr {

/// One sweep dimension: `steps` evenly spaced values over [lo, hi].
struct SweepAxis {
    double lo = 0, hi = 0;
    int steps = 0;

    double value(int i) const {
        if (steps == 1) return lo;
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
    }
    /// Parses "lo:hi:steps".
    static SweepAxis parse(const std::string& text);
    std::string to_string() const;
};

/// Sweep declaration for one grid; dimension order (d_out, w_p, w_s, c1, c2)
/// is also the row order of the generated dataset (last dimension fastest).
struct GridSpec {
    std::string tech;  // technology profile name
    SweepAxis d_out, w_p, w_s, c1, c2;

    std::uint64_t geometry_points() const {
        return static_cast<std::uint64_t>(d_out.steps) * w_p.steps * w_s.steps;
    }
    std::uint64_t total_points() const {
        return geometry_points() * static_cast<std::uint64_t>(c1.steps) * c2.steps;
    }
    void validate() const;  // every axis needs >= 2 steps
    std::string describe() const;

    /// Reads the axes + tech from config keys under `section`.
    static GridSpec from_config(const Config& cfg, const std::string& section);
    /// Same sweep values, different technology (the matched-grid construction).
    GridSpec with_tech(const std::string& tech_name) const;
};

inline constexpr int kNumCols = 12;
inline constexpr int kXCols = 4;   // columns 0..3:  c1, c2, zin_re, zin_im
inline constexpr int kYCols = 5;   // columns 4..8:  l_p, l_s, k, q_p, q_s
inline constexpr int kVCols = 3;   // columns 9..11: d_out, w_p, w_s
inline constexpr std::array<const char*, kNumCols> kColumnNames = {
    "c1", "c2", "zin_re", "zin_im", "l_p", "l_s", "k", "q_p", "q_s", "d_out", "w_p", "w_s"};

/// Per-column mean and population standard deviation, computed over the
/// train split.
struct NormStats {
    std::array<double, kNumCols> mean{};
    std::array<double, kNumCols> stddev{};
    bool operator==(const NormStats&) const = default;
};

struct SplitIndices {
    std::vector<std::uint64_t> train, val, test;
    bool operator==(const SplitIndices&) const = default;
};

/// A full grid of design points in column order kColumnNames, stored row
/// major as doubles, plus optional split and normalization state.
class GridDataset {
public:
    GridSpec spec;
    std::vector<double> data;  // rows() x kNumCols
    std::optional<SplitIndices> split;
    std::optional<NormStats> norm;
    std::uint64_t split_seed = 0;
    std::uint64_t subsample_seed = 0;
    double density = 1.0;  // train-split density after subsampling

    std::uint64_t rows() const { return data.size() / kNumCols; }
    double at(std::uint64_t row, int col) const { return data[row * kNumCols + col]; }
    double& at(std::uint64_t row, int col) { return data[row * kNumCols + col]; }
    const double* row(std::uint64_t r) const { return data.data() + r * kNumCols; }

    const SplitIndices& split_ref() const;
    const NormStats& norm_ref() const;

    bool operator==(const GridDataset&) const;
};

/// Cartesian sweep in lexicographic dimension order; every row is produced
/// by the surrogate, so the DesignPoint invariants hold by construction.
/// Throws if any grid point yields an invalid geometry.
GridDataset generate_grid(const GridSpec& spec, const TechnologyProfile& tech);

/// Seeded uniform 6:2:2 partition of all rows. Rejects datasets with < 5 rows.
void assign_split(GridDataset& ds, std::uint64_t seed);

/// Train-split per-column mean/stddev (population convention). Standardization
/// itself happens lazily at training time. Zero-variance columns are an error
/// naming the column.
void compute_norm_stats(GridDataset& ds);

/// Keeps ceil(density * |train|) train indices, chosen as a prefix of one
/// seeded permutation so that lower densities are subsets of higher ones
/// under the same seed. Val and test splits are untouched.
void subsample_train(GridDataset& ds, double density, std::uint64_t seed);

void save_dataset(const GridDataset& ds, const std::string& path);
GridDataset load_dataset(const std::string& path);
void export_csv(const GridDataset& ds, const std::string& path);

}  // namespace xfmr
