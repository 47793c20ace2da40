#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace xfmr {

/// Coefficient of determination, one value per output dimension plus their
/// arithmetic mean. `split` records which index set was evaluated.
struct R2Report {
    std::vector<double> per_dim;
    double mean = 0;
    std::size_t n = 0;
    std::string split;

    std::string to_text() const;
};

/// Per-dimension R^2 averaged over dimensions. `predictions` and `targets`
/// are row-major n x k. Every target column must have nonzero variance; a
/// constant column is an error naming the column index.
R2Report r_squared(const std::vector<double>& predictions, const std::vector<double>& targets,
                   std::size_t n, std::size_t k);

/// Relative improvement of transfer over non-transfer, in percent.
/// Undefined (nullopt) when the baseline R^2 is zero or negative.
std::optional<double> relative_improvement(double r2_transfer, double r2_non_transfer);

}  // namespace xfmr
