#include "xfmr/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace xfmr {

std::string R2Report::to_text() const {
    std::ostringstream os;
    char buf[48];
    os << "split = " << split << "\n";
    os << "n = " << n << "\n";
    std::snprintf(buf, sizeof(buf), "%.12g", mean);
    os << "r2_mean = " << buf << "\n";
    for (std::size_t i = 0; i < per_dim.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.12g", per_dim[i]);
        os << "r2_dim" << i << " = " << buf << "\n";
    }
    return os.str();
}

R2Report r_squared(const std::vector<double>& predictions, const std::vector<double>& targets,
                   std::size_t n, std::size_t k) {
    if (n < 2) throw std::invalid_argument("r_squared needs at least 2 samples");
    if (predictions.size() != n * k || targets.size() != n * k)
        throw std::invalid_argument("r_squared: shape mismatch");

    R2Report rep;
    rep.n = n;
    rep.per_dim.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        double mean = 0;
        for (std::size_t j = 0; j < n; ++j) mean += targets[j * k + i];
        mean /= static_cast<double>(n);
        double ss_res = 0, ss_tot = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double t = targets[j * k + i];
            const double e = t - predictions[j * k + i];
            const double d = t - mean;
            ss_res += e * e;
            ss_tot += d * d;
        }
        if (!(ss_tot > 0))
            throw std::invalid_argument("r_squared: zero-variance target column " +
                                        std::to_string(i));
        rep.per_dim[i] = 1.0 - ss_res / ss_tot;
    }
    double sum = 0;
    for (double v : rep.per_dim) sum += v;
    rep.mean = sum / static_cast<double>(k);
    return rep;
}

std::optional<double> relative_improvement(double r2_transfer, double r2_non_transfer) {
    if (!(r2_non_transfer > 0)) return std::nullopt;
    return (r2_transfer - r2_non_transfer) / r2_non_transfer * 100.0;
}

}  // namespace xfmr
