#include "xfmr/surrogate.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace xfmr {

void TechnologyProfile::validate() const {
    auto bad = [&](const std::string& field) {
        throw std::invalid_argument("technology profile '" + name + "': invalid " + field);
    };
    if (!(sigma > 0)) bad("sigma");
    if (!(t_metal > 0)) bad("t_metal");
    if (!(h_gap > 0)) bad("h_gap");
    if (!(k_max > 0 && k_max < 1)) bad("k_max");
    if (!(freq > 0)) bad("freq");
    if (!(z_load > 0)) bad("z_load");
}

void Geometry::validate() const {
    if (!(d_out > 0 && w_p > 0 && w_s > 0))
        throw std::domain_error("geometry fields must be positive");
    if (!(d_out > 2.0 * std::max(w_p, w_s)))
        throw std::domain_error("geometry: d_out must exceed twice the widest trace");
}

namespace {

// Inductance and quality factor of one single-turn winding of width w (um).
void winding_params(double d_out, double w, const TechnologyProfile& tech,
                    double& l, double& q) {
    const double d_avg = (d_out - w) * 1e-6;  // m
    const double rho = w / (d_out - w);       // fill ratio
    l = 2.25 * kMu0 * d_avg / (1.0 + 3.55 * rho);

    const double omega = tech.omega();
    const double delta = std::sqrt(2.0 / (omega * kMu0 * tech.sigma));
    const double delta_eff = delta * (1.0 - std::exp(-tech.t_metal * 1e-6 / delta));
    const double length = 3.14159265358979323846 * d_avg;
    const double r = length / (tech.sigma * w * 1e-6 * delta_eff);
    q = omega * l / r;
}

}  // namespace

CircuitParams geometry_to_circuit(const Geometry& g, const TechnologyProfile& tech) {
    g.validate();
    CircuitParams y;
    winding_params(g.d_out, g.w_p, tech, y.l_p, y.q_p);
    winding_params(g.d_out, g.w_s, tech, y.l_s, y.q_s);
    const double ratio = std::min(g.w_p, g.w_s) / std::max(g.w_p, g.w_s);
    y.k = tech.k_max * std::sqrt(ratio) * std::exp(-tech.h_gap / (0.05 * g.d_out));
    return y;
}

DesignImpedance input_impedance(const CircuitParams& y, const TuningCaps& caps,
                                const TechnologyProfile& tech) {
    using cd = std::complex<double>;
    const double omega = tech.omega();
    const double m = y.k * std::sqrt(y.l_p * y.l_s);
    const double r_p = omega * y.l_p / y.q_p;
    const double r_s = omega * y.l_s / y.q_s;

    // secondary branch: series RL plus the load shunted by c2
    cd load(tech.z_load, 0.0);
    if (caps.c2 > 0) {
        const cd zc2(0.0, -1.0 / (omega * caps.c2 * 1e-15));
        load = load * zc2 / (load + zc2);
    }
    const cd z_sec = cd(r_s, omega * y.l_s) + load;

    // reflect into the primary through the mutual inductance
    const double wm = omega * m;
    const cd z_p = cd(r_p, omega * y.l_p) + wm * wm / z_sec;

    cd z_in = z_p;
    if (caps.c1 > 0) {
        const cd zc1(0.0, -1.0 / (omega * caps.c1 * 1e-15));
        z_in = z_p * zc1 / (z_p + zc1);
    }
    return {z_in.real(), z_in.imag()};
}

std::map<std::string, TechnologyProfile> load_technologies(const Config& cfg) {
    std::map<std::string, TechnologyProfile> out;
    for (const std::string& name : cfg.subsections("profile")) {
        const std::string p = "profile." + name + ".";
        TechnologyProfile tech;
        tech.name = name;
        tech.sigma = cfg.number(p + "sigma");
        tech.t_metal = cfg.number(p + "t_metal");
        tech.h_gap = cfg.number(p + "h_gap");
        tech.k_max = cfg.number(p + "k_max");
        tech.freq = cfg.number(p + "freq");
        tech.z_load = cfg.number(p + "z_load");
        tech.validate();
        out[name] = tech;
    }
    return out;
}

TechnologyProfile find_technology(const Config& cfg, const std::string& name) {
    if (!cfg.has("profile." + name + ".sigma"))
        throw ConfigError("unknown technology profile: " + name);
    auto all = load_technologies(cfg);
    return all.at(name);
}

}  // namespace xfmr
