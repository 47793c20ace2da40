#pragma once

#include <map>
#include <string>

#include "xfmr/config.hpp"

namespace xfmr {

inline constexpr double kMu0 = 1.25663706212e-6;  // vacuum permeability, H/m

/// Process + metal option + design frequency. Differences between profiles
/// are what produce the grid-to-grid distribution shift.
struct TechnologyProfile {
    std::string name;
    double sigma = 0;    // metal conductivity, S/m
    double t_metal = 0;  // metal thickness, um
    double h_gap = 0;    // vertical gap between windings, um
    double k_max = 0;    // coupling ceiling, (0,1)
    double freq = 0;     // design frequency, GHz
    double z_load = 0;   // load impedance, ohm

    double omega() const { return 2.0 * 3.14159265358979323846 * freq * 1e9; }
    void validate() const;  // throws std::invalid_argument naming the bad field
};

/// Physical transformer parameters (the synthesis output V). All in um.
struct Geometry {
    double d_out = 0;  // outer diameter
    double w_p = 0;    // primary trace width
    double w_s = 0;    // secondary trace width

    void validate() const;
};

/// Lumped circuit parameters (the intermediate target Y).
struct CircuitParams {
    double l_p = 0;  // primary inductance, H
    double l_s = 0;  // secondary inductance, H
    double k = 0;    // coupling coefficient
    double q_p = 0;  // primary quality factor
    double q_s = 0;  // secondary quality factor
};

/// Shunt tuning capacitances (X1), fF. Zero means the capacitor is absent.
struct TuningCaps {
    double c1 = 0;
    double c2 = 0;
};

/// Complex input impedance of the tuned network (X2), ohm.
struct DesignImpedance {
    double re = 0;
    double im = 0;
};

/// Lumped-element extraction for one winding pair: single-turn current-sheet
/// inductance, skin-effect series resistance, and a gap/width coupling
/// heuristic bounded by the profile's k_max.
CircuitParams geometry_to_circuit(const Geometry& g, const TechnologyProfile& tech);

/// Input impedance of the loaded two-port: secondary branch reflected into
/// the primary through the mutual inductance, shunt caps on both ports.
DesignImpedance input_impedance(const CircuitParams& y, const TuningCaps& caps,
                                const TechnologyProfile& tech);

/// Loads every [profile.<name>] section of a config.
std::map<std::string, TechnologyProfile> load_technologies(const Config& cfg);

/// Looks up one profile; the error names the missing profile.
TechnologyProfile find_technology(const Config& cfg, const std::string& name);

}  // namespace xfmr
