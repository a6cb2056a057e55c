#pragma once

#include <vector>

#include "wiresim/dynamics.hpp"

namespace wiresim {

struct BucklingConfig {
    double length = 9.29;
    double alpha = 1.345;
    double beta = 0.789;
    double turns = 27.0;
    double end_shift = 0.3;
    std::vector<int> n_values = {40, 60, 80, 110, 140, 180};

    // Quasi-static schedule.
    int twist_increments = 2000;
    int shift_increments = 2500;
    int steps_per_increment = 6;
    double dt = 0.002;
    double ramp_damping = 40.0;
    int final_relax_steps = 150000;
    double kinetic_tol = 1e-7;
    double mass_density = 1.0;
    double perturbation = 0.045;  // seed arch amplitude, fraction of length
    uint64_t seed = 1;
    double min_phi0 = 0.05;  // below this the rod never buckled

    void validate() const;
};

struct EnvelopeSample {
    double s_over_sstar;
    double f_measured;
    double f_analytic;
};

struct EnvelopeResult {
    int n = 0;
    double phi0 = 0;       // maximal tangent deviation from the end-to-end axis
    double avg_error = 0;  // mean |f_measured - f_analytic| per sample
    std::vector<EnvelopeSample> samples;
};

// f(phi) = (cos(phi) - cos(phi0)) / (1 - cos(phi0)).
double analytic_envelope(double phi, double phi0);

EnvelopeResult run_helical_buckling_case(const BucklingConfig& cfg, int n);
std::vector<EnvelopeResult> run_helical_buckling(const BucklingConfig& cfg);

struct MichellConfig {
    double alpha = 1.0;
    std::vector<double> beta_over_alpha = {0.5, 1.0, 1.5};
    int n = 50;
    double radius = 1.0;

    double twist_step = 0.05;        // rad per increment
    double perturb_amplitude = 1e-4; // * radius, out-of-plane noise
    double buckle_threshold = 0.05;  // * radius
    double probe_time = 28.0;        // seconds of dynamics per increment
    double probe_damping = 0.35;
    double dt = 0.002;
    double mass_density = 1.0;
    uint64_t seed = 1;

    void validate() const;
};

struct MichellResult {
    double beta_over_alpha = 0;
    double theta_c_measured = 0;
    double theta_c_analytic = 0;
    double deviation_pct = 0;
};

// Critical twist 2*pi*sqrt(3) / (beta/alpha) for a unit-radius ring.
double michell_analytic(double beta_over_alpha);

MichellResult run_michell_case(const MichellConfig& cfg, double beta_over_alpha);
std::vector<MichellResult> run_michell(const MichellConfig& cfg);

}  // namespace wiresim
