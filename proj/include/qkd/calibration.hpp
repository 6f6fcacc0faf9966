#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qkd/linalg.hpp"
#include "qkd/warnings.hpp"

namespace qkd {

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Detector counts from the state-preparation scan (one record per target phase).
struct StatePrepRecord {
    std::string state;  // z0, x0, z1, x1
    double theta = 0.0; // target modulator phase, radians
    std::int64_t d1 = 0;
    std::int64_t d2 = 0;
};

struct StatePrepCounts {
    std::vector<StatePrepRecord> records;
    double eta_d1 = 1.0;
    double eta_d2 = 1.0;
    double epsilon = 1e-10;  // failure probability of the count interval

    const StatePrepRecord& find(const std::string& state) const;
};

// Time-resolved pulse shape, one per intensity.
struct PulseTrace {
    std::vector<double> t_ps;
    std::vector<double> rho;
    std::string label;  // signal | decoy
};

struct TrojanMeasurement {
    double n_leak = 0.0;       // counts/s
    double eta_eve = 1.0;      // monitor detector efficiency
    double mu_eve = 1.0;       // probe intensity, photons/s
    double mu_eve_max = 1.0;   // assumed adversary intensity, photons/s
    double isolation_db = 0.0;
    double f_r = 1.0;          // clock, Hz
};

struct DetectorEfficiencyScan {
    std::vector<double> shift_ps;
    std::vector<double> eta_h, eta_v, eta_p, eta_m;
    double t1_ps = 0.0;
    double t2_ps = 0.0;
    double q_z = 0.9;
};

// Upper bound on the modulation error for one prepared state.
// The count interval half-width is sqrt(D/(2 ln(1/eps))), the form that reproduces
// the published modulation-error table; with_fluctuation=false evaluates the plain
// count ratio.
double modulation_error_bound(const StatePrepCounts& counts, const std::string& state,
                              bool with_fluctuation = true, WarningLog* log = nullptr);

// Trace distance between the signal and decoy time distributions.
// Inputs are renormalized to unit mass before differencing.
double decoy_distinguishability(const PulseTrace& signal, const PulseTrace& decoy);

struct TrojanResult {
    double reflectivity = 0.0;  // R_a
    double mu_out = 0.0;        // photons/pulse
};

TrojanResult trojan_mu_out(const TrojanMeasurement& m);

struct MismatchMatrices {
    Matrix2d f0;
    Matrix2d f1;
};

// q_z-weighted mixtures of the normalized per-basis detection-efficiency matrices
// at the attack times (t1, t2). Ratios > 1 are moved to the other diagonal slot
// so each matrix stays a sub-normalized filter.
MismatchMatrices detection_mismatch_matrices(const DetectorEfficiencyScan& scan,
                                             WarningLog* log = nullptr);

// Optional helper: scan the grid for the (t1, t2) pair minimizing the smallest
// diagonal entry of the mixture matrices (the adversary's best choice).
std::pair<double, double> find_attack_times(const DetectorEfficiencyScan& scan);

}  // namespace qkd
