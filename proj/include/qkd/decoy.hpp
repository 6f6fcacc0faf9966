#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "qkd/warnings.hpp"

namespace qkd {

struct DecoyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntensityConfig {
    double mu = 0.0;
    double nu = 0.0;
    double p_mu = 0.0;
    double p_nu = 0.0;
    double q_z = 0.0;
    double n_pulses = 0.0;  // total pulses sent
    double f_r = 0.0;       // clock, Hz
    double loss_db = 0.0;   // channel loss

    double eta_c() const;
    void validate() const;
};

// Appendix-B-shaped experimental counts. Cell addressing: basis b in {z,x},
// bit i in {0,1}, intensity k in {mu,nu}.
struct RawCounts {
    std::int64_t n_z0_mu = 0, m_z0_mu = 0, n_z1_mu = 0, m_z1_mu = 0;
    std::int64_t n_x0_mu = 0, m_x0_mu = 0, n_x1_mu = 0, m_x1_mu = 0;
    std::int64_t n_z_mu = 0, m_z_mu = 0;
    std::int64_t n_z0_nu = 0, m_z0_nu = 0, n_z1_nu = 0, m_z1_nu = 0;
    std::int64_t n_x0_nu = 0, m_x0_nu = 0, n_x1_nu = 0, m_x1_nu = 0;
    std::int64_t n_z_nu = 0, m_z_nu = 0;
    double N_zz = 0.0, N_z0z = 0.0, N_z1z = 0.0;
    double N_xx = 0.0, N_x0x = 0.0, N_x1x = 0.0;

    // Throws DecoyError naming the offending cell.
    void validate() const;

    std::int64_t detections(char basis, int bit, char intensity) const;
    std::int64_t errors(char basis, int bit, char intensity) const;
    double sifted(char basis, int bit) const;  // N_{beta_i, beta}
    double sifted_basis(char basis) const;     // N_{beta beta}
    std::int64_t n_total(char basis) const;    // both intensities, both bits
    std::int64_t m_total(char basis) const;
};

struct SecurityParams {
    double eps_sec = 1e-9;
    double eps_cor = 1e-15;
    double eps_1 = 0.0;  // 0 selects eps_sec/19
    double eps_2 = 0.0;
    double f_ec = 1.16;
    double e_0 = 0.5;

    double eps1() const { return eps_1 > 0.0 ? eps_1 : eps_sec / 19.0; }
    double eps2() const { return eps_2 > 0.0 ? eps_2 : eps_sec / 19.0; }
    void validate() const;
};

struct PerBitBounds {
    double s0_lower = 0.0;
    double s0_upper = 0.0;
    double s1_lower = 0.0;  // s_{beta_i,1}^L
    double s1_upper = 0.0;  // s_{beta_i,1}^U (mu-nu difference bound)
    double t1_upper = 0.0;  // T_{beta_i,1}^U
};

struct DecoyBounds {
    double s_z0_lower = 0.0;  // vacuum, Z basis
    double s_z0_upper = 0.0;
    double s_z1_lower = 0.0;  // single-photon, Z basis
    PerBitBounds z0, z1, x0, x1;
    double delta_b_z_upper = 0.0;
    double delta_b_x_upper = 0.0;
    double tau0 = 0.0;
    double tau1 = 0.0;

    const PerBitBounds& bit(char basis, int b) const;
};

double binary_entropy(double x);

// Hoeffding-corrected, intensity-reweighted count:
//   (e^k/p_k)(count ± sqrt(total_in_basis/2 * ln(1/eps))), clamped at 0.
double finite_key_correction(double count, double total_in_basis, double eps, double k,
                             double p_k, int direction);

// tau_n: probability that a pulse carries n photons, n in {0,1}.
double poisson_tau(int n, double mu, double nu, double p_mu, double p_nu);

struct ZeroPhotonBounds {
    double lower = 0.0;
    double upper = 0.0;
};

// Vacuum bounds for the Z basis (basis totals).
ZeroPhotonBounds zero_photon_bounds(const RawCounts& counts, const IntensityConfig& cfg,
                                    const SecurityParams& sec, double d_mu_nu,
                                    double eta_bob_cal, WarningLog* log = nullptr);

// Single-photon lower bound; scope is either the basis total ('z' with bit = -1)
// or one (basis, bit) cell.
double single_photon_bound(const RawCounts& counts, const IntensityConfig& cfg,
                           const SecurityParams& sec, double d_mu_nu, double eta_bob_cal,
                           char basis, int bit, WarningLog* log = nullptr);

// Upper bound on single-photon error counts for one (basis, bit) cell:
// min of the three K expressions, clamped at 0.
double error_count_upper(const RawCounts& counts, const IntensityConfig& cfg,
                         const SecurityParams& sec, double d_mu_nu, double eta_bob_cal,
                         char basis, int bit, WarningLog* log = nullptr);

// Full bound stack (vacuum, single-photon, per-bit, error bounds, delta_b ratios).
DecoyBounds compute_bounds(const RawCounts& counts, const IntensityConfig& cfg,
                           const SecurityParams& sec, double d_mu_nu, double eta_bob_cal,
                           WarningLog* log = nullptr);

struct BitErrorBounds {
    double z = 0.0;  // delta_b,1^{z,mu,U}
    double x = 0.0;
};

BitErrorBounds single_photon_bit_error_bounds(const DecoyBounds& bounds,
                                              WarningLog* log = nullptr);

struct KeyLengthResult {
    double l = 0.0;             // secure bits
    double lambda_ec = 0.0;
    double const_penalty = 0.0; // 6 log2(19/eps_sec) + log2(2/eps_cor)
    double e_z = 0.0;           // Z error rate over both intensities
};

KeyLengthResult key_length(const DecoyBounds& bounds, double p_succ, double delta_p,
                           const RawCounts& counts, const SecurityParams& sec,
                           WarningLog* log = nullptr);

// Asymptotic rate of the comparison mode: R = P_succ mu e^-mu Y1 (1-H(dp)) - Q f_EC H(E).
double asymptotic_rate(double q_mu, double e_mu, double y1, double delta_p, double p_succ,
                       double mu, double f_ec);

}  // namespace qkd
