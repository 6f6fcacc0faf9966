#pragma once

#include <cstdint>
#include <vector>

#include "qkd/decoy.hpp"
#include "qkd/eve_search.hpp"
#include "qkd/operators.hpp"

namespace qkd {

struct ChannelModel {
    double distance_km = 0.0;
    double loss_db_per_km = 0.2;
    double loss_db = -1.0;      // < 0 selects distance_km * loss_db_per_km
    double e_mis = 0.01;        // optical misalignment error rate
    double p_dc = 1e-6;         // dark-count probability per gate per detector
    double eta_d = 0.085;
    double eta_bob = 1.0;

    double total_loss_db() const { return loss_db >= 0.0 ? loss_db : distance_km * loss_db_per_km; }
    double eta_c() const;
    double eta() const;  // eta_c * eta_bob * eta_d
    void validate() const;
};

struct ChannelStatistics {
    double q_mu = 0.0, q_nu = 0.0;  // gains
    double e_mu = 0.0, e_nu = 0.0;  // error rates
    double y0 = 0.0, y1 = 0.0;      // vacuum and single-photon yields
    // Expected per-cell detections/errors for the configured N.
    RawCounts expected;
};

// Threshold-detector decoy link model:
//   Q_k = 1 - (1 - 2 p_dc) e^{-eta k}
//   E_k Q_k = e_0 * 2 p_dc e^{-eta k} + e_mis (1 - e^{-eta k})
//   Y_1 = 1 - (1 - 2 p_dc)(1 - eta)
ChannelStatistics expected_statistics(const ChannelModel& channel, const IntensityConfig& cfg,
                                      double e_0 = 0.5);

// Binomial sampling of every cell; bit-reproducible for a fixed seed.
RawCounts synthesize_counts(const ChannelStatistics& stats, const IntensityConfig& cfg,
                            std::uint64_t seed);

// No-imperfection baseline: decoy stack with D_mu_nu = 0 and the search bypassed
// (P_succ = 1, delta_p = delta_b,1^{x,U}). Returns secure bits per pulse.
double gllp_baseline(const ChannelModel& channel, const IntensityConfig& cfg,
                     const SecurityParams& sec, WarningLog* log = nullptr);

double gllp_baseline_from_counts(const RawCounts& counts, const IntensityConfig& cfg,
                                 const SecurityParams& sec, double eta_bob_cal,
                                 WarningLog* log = nullptr);

struct GridSpec {
    std::vector<double> mu;
    std::vector<double> nu;
    std::vector<double> p_mu;
    std::vector<double> q_z;
};

struct GridPoint {
    double mu = 0.0, nu = 0.0, p_mu = 0.0, q_z = 0.0;
    double key_bits = 0.0;
};

struct OptimizedParams {
    GridPoint best;
    std::vector<GridPoint> table;
    bool all_zero = false;
};

// Exhaustive grid search maximizing the imperfection-aware key length on
// expected (unsampled) counts.
OptimizedParams optimize_protocol_params(const ChannelModel& channel, const FlawParameters& flaws,
                                         double n_pulses, double f_r, const GridSpec& grid,
                                         const SecurityParams& sec, const SearchBudget& budget,
                                         std::uint64_t seed);

struct SweepPoint {
    double distance_km = 0.0;
    double rate_refined = 0.0;  // secure bits per pulse
    double rate_gllp = 0.0;
};

// Fig.-2-style distance sweep at fixed protocol parameters.
std::vector<SweepPoint> sweep_distances(const ChannelModel& channel_base,
                                        const FlawParameters& flaws, const IntensityConfig& cfg,
                                        const SecurityParams& sec,
                                        const std::vector<double>& distances_km,
                                        const SearchBudget& budget, std::uint64_t seed);

}  // namespace qkd
