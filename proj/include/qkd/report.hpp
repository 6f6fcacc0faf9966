#pragma once

#include <cstdint>
#include <string>

#include "qkd/json_io.hpp"

namespace qkd {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 20220831ULL;  // fixed default, never wall clock

struct KeyRateResult {
    double l = 0.0;             // secure bits
    double rate_per_pulse = 0.0;
    double rate_bps = 0.0;
    double p_succ = 0.0;
    double delta_p = 0.0;
    double e_mu = 0.0;          // Z-basis error rate, both intensities
    double lambda_ec = 0.0;
    double const_penalty = 0.0;
};

struct AnalysisReport {
    std::uint64_t counts_digest = 0;
    std::uint64_t config_digest = 0;
    std::uint64_t flaws_digest = 0;
    IntensityConfig config;
    FlawParameters flaws;
    SecurityParams security;
    DecoyBounds bounds;
    SearchResult search;
    KeyRateResult key;
    WarningLog warnings;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = kDefaultSeed;
};

// Full pipeline: decoy bounds -> operator model -> worst-case search -> key length.
AnalysisReport run_pipeline(const RawCounts& counts, const FlawParameters& flaws,
                            const IntensityConfig& config, const SecurityParams& security,
                            const SearchBudget& budget, std::uint64_t seed);

json report_to_json(const AnalysisReport& r);
AnalysisReport report_from_json(const json& j);

// format: "json" (full report), "csv" (one summary row), "plot-csv" is handled by
// the sweep emitter below.
std::string emit_report(const AnalysisReport& r, const std::string& format);

std::string emit_sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace qkd
