#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "qkd/calibration.hpp"
#include "qkd/decoy.hpp"
#include "qkd/operators.hpp"
#include "qkd/simulator.hpp"

namespace qkd {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

// FNV-1a over the canonical (sorted-key) serialization; used as the inputs digest.
std::uint64_t digest(const json& j);

RawCounts counts_from_json(const json& j);
json counts_to_json(const RawCounts& c);
RawCounts load_counts(const std::string& path);

IntensityConfig config_from_json(const json& j);
json config_to_json(const IntensityConfig& c);

SecurityParams security_from_json(const json& j);
json security_to_json(const SecurityParams& s);

FlawParameters flaws_from_json(const json& j);
json flaws_to_json(const FlawParameters& f);

ChannelModel channel_from_json(const json& j);
json channel_to_json(const ChannelModel& c);

StatePrepCounts stateprep_from_json(const json& j);
TrojanMeasurement trojan_from_json(const json& j);

PulseTrace load_trace_csv(const std::string& path, const std::string& label);
DetectorEfficiencyScan load_efficiency_scan_csv(const std::string& path, double t1, double t2,
                                                double q_z);

// Row-major, full-precision serialization of the operator model for audit.
json operator_set_to_json(const OperatorSet& ops);

}  // namespace qkd
