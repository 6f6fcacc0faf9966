#pragma once

#include <string>
#include <vector>

namespace qkd {

// Structured warning: clamps and convention fallbacks are recorded here, never silent.
struct Warning {
    std::string code;     // stable identifier, e.g. "fidelity_exhausted"
    std::string message;  // human-readable context

    bool operator==(const Warning& o) const { return code == o.code && message == o.message; }
};

using WarningLog = std::vector<Warning>;

inline void warn(WarningLog* log, std::string code, std::string message) {
    if (log) log->push_back({std::move(code), std::move(message)});
}

}  // namespace qkd
