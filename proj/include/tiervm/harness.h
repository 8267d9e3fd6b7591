#pragma once

#include "tiervm/vm.h"

#include <string>
#include <string_view>
#include <vector>

namespace tiervm {

enum class StatsFormat : uint8_t { Text, Csv };

struct RunConfig {
    bool interpreterOnly = false;
    uint64_t tierUpThreshold = Config {}.tierUpThreshold;
    bool osr = true;
};

Config MakeEngineConfig(const RunConfig& rc);

struct RunResult {
    // Program output, followed by "error: MSG\n" when the program failed.
    std::string output;
    bool sourceError = false;
    bool guestError = false;
    std::string error;
    Counters stats;
};

// Compiles and runs a program in a fresh engine, capturing its output.
RunResult RunProgram(std::string_view source, const RunConfig& rc);

// The public counter names, in their fixed order.
const std::vector<std::string>& StatsKeys();
std::vector<std::string> StatsValues(const Counters& c);
// Text: one "key=value" line per counter. Csv: a header line and a row.
std::string FormatStats(const Counters& c, StatsFormat f);

// The thresholds a difftest compares against the interpreter-only run.
const std::vector<uint64_t>& DifftestThresholds();

struct DifftestResult {
    bool ok = true;
    std::string report;
};
DifftestResult Difftest(std::string_view source);

} // namespace tiervm
