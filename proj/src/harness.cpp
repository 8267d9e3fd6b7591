#include "tiervm/harness.h"

#include "tiervm/guest_lang.h"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace tiervm {

Config MakeEngineConfig(const RunConfig& rc)
{
    Config cfg;
    cfg.tiered = !rc.interpreterOnly;
    cfg.tierUpThreshold = rc.tierUpThreshold;
    cfg.osr = rc.osr;
    return cfg;
}

RunResult RunProgram(std::string_view source, const RunConfig& rc)
{
    RunResult r;
    Engine e(MakeEngineConfig(rc));
    std::ostringstream out;
    e.SetOutput(&out);
    auto start = std::chrono::steady_clock::now();
    try {
        RunSource(e, source);
    } catch (const SourceError& ex) {
        r.sourceError = true;
        r.error = ex.what();
    } catch (const GuestError& ex) {
        r.guestError = true;
        r.error = ex.what();
    }
    r.stats = e.Stats();
    r.stats.wallTimeMs = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    r.output = out.str();
    if (!r.error.empty())
        r.output += "error: " + r.error + "\n";
    return r;
}

const std::vector<std::string>& StatsKeys()
{
    static const std::vector<std::string> keys { "bytecodesExecuted", "decodesPerformed", "branchesTaken", "icHits", "icMisses",
        "icStubsCreated", "tierUps", "osrEntries", "compiledBytecodes", "emittedCellBytes", "wallTimeMs" };
    return keys;
}

std::vector<std::string> StatsValues(const Counters& c)
{
    char wall[64];
    std::snprintf(wall, sizeof(wall), "%.3f", c.wallTimeMs);
    return { std::to_string(c.bytecodesExecuted), std::to_string(c.decodesPerformed), std::to_string(c.branchesTaken),
        std::to_string(c.icHits), std::to_string(c.icMisses), std::to_string(c.icStubsCreated), std::to_string(c.tierUps),
        std::to_string(c.osrEntries), std::to_string(c.compiledBytecodes), std::to_string(c.emittedCellBytes), wall };
}

std::string FormatStats(const Counters& c, StatsFormat f)
{
    const std::vector<std::string>& keys = StatsKeys();
    std::vector<std::string> values = StatsValues(c);
    std::string s;
    if (f == StatsFormat::Text) {
        for (size_t i = 0; i < keys.size(); i++)
            s += keys[i] + "=" + values[i] + "\n";
        return s;
    }
    for (size_t i = 0; i < keys.size(); i++)
        s += (i ? "," : "") + keys[i];
    s += "\n";
    for (size_t i = 0; i < values.size(); i++)
        s += (i ? "," : "") + values[i];
    s += "\n";
    return s;
}

const std::vector<uint64_t>& DifftestThresholds()
{
    static const std::vector<uint64_t> t { 0, 1, 100, kNeverTierUp };
    return t;
}

DifftestResult Difftest(std::string_view source)
{
    DifftestResult d;
    RunConfig base;
    base.interpreterOnly = true;
    RunResult ref = RunProgram(source, base);
    std::ostringstream report;
    for (uint64_t t : DifftestThresholds()) {
        RunConfig rc;
        rc.tierUpThreshold = t;
        RunResult r = RunProgram(source, rc);
        std::string name = t == kNeverTierUp ? "inf" : std::to_string(t);
        if (r.output != ref.output) {
            d.ok = false;
            size_t at = 0;
            while (at < r.output.size() && at < ref.output.size() && r.output[at] == ref.output[at])
                at++;
            report << "MISMATCH threshold=" << name << " at byte " << at << "\n";
        }
    }
    d.report = d.ok ? "OK\n" : report.str();
    return d;
}

} // namespace tiervm
