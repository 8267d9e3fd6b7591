#include "tiervm/guest_lang.h"
#include "tiervm/harness.h"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace tiervm;

namespace {

py::dict StatsDict(const Counters& c)
{
    py::dict d;
    const std::vector<std::string>& keys = StatsKeys();
    std::vector<std::string> values = StatsValues(c);
    for (size_t i = 0; i < keys.size(); i++) {
        if (keys[i] == "wallTimeMs")
            d[keys[i].c_str()] = c.wallTimeMs;
        else
            d[keys[i].c_str()] = std::stoull(values[i]);
    }
    return d;
}

py::object ToPython(Engine& e, BoxedValue v)
{
    if (v.IsNil())
        return py::none();
    if (v.IsBool())
        return py::bool_(v.AsBool());
    if (v.IsDouble())
        return py::float_(v.AsDouble());
    if (v.IsString())
        return py::str(e.GetHeap().Str(v));
    return py::str(e.ToString(v));
}

RunConfig MakeRunConfig(bool interpreterOnly, uint64_t threshold, bool osr)
{
    RunConfig rc;
    rc.interpreterOnly = interpreterOnly;
    rc.tierUpThreshold = threshold;
    rc.osr = osr;
    return rc;
}

// A persistent engine: globals survive between run() calls.
class PyEngine {
public:
    PyEngine(bool interpreterOnly, uint64_t threshold, bool osr)
        : m_engine(MakeEngineConfig(MakeRunConfig(interpreterOnly, threshold, osr)))
    {
        m_engine.SetOutput(&m_out);
    }

    py::tuple Run(const std::string& source)
    {
        m_out.str("");
        std::vector<BoxedValue> results;
        try {
            results = RunSource(m_engine, source);
        } catch (const SourceError& ex) {
            throw py::value_error(ex.what());
        } catch (const GuestError& ex) {
            throw std::runtime_error(ex.what());
        }
        py::list values;
        for (BoxedValue v : results)
            values.append(ToPython(m_engine, v));
        return py::make_tuple(m_out.str(), py::tuple(values));
    }

    py::dict Stats() const { return StatsDict(m_engine.Stats()); }

private:
    Engine m_engine;
    std::ostringstream m_out;
};

} // namespace

PYBIND11_MODULE(_tiervm, m)
{
    m.doc() = "Bindings for the tiervm two-tier virtual machine";

    m.def(
        "run",
        [](const std::string& source, bool interpreterOnly, uint64_t threshold, bool osr) {
            RunResult r = RunProgram(source, MakeRunConfig(interpreterOnly, threshold, osr));
            py::dict d;
            d["output"] = r.output;
            d["error"] = r.error.empty() ? py::object(py::none()) : py::object(py::str(r.error));
            d["stats"] = StatsDict(r.stats);
            return d;
        },
        py::arg("source"), py::arg("interpreter_only") = false, py::arg("tier_up_threshold") = Config {}.tierUpThreshold, py::arg("osr") = true,
        "Runs a program in a fresh engine and returns its output, error and counters.");

    m.def(
        "difftest",
        [](const std::string& source) {
            DifftestResult d = Difftest(source);
            return py::make_tuple(d.ok, d.report);
        },
        py::arg("source"), "Compares interpreter-only output with tiered output at every difftest threshold.");

    m.def(
        "dump_bytecode",
        [](const std::string& source) {
            Engine e;
            try {
                return DumpProgramBytecode(e, CompileChunk(e, source));
            } catch (const SourceError& ex) {
                throw py::value_error(ex.what());
            }
        },
        py::arg("source"));

    m.def(
        "dump_templates",
        [](const std::string& source) {
            Engine e;
            try {
                return DumpProgramTemplates(CompileChunk(e, source));
            } catch (const SourceError& ex) {
                throw py::value_error(ex.what());
            }
        },
        py::arg("source"));

    m.def("stats_keys", &StatsKeys);
    m.attr("NEVER_TIER_UP") = kNeverTierUp;

    py::class_<PyEngine>(m, "Engine")
        .def(py::init<bool, uint64_t, bool>(), py::arg("interpreter_only") = false, py::arg("tier_up_threshold") = Config {}.tierUpThreshold,
            py::arg("osr") = true)
        .def("run", &PyEngine::Run, py::arg("source"), "Runs a chunk; returns (output, results).")
        .def_property_readonly("stats", &PyEngine::Stats);
}
