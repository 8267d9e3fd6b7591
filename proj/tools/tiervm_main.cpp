#include "tiervm/guest_lang.h"
#include "tiervm/harness.h"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace tiervm;

namespace {

enum ExitCode { kExitOk = 0, kExitGuestError = 1, kExitUsage = 2, kExitMismatch = 3 };

bool ReadFile(const std::string& path, std::string& out)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    out = ss.str();
    return true;
}

int CmdRun(const std::string& source, const RunConfig& rc, bool stats, bool csv)
{
    Engine e(MakeEngineConfig(rc));
    e.SetOutput(&std::cout);
    auto start = std::chrono::steady_clock::now();
    int code = kExitOk;
    try {
        RunSource(e, source);
    } catch (const SourceError& ex) {
        std::cout.flush();
        std::cerr << "error: " << ex.what() << "\n";
        code = kExitGuestError;
    } catch (const GuestError& ex) {
        std::cout.flush();
        std::cerr << "error: " << ex.what() << "\n";
        code = kExitGuestError;
    }
    if (stats) {
        Counters c = e.Stats();
        c.wallTimeMs = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        std::cout << FormatStats(c, csv ? StatsFormat::Csv : StatsFormat::Text);
    }
    std::cout.flush();
    return code;
}

int CmdDump(const std::string& source, bool bytecode, bool templates)
{
    Engine e;
    FunctionProto* main = nullptr;
    try {
        main = CompileChunk(e, source);
    } catch (const SourceError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitGuestError;
    }
    if (bytecode)
        std::cout << DumpProgramBytecode(e, main);
    if (templates)
        std::cout << DumpProgramTemplates(main);
    return kExitOk;
}

int CmdBench(const std::string& dir, bool csv)
{
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".lua")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    const std::vector<std::string>& keys = StatsKeys();
    if (csv) {
        std::cout << "file,mode";
        for (const std::string& k : keys)
            std::cout << "," << k;
        std::cout << "\n";
    }
    int code = kExitOk;
    for (const auto& path : files) {
        std::string source;
        if (!ReadFile(path.string(), source)) {
            std::cerr << "error: cannot read " << path.string() << "\n";
            return kExitUsage;
        }
        for (bool interp : { true, false }) {
            RunConfig rc;
            rc.interpreterOnly = interp;
            RunResult r = RunProgram(source, rc);
            if (!r.error.empty()) {
                std::cerr << "error: " << path.filename().string() << ": " << r.error << "\n";
                code = kExitGuestError;
            }
            const char* mode = interp ? "interpreterOnly" : "tiered";
            std::vector<std::string> values = StatsValues(r.stats);
            if (csv) {
                std::cout << path.filename().string() << "," << mode;
                for (const std::string& v : values)
                    std::cout << "," << v;
                std::cout << "\n";
            } else {
                std::cout << path.filename().string() << " " << mode << " wallTimeMs=" << values.back()
                          << " bytecodesExecuted=" << values[0] << " tierUps=" << r.stats.tierUps << "\n";
            }
        }
    }
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "tiervm: a two-tier virtual machine for a small Lua-like language" };
    app.require_subcommand(1);

    std::string file;
    RunConfig rc;
    bool interpreterOnly = false;
    bool noOsr = false;
    bool stats = false;
    bool csv = false;
    CLI::App* run = app.add_subcommand("run", "Run a program");
    run->add_option("file", file, "Program source")->required();
    run->add_flag("--interpreter-only", interpreterOnly, "Never leave the interpreter");
    run->add_option("--tier-up-threshold", rc.tierUpThreshold, "Bytecodes executed before a function is compiled")->check(CLI::NonNegativeNumber);
    run->add_flag("--no-osr", noOsr, "Disable on-stack replacement into tier 2");
    run->add_flag("--stats", stats, "Print counters after the program output");
    run->add_flag("--csv", csv, "Print counters as CSV");

    bool dumpBytecode = false;
    bool dumpTemplates = false;
    CLI::App* dump = app.add_subcommand("dump", "Print deterministic listings of a program");
    dump->add_option("file", file, "Program source")->required();
    dump->add_flag("--bytecode", dumpBytecode, "Bytecode listing of every function");
    dump->add_flag("--templates", dumpTemplates, "Stencils of every bytecode variant the program uses");

    CLI::App* difftest = app.add_subcommand("difftest", "Compare interpreter-only output with tiered output");
    difftest->add_option("file", file, "Program source")->required();

    std::string dir;
    CLI::App* bench = app.add_subcommand("bench", "Run every .lua file of a directory under both modes");
    bench->add_option("dir", dir, "Directory of programs")->required()->check(CLI::ExistingDirectory);
    bench->add_flag("--csv", csv, "Emit CSV rows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    if (*bench)
        return CmdBench(dir, csv);

    std::string source;
    if (!ReadFile(file, source)) {
        std::cerr << "error: cannot read " << file << "\n";
        return kExitUsage;
    }
    if (*run) {
        rc.interpreterOnly = interpreterOnly;
        rc.osr = !noOsr;
        return CmdRun(source, rc, stats || csv, csv);
    }
    if (*dump) {
        if (dumpBytecode == dumpTemplates) {
            std::cerr << "error: dump needs exactly one of --bytecode or --templates\n";
            return kExitUsage;
        }
        return CmdDump(source, dumpBytecode, dumpTemplates);
    }
    DifftestResult d = Difftest(source);
    std::cout << d.report;
    return d.ok ? kExitOk : kExitMismatch;
}
