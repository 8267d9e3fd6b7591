#include <doctest.h>

#include "../support/corpus.h"
#include "tiervm/guest_bytecodes.h"
#include "tiervm/guest_lang.h"
#include "tiervm/harness.h"

#include <sstream>

using namespace tiervm;

namespace {

Config InterpOnly()
{
    Config c;
    c.tiered = false;
    return c;
}

std::string Output(Engine& e, const std::string& src)
{
    std::ostringstream out;
    e.SetOutput(&out);
    RunSource(e, src);
    return out.str();
}

std::string Bytecode(const std::string& src)
{
    Engine e;
    return DumpProgramBytecode(e, CompileChunk(e, src));
}

bool Contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

SourceError SourceErrorOf(const std::string& src)
{
    Engine e;
    try {
        CompileChunk(e, src);
    } catch (const SourceError& ex) {
        return ex;
    }
    FAIL("expected a source error");
    return SourceError(0, "");
}

} // namespace

TEST_CASE("parse and lower a return of a sum")
{
    std::string d = Bytecode("return 1 + 2");
    CHECK(Contains(d, "function main params=0+... slots="));
    CHECK(Contains(d, "Add_"));
    CHECK(Contains(d, "Return values="));

    Engine e(InterpOnly());
    std::vector<BoxedValue> r = RunSource(e, "return 1 + 2");
    REQUIRE(r.size() == 1);
    CHECK(r[0].AsDouble() == 3);
}

TEST_CASE("syntax errors carry a line and a column")
{
    SourceError unbalanced = SourceErrorOf("local x = 1\nend\n");
    CHECK(unbalanced.line == 2);
    CHECK(unbalanced.column == 1);
    CHECK(std::string(unbalanced.what()) == "line 2:1: '<eof>' expected near 'end'");

    SourceError doubled = SourceErrorOf("local x = 1\n  x = = 2\n");
    CHECK(doubled.line == 2);
    CHECK(doubled.column == 7);

    SourceError unclosed = SourceErrorOf("while true do\nlocal y = 1\n");
    CHECK(unclosed.line == 3);

    CHECK(SourceErrorOf("local s = 'abc").line == 1);
    CHECK(SourceErrorOf("x = 1 @ 2").column == 7);
    CHECK(SourceErrorOf("break").line == 1);
}

TEST_CASE("nested functions carry upvalue descriptors")
{
    Engine e;
    FunctionProto* main = CompileChunk(e, "local a = 1\nlocal b = 2\nlocal function f()\n  local function g() return a + b end\n  return g\nend\nreturn f");
    std::vector<const FunctionProto*> all = AllProtos(main);
    REQUIRE(all.size() == 3);
    const FunctionProto* f = all[1];
    const FunctionProto* g = all[2];
    CHECK(f->name == "f");
    CHECK(g->name == "g");
    REQUIRE(f->upvalues.size() == 2);
    CHECK(f->upvalues[0].name == "a");
    CHECK(f->upvalues[0].fromParentLocal);
    CHECK(f->upvalues[0].index == 0);
    CHECK(f->upvalues[1].name == "b");
    CHECK(f->upvalues[1].index == 1);
    REQUIRE(g->upvalues.size() == 2);
    CHECK_FALSE(g->upvalues[0].fromParentLocal);
    CHECK(g->upvalues[0].index == 0);
    CHECK_FALSE(g->upvalues[1].fromParentLocal);
    CHECK(g->upvalues[1].index == 1);
}

TEST_CASE("codegen selects variants from operand kinds")
{
    std::string d = Bytecode("local a = 1; local b = a + 2.5");
    CHECK(Contains(d, "Add_LC lhs=L0 rhs=K1(2.5) output=L1"));

    std::string loop = Bytecode("local i, n = 0, 3 while i < n do i = i + 1 end");
    CHECK(Contains(loop, "Jump_Loop loop=1"));

    std::string get = Bytecode("local o = {} return o.x");
    CHECK(Contains(get, "GetById base=L0 name=K0(\"x\")"));

    std::string global = Bytecode("g = 1 return g");
    CHECK(Contains(global, "SetGlobal name=K"));
    CHECK(Contains(global, "GetGlobal name=K"));
}

TEST_CASE("codegen is deterministic")
{
    for (const testing::CorpusFile& p : testing::LoadCorpus()) {
        Engine a;
        Engine b;
        std::vector<const FunctionProto*> pa = AllProtos(CompileChunk(a, p.source));
        std::vector<const FunctionProto*> pb = AllProtos(CompileChunk(b, p.source));
        REQUIRE(pa.size() == pb.size());
        for (size_t i = 0; i < pa.size(); i++)
            CHECK(pa[i]->cb.stream.bytes == pb[i]->cb.stream.bytes);
        CHECK(DumpProgramBytecode(a, AllProtos(CompileChunk(a, p.source))[0]) == DumpProgramBytecode(b, AllProtos(CompileChunk(b, p.source))[0]));
    }
}

TEST_CASE("stdlib examples")
{
    Engine e(InterpOnly());
    CHECK(Output(e, "print(1.5, \"a\", nil)") == "1.5\ta\tnil\n");
    CHECK(Output(e, "print(pcall(function() error(\"x\") end))") == "false\tx\n");
    CHECK(Output(e, "print(pcall(function(a, b) return a + b end, 1, 2))") == "true\t3\n");
    CHECK(Output(e, "print(math.sqrt(4), math.floor(2.7), math.abs(-3), math.max(1, 5, 2), math.min(4, 0.5))") == "2\t2\t3\t5\t0.5\n");
    CHECK(Output(e, "print(type(1), type('s'), type(nil), type(true), type({}), type(print))") == "number\tstring\tnil\tboolean\ttable\tfunction\n");
    CHECK(Output(e, "print(tonumber('12.5'), tonumber('x'), tonumber(' 7 '), tostring(3))") == "12.5\tnil\t7\t3\n");
    CHECK(Output(e, "print(select('#', 1, 2, 3), select(2, 'a', 'b', 'c'))") == "3\tb\tc\n");
    CHECK(Output(e, "print(pcall(math.floor, 'x'))") == "false\tbad argument #1 to 'floor' (number expected, got string)\n");
    CHECK(Output(e, "print(type(clock()))") == "number\n");
    CHECK(Output(e, "local function f(a, b) return b end print(f(1))") == "nil\n");
}

TEST_CASE("number and value stringization")
{
    Engine e(InterpOnly());
    CHECK(Output(e, "print(1e21, 1e20, 1e-7, 2.5e-300)") == "1e+21\t100000000000000000000\t1e-07\t2.5e-300\n");
    CHECK(Output(e, "print(1, -2, 0.1, 100000, 1 / 3)") == "1\t-2\t0.1\t100000\t0.3333333333333333\n");
    CHECK(Output(e, "print(1e300 * 1e10, -1e300 * 1e10, 0 / 0)") == "inf\t-inf\tnan\n");
    CHECK(Output(e, "print(true, false, nil)") == "true\tfalse\tnil\n");
    std::string t = Output(e, "print({})");
    CHECK(t.rfind("table:", 0) == 0);
    std::string f = Output(e, "print(print)");
    CHECK(f.rfind("function:", 0) == 0);
}

TEST_CASE("objects built in the same order share a hidden class")
{
    constexpr int kObjects = 50;
    Engine e(InterpOnly());
    InstallStdlib(e);
    size_t classesBefore = e.GetHeap().NumHiddenClasses();
    std::string src = "local objs = {} local s = 0\n"
                      "for i = 1, "
        + std::to_string(kObjects) + " do local o = {} o.a = i o.b = i * 2 objs[i] = o s = s + o.b end\n"
                                     "return s, objs[1], objs[" + std::to_string(kObjects) + "]";
    std::ostringstream sink;
    e.SetOutput(&sink);
    Counters before = e.Stats();
    std::vector<BoxedValue> r = RunSource(e, src);
    REQUIRE(r.size() == 3);
    CHECK(r[0].AsDouble() == kObjects * (kObjects + 1));
    CHECK(e.GetHeap().Table(r[1])->hiddenClass == e.GetHeap().Table(r[2])->hiddenClass);
    CHECK(e.GetHeap().NumHiddenClasses() == classesBefore + 2);
    // Three property sites, each missing once and hitting k - 1 times.
    CHECK(e.Stats().icMisses - before.icMisses == 3);
    CHECK(e.Stats().icHits - before.icHits == 3 * (kObjects - 1));
}

TEST_CASE("harness stats formats")
{
    const std::vector<std::string>& keys = StatsKeys();
    CHECK(keys == std::vector<std::string> { "bytecodesExecuted", "decodesPerformed", "branchesTaken", "icHits", "icMisses", "icStubsCreated", "tierUps", "osrEntries", "compiledBytecodes", "emittedCellBytes", "wallTimeMs" });

    RunConfig interp;
    interp.interpreterOnly = true;
    RunResult r = RunProgram(testing::LoadCorpusFile("fib.lua"), interp);
    CHECK(r.output == "6765\n");
    CHECK(r.stats.tierUps == 0);
    CHECK(r.stats.compiledBytecodes == 0);
    std::string text = FormatStats(r.stats, StatsFormat::Text);
    CHECK(text.rfind("bytecodesExecuted=", 0) == 0);
    CHECK(Contains(text, "\ntierUps=0\n"));
    CHECK(Contains(text, "\ncompiledBytecodes=0\n"));
    std::string csv = FormatStats(r.stats, StatsFormat::Csv);
    CHECK(csv.rfind("bytecodesExecuted,decodesPerformed,branchesTaken,icHits,icMisses,icStubsCreated,tierUps,osrEntries,compiledBytecodes,emittedCellBytes,wallTimeMs\n", 0) == 0);

    RunConfig now;
    now.tierUpThreshold = 0;
    RunResult t = RunProgram(testing::LoadCorpusFile("fib.lua"), now);
    CHECK(t.output == "6765\n");
    CHECK(t.stats.tierUps >= 1);
    CHECK(t.stats.decodesPerformed == 0);

    RunResult bad = RunProgram("error('boom')", interp);
    CHECK(bad.guestError);
    CHECK(bad.output == "error: boom\n");
    RunResult syntax = RunProgram("end", interp);
    CHECK(syntax.sourceError);
}

TEST_CASE("difftest reports agreement over the corpus")
{
    for (const testing::CorpusFile& p : testing::LoadCorpus()) {
        DifftestResult d = Difftest(p.source);
        CHECK_MESSAGE(d.ok, p.name);
        CHECK(d.report == "OK\n");
    }
    CHECK(DifftestThresholds() == std::vector<uint64_t> { 0, 1, 100, kNeverTierUp });
}

TEST_CASE("template dumps are deterministic and show hole decisions")
{
    std::string src = testing::LoadCorpusFile("add.lua");
    Engine a;
    Engine b;
    std::string da = DumpProgramTemplates(CompileChunk(a, src));
    std::string db = DumpProgramTemplates(CompileChunk(b, src));
    CHECK(da == db);
    CHECK(Contains(da, "stencil Add_"));
    CHECK(Contains(da, "adjusted(+1)"));
    CHECK(Contains(da, "direct"));
}
