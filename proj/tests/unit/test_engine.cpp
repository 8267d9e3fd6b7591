#include <doctest.h>

#include "../support/corpus.h"
#include "tiervm/common.h"
#include "tiervm/harness.h"
#include "tiervm/template_tier.h"

#include <sstream>

using namespace tiervm;

namespace {

std::vector<BoxedValue> Args(std::initializer_list<double> l)
{
    std::vector<BoxedValue> out;
    for (double d : l)
        out.push_back(BoxedValue::Double(d));
    return out;
}

// Compiles source with the stdlib, runs it, and returns its results.
std::vector<BoxedValue> Eval(Engine& e, const std::string& src)
{
    std::ostringstream sink;
    e.SetOutput(&sink);
    return RunSource(e, src);
}

std::string Output(Engine& e, const std::string& src)
{
    std::ostringstream out;
    e.SetOutput(&out);
    RunSource(e, src);
    return out.str();
}

Config InterpOnly()
{
    Config c;
    c.tiered = false;
    return c;
}


} // namespace

TEST_CASE("run_function examples")
{
    Engine e(InterpOnly());
    std::vector<BoxedValue> fib = Eval(e, "local function fib(n) if n < 2 then return n end return fib(n-1) + fib(n-2) end return fib");
    REQUIRE(fib.size() == 1);
    std::vector<BoxedValue> r = e.Run(fib[0], Args({ 20 }));
    REQUIRE(r.size() == 1);
    CHECK(r[0].AsDouble() == 6765);

    CHECK(Eval(e, "return").empty());
    CHECK(Eval(e, "local function f() end return f()").empty());

    try {
        Eval(e, "error('msg')");
        FAIL("expected a guest error");
    } catch (const GuestError& ex) {
        CHECK(std::string(ex.what()) == "msg");
        CHECK(e.GetHeap().Str(ex.value) == "msg");
    }
}

TEST_CASE("dispatch_step on hand-built bytecode")
{
    const GuestKinds& k = Kinds();
    Engine e(InterpOnly());
    BytecodeBuilder b(GuestRegistry());
    b.Emit(k.Add, { OperandValue::Local(0), OperandValue::Local(1), OperandValue::Local(2) });
    b.Emit(k.Return, { OperandValue::Range(2, 1) });
    FunctionProto* add = e.NewProto("add", b.Finish(), 2, false, 3);
    std::vector<BoxedValue> r = e.Run(e.NewClosure(add), Args({ 1, 2 }));
    REQUIRE(r.size() == 1);
    CHECK(r[0].AsDouble() == 3);
    CHECK(e.Stats().bytecodesExecuted == 2);
    CHECK(e.Stats().branchesTaken == 0);

    BytecodeBuilder c(GuestRegistry());
    uint32_t br = c.Emit(k.JmpIfLt, { OperandValue::Local(0), OperandValue::Local(1) });
    c.Emit(k.LoadConstant, { OperandValue::Cst(BoxedValue::Double(10)), OperandValue::Local(2) });
    c.Emit(k.Return, { OperandValue::Range(2, 1) });
    uint32_t target = c.Emit(k.LoadConstant, { OperandValue::Cst(BoxedValue::Double(20)), OperandValue::Local(2) });
    c.Emit(k.Return, { OperandValue::Range(2, 1) });
    c.SetBranchTarget(br, target);
    FunctionProto* pick = e.NewProto("pick", c.Finish(), 2, false, 3);
    uint64_t branchesBefore = e.Stats().branchesTaken;
    uint64_t bcBefore = e.Stats().bytecodesExecuted;
    r = e.Run(e.NewClosure(pick), Args({ 1, 2 }));
    CHECK(r[0].AsDouble() == 20);
    CHECK(e.Stats().branchesTaken == branchesBefore + 1);
    CHECK(e.Stats().bytecodesExecuted == bcBefore + 3);
    r = e.Run(e.NewClosure(pick), Args({ 2, 1 }));
    CHECK(r[0].AsDouble() == 10);
    CHECK(e.Stats().branchesTaken == branchesBefore + 1);
}

TEST_CASE("arithmetic on a table takes the slow path")
{
    Engine e(InterpOnly());
    std::vector<BoxedValue> r = Eval(e, "return pcall(function(t, x) return t + x end, {}, 1)");
    REQUIRE(r.size() == 2);
    CHECK_FALSE(r[0].IsTruthy());
    CHECK(e.GetHeap().Str(r[1]) == "attempt to perform arithmetic on a table value");
}

TEST_CASE("calls fill missing arguments and results with nil")
{
    Engine e;
    std::vector<BoxedValue> r = Eval(e, "local function f(a, b) return b end return f(1)");
    REQUIRE(r.size() == 1);
    CHECK(r[0].IsNil());
    r = Eval(e, "local function f() return 1, 2, 3 end local a, b, c, d, x = f() return x, c");
    REQUIRE(r.size() == 2);
    CHECK(r[0].IsNil());
    CHECK(r[1].AsDouble() == 3);
    r = Eval(e, "local function f(a) return a end return f(1, 2, 3)");
    REQUIRE(r.size() == 1);
    CHECK(r[0].AsDouble() == 1);
}

TEST_CASE("in-place calls copy no arguments")
{
    Engine e(InterpOnly());
    Eval(e, "local function fib(n) if n < 2 then return n end return fib(n-1) + fib(n-2) end return fib(15)");
    CHECK(e.Stats().argCopies == 0);
    Engine v(InterpOnly());
    Eval(v, "local function f(a, ...) return select('#', ...) end return f(1, 2, 3)");
    CHECK(v.Stats().argCopies > 0);
}

TEST_CASE("variadic results")
{
    Engine e;
    std::vector<BoxedValue> r = Eval(e, "local function g(...) return 0, ... end return g(1, 2)");
    REQUIRE(r.size() == 3);
    CHECK(r[2].AsDouble() == 2);
    r = Eval(e, "local function n(...) return select('#', ...) end return n(1, 2)");
    CHECK(r[0].AsDouble() == 2);
    r = Eval(e, "local function z() end return select('#', z())");
    CHECK(r[0].AsDouble() == 0);
}

TEST_CASE("a stale variadic result read asserts")
{
    if (!kDebugChecks)
        return;
    const GuestKinds& k = Kinds();
    Engine e(InterpOnly());
    BytecodeBuilder b(GuestRegistry());
    b.Emit(k.NewTable, { OperandValue::Local(0) });
    b.Emit(k.VarArgs, { OperandValue::Local(1), OperandValue::Lit(-1) });
    b.Emit(k.Mov, { OperandValue::Local(0), OperandValue::Local(2) });
    b.Emit(k.TableSetVarRes, { OperandValue::Local(0), OperandValue::Lit(1) });
    b.Emit(k.Return, { OperandValue::Range(0, 1) });
    FunctionProto* p = e.NewProto("stale", b.Finish(), 0, true, 3);
    CHECK_THROWS_AS(e.Run(e.NewClosure(p), Args({ 1, 2 })), AssertionFailure);
}

TEST_CASE("upvalue semantics")
{
    Engine e;
    std::vector<BoxedValue> r = Eval(e, R"(
        local function pair()
          local v = 0
          return function() return v end, function(x) v = x end
        end
        local get, set = pair()
        set(5)
        local a = get()
        set(a + 1)
        return a, get()
    )");
    CHECK(r[0].AsDouble() == 5);
    CHECK(r[1].AsDouble() == 6);

    r = Eval(e, R"(
        local fs = {}
        for i = 1, 2 do
          local x = i
          fs[i] = function() return x end
          x = x + 10
        end
        return fs[1](), fs[2]()
    )");
    CHECK(r[0].AsDouble() == 11);
    CHECK(r[1].AsDouble() == 12);
}

TEST_CASE("pcall catches errors raised frames below")
{
    Engine e;
    std::vector<BoxedValue> r = Eval(e, "local function f() error('deep') end local function g() f() end return pcall(g)");
    REQUIRE(r.size() == 2);
    CHECK(r[0].word == BoxedValue::Bool(false).word);
    CHECK(e.GetHeap().Str(r[1]) == "deep");
    r = Eval(e, "return pcall(function(...) return ... end, 1, 2)");
    REQUIRE(r.size() == 3);
    CHECK(r[0].AsBool());
    CHECK_THROWS_AS(Eval(e, "local t = nil return t.x"), GuestError);
}

namespace {

LibAction JumpToGrandparent(Engine& e, LibCall&)
{
    std::vector<FrameInfo> frames = e.WalkFrames();
    // frames[0] is this library frame, frames[1] its caller.
    return LibAction::LongJump(frames.at(2).stackBase, { BoxedValue::Double(42) });
}

LibAction CheckFrames(Engine& e, LibCall& c)
{
    std::vector<FrameInfo> frames = e.WalkFrames();
    const auto& stack = e.Ctx().stack;
    bool ok = true;
    for (size_t i = 0; i + 1 < frames.size(); i++) {
        const FrameInfo& f = frames[i];
        ok = ok && f.callee.IsFunction();
        ok = ok && stack[f.stackBase + kHdrCallee].word == f.callee.word;
        uint32_t callerBase = uint32_t(stack[f.stackBase + kHdrCallerBase].word);
        ok = ok && callerBase == frames[i + 1].stackBase;
        ok = ok && f.stackBase - kHeaderSlots - f.numVarArgs > callerBase;
    }
    // The caller of this check is a vararg function; report its varargs.
    const FrameInfo& caller = frames.at(1);
    std::vector<BoxedValue> out { BoxedValue::Bool(ok) };
    for (uint32_t i = 0; i < caller.numVarArgs; i++)
        out.push_back(stack[caller.stackBase - kHeaderSlots - caller.numVarArgs + i]);
    (void)c;
    return LibAction::Return(std::move(out));
}

} // namespace

TEST_CASE("long_jump to the grandparent discards two frames")
{
    Engine e;
    InstallStdlib(e);
    e.SetGlobal("jump", e.LibFunction(e.RegisterLib("jump", JumpToGrandparent)));
    std::vector<BoxedValue> r = Eval(e, R"(
        local function c() local x = jump() return x + 1000 end
        local function b() local y = c() return y + 100 end
        local function a() local z = b() return z + 1 end
        return a()
    )");
    REQUIRE(r.size() == 1);
    CHECK(r[0].AsDouble() == 43);
    CHECK(e.Stats().framesDiscarded == 2);
}

TEST_CASE("frame layout: varargs, then header, then locals")
{
    Engine e;
    InstallStdlib(e);
    e.SetGlobal("check", e.LibFunction(e.RegisterLib("check", CheckFrames)));
    std::vector<BoxedValue> r = Eval(e, R"(
        local function v(a, ...) local ok, x, y = check() return ok, x, y end
        local function outer() local ok, x, y = v(1, 7, 8) return ok, x, y end
        local ok1, five = v(0, 5)
        local ok2, seven, eight = outer()
        return ok1, five, ok2, seven, eight
    )");
    REQUIRE(r.size() == 5);
    CHECK(r[0].AsBool());
    CHECK(r[1].AsDouble() == 5);
    CHECK(r[2].AsBool());
    CHECK(r[3].AsDouble() == 7);
    CHECK(r[4].AsDouble() == 8);
}

TEST_CASE("tail calls run in bounded frames")
{
    const char* src = R"(
        local isEven, isOdd
        function isEven(n) if n == 0 then return true end return isOdd(n - 1) end
        function isOdd(n) if n == 0 then return false end return isEven(n - 1) end
        return isEven
    )";
    uint64_t peak[2];
    int i = 0;
    for (double n : { 1e3, 1e6 }) {
        Engine e;
        std::vector<BoxedValue> f = Eval(e, src);
        e.Stats().peakFrames = 0;
        std::vector<BoxedValue> r = e.Run(f[0], Args({ n }));
        CHECK(r[0].AsBool());
        peak[i++] = e.Stats().peakFrames;
    }
    CHECK(peak[0] == peak[1]);
    CHECK(peak[1] <= 2);
}

TEST_CASE("unbounded recursion raises a stack overflow error")
{
    Config cfg;
    cfg.stackCapSlots = 1u << 16;
    Engine e(cfg);
    std::vector<BoxedValue> r = Eval(e, "local function f(n) return 1 + f(n + 1) end return pcall(f, 0)");
    REQUIRE(r.size() == 2);
    CHECK_FALSE(r[0].IsTruthy());
    CHECK(e.GetHeap().Str(r[1]) == "stack overflow");
}

TEST_CASE("tier-up thresholds")
{
    const char* fib = "local function fib(n) if n < 2 then return n end return fib(n-1) + fib(n-2) end print(fib(12))";
    Config zero;
    zero.tierUpThreshold = 0;
    Engine e0(zero);
    CHECK(Output(e0, fib) == "144\n");
    CHECK(e0.Stats().tierUps >= 1);
    CHECK(e0.Stats().decodesPerformed == 0);

    Config never;
    never.tierUpThreshold = kNeverTierUp;
    Engine en(never);
    CHECK(Output(en, fib) == "144\n");
    CHECK(en.Stats().tierUps == 0);
    for (const auto& p : en.Protos())
        CHECK(p->cb.tierState == TierState::InterpreterOnly);
}

TEST_CASE("hot loop OSR-enters tier 2 mid-loop")
{
    Config cfg;
    cfg.tierUpThreshold = 1000;
    Engine e(cfg);
    CHECK(Output(e, "local s = 0 for i = 1, 100000 do s = s + i end print(s)") == "5000050000\n");
    CHECK(e.Stats().osrEntries == 1);
    CHECK(e.Stats().tier2Bytecodes > e.Stats().bytecodesExecuted / 2);
    Config noOsr = cfg;
    noOsr.osr = false;
    Engine n(noOsr);
    Output(n, "local s = 0 for i = 1, 100000 do s = s + i end print(s)");
    CHECK(n.Stats().osrEntries == 0);
    CHECK(n.Stats().tier2Bytecodes == 0);
}

TEST_CASE("delta accounting matches a per-bytecode count on the corpus")
{
    for (const auto& f : testing::LoadCorpus()) {
        for (uint64_t threshold : { kNeverTierUp, uint64_t(0), uint64_t(100) }) {
            Config cfg;
            cfg.naiveCounting = true;
            cfg.tierUpThreshold = threshold;
            Engine e(cfg);
            std::ostringstream out;
            e.SetOutput(&out);
            try {
                RunSource(e, f.source);
            } catch (const GuestError&) {
            }
            INFO(f.name << " threshold " << threshold);
            CHECK(e.Stats().bytecodesExecuted == e.Stats().naiveBytecodes);
        }
    }
}

TEST_CASE("interpreter runs are deterministic")
{
    for (const auto& f : testing::LoadCorpus()) {
        RunConfig rc;
        rc.interpreterOnly = true;
        RunResult a = RunProgram(f.source, rc);
        RunResult b = RunProgram(f.source, rc);
        a.stats.wallTimeMs = b.stats.wallTimeMs = 0;
        INFO(f.name);
        CHECK(a.output == b.output);
        CHECK(StatsValues(a.stats) == StatsValues(b.stats));
    }
}

TEST_CASE("unsupported bytecodes pin the code block to the interpreter")
{
    const GuestKinds& k = Kinds();
    Config cfg;
    cfg.tierUpThreshold = 0;
    Engine e(cfg);
    BytecodeBuilder b(GuestRegistry());
    b.Emit(k.Probe, {});
    b.Emit(k.Return, { OperandValue::Range(0, 1) });
    FunctionProto* p = e.NewProto("probe", b.Finish(), 1, false, 1);
    std::vector<BoxedValue> r = e.Run(e.NewClosure(p), Args({ 3 }));
    CHECK(r[0].AsDouble() == 3);
    CHECK(p->cb.pinned);
    CHECK(p->cb.tierState == TierState::InterpreterOnly);
    CHECK(e.Stats().compileFailures == 1);
    e.Run(e.NewClosure(p), Args({ 3 }));
    CHECK(e.Stats().compileFailures == 1);
}
