#include "tiervm/guest_lang.h"

#include <chrono>
#include <cmath>
#include <cstdlib>

namespace tiervm {

namespace {

BoxedValue Arg(Engine& e, const LibCall& c, uint32_t i)
{
    return i < c.numArgs ? e.Ctx().stack[c.frameBase + i] : BoxedValue::Nil();
}

LibAction Fail(Engine& e, const std::string& msg) { return LibAction::Throw(e.Str(msg)); }

LibAction NumberArg(Engine& e, const LibCall& c, uint32_t i, const char* fn, double& out)
{
    BoxedValue v = Arg(e, c, i);
    if (!v.IsDouble())
        return Fail(e, std::string("bad argument #") + std::to_string(i + 1) + " to '" + fn + "' (number expected, got " + Engine::TypeName(v) + ")");
    out = v.AsDouble();
    return LibAction::Return({});
}

#define TIERVM_NUMBER_ARG(i, name, var)                      \
    double var = 0;                                          \
    {                                                        \
        LibAction a = NumberArg(e, c, i, name, var);         \
        if (a.kind == LibAction::Kind::Throw)                \
            return a;                                        \
    }

LibAction Print(Engine& e, LibCall& c)
{
    std::string line;
    for (uint32_t i = 0; i < c.numArgs; i++) {
        if (i)
            line += '\t';
        line += e.ToString(Arg(e, c, i));
    }
    line += '\n';
    e.Out() << line;
    return LibAction::Return({});
}

LibAction Clock(Engine&, LibCall&)
{
    using namespace std::chrono;
    static const steady_clock::time_point start = steady_clock::now();
    return LibAction::Return({ BoxedValue::Double(duration<double>(steady_clock::now() - start).count()) });
}

LibAction Floor(Engine& e, LibCall& c)
{
    TIERVM_NUMBER_ARG(0, "floor", x);
    return LibAction::Return({ BoxedValue::Double(std::floor(x)) });
}

LibAction Sqrt(Engine& e, LibCall& c)
{
    TIERVM_NUMBER_ARG(0, "sqrt", x);
    return LibAction::Return({ BoxedValue::Double(std::sqrt(x)) });
}

LibAction Abs(Engine& e, LibCall& c)
{
    TIERVM_NUMBER_ARG(0, "abs", x);
    return LibAction::Return({ BoxedValue::Double(std::fabs(x)) });
}

template<bool IsMax>
LibAction MinMax(Engine& e, LibCall& c)
{
    const char* name = IsMax ? "max" : "min";
    TIERVM_NUMBER_ARG(0, name, best);
    for (uint32_t i = 1; i < c.numArgs; i++) {
        TIERVM_NUMBER_ARG(i, name, x);
        if (IsMax ? x > best : x < best)
            best = x;
    }
    return LibAction::Return({ BoxedValue::Double(best) });
}

uint32_t g_pcallContinuation = 0;

LibAction PCall(Engine& e, LibCall& c)
{
    if (c.numArgs == 0)
        return Fail(e, "bad argument #1 to 'pcall' (value expected)");
    std::vector<BoxedValue> args;
    for (uint32_t i = 1; i < c.numArgs; i++)
        args.push_back(Arg(e, c, i));
    return LibAction::Call(Arg(e, c, 0), std::move(args), g_pcallContinuation);
}

LibAction PCallDone(Engine&, LibCall& c)
{
    if (c.isError)
        return LibAction::Return({ BoxedValue::Bool(false), c.error });
    std::vector<BoxedValue> out { BoxedValue::Bool(true) };
    out.insert(out.end(), c.results.begin(), c.results.end());
    return LibAction::Return(std::move(out));
}

LibAction Error(Engine& e, LibCall& c) { return LibAction::Throw(Arg(e, c, 0)); }

LibAction ToStringFn(Engine& e, LibCall& c) { return LibAction::Return({ e.Str(e.ToString(Arg(e, c, 0))) }); }

LibAction ToNumber(Engine& e, LibCall& c)
{
    BoxedValue v = Arg(e, c, 0);
    if (v.IsDouble())
        return LibAction::Return({ v });
    if (v.IsString()) {
        const std::string& s = e.GetHeap().Str(v);
        const char* begin = s.c_str();
        char* end = nullptr;
        double d = std::strtod(begin, &end);
        while (end && *end && std::isspace(static_cast<unsigned char>(*end)))
            end++;
        if (end != begin && end && *end == '\0')
            return LibAction::Return({ BoxedValue::Double(d) });
    }
    return LibAction::Return({ BoxedValue::Nil() });
}

LibAction Type(Engine& e, LibCall& c)
{
    if (c.numArgs == 0)
        return Fail(e, "bad argument #1 to 'type' (value expected)");
    return LibAction::Return({ e.Str(Engine::TypeName(Arg(e, c, 0))) });
}

LibAction Select(Engine& e, LibCall& c)
{
    BoxedValue n = Arg(e, c, 0);
    uint32_t rest = c.numArgs ? c.numArgs - 1 : 0;
    if (n.IsString() && e.GetHeap().Str(n) == "#")
        return LibAction::Return({ BoxedValue::Double(rest) });
    if (!n.IsDouble() || !(n.AsDouble() >= 1))
        return Fail(e, "bad argument #1 to 'select' (index out of range)");
    std::vector<BoxedValue> out;
    double first = std::floor(n.AsDouble());
    for (uint32_t i = 1; i <= rest; i++) {
        if (i >= first)
            out.push_back(Arg(e, c, i));
    }
    return LibAction::Return(std::move(out));
}

void Define(Engine& e, BoxedValue table, const char* name, LibFn fn)
{
    BoxedValue f = e.LibFunction(e.RegisterLib(name, fn));
    if (table.IsNil())
        e.SetGlobal(name, f);
    else
        e.GetHeap().PutProperty(e.GetHeap().Table(table), e.Str(name).HeapHandle(), f);
}

} // namespace

void InstallStdlib(Engine& e)
{
    if (e.GetGlobal("print").IsFunction())
        return;
    g_pcallContinuation = e.RegisterContinuation(PCallDone, true);
    BoxedValue global = BoxedValue::Nil();
    Define(e, global, "print", Print);
    Define(e, global, "clock", Clock);
    Define(e, global, "pcall", PCall);
    Define(e, global, "error", Error);
    Define(e, global, "tostring", ToStringFn);
    Define(e, global, "tonumber", ToNumber);
    Define(e, global, "type", Type);
    Define(e, global, "select", Select);
    BoxedValue math = e.GetHeap().NewTable();
    Define(e, math, "floor", Floor);
    Define(e, math, "sqrt", Sqrt);
    Define(e, math, "abs", Abs);
    Define(e, math, "max", MinMax<true>);
    Define(e, math, "min", MinMax<false>);
    e.SetGlobal("math", math);
}

} // namespace tiervm
