#include "tiervm/vm.h"

#include "tiervm/common.h"
#include "tiervm/guest_bytecodes.h"
#include "tiervm/template_tier.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <iostream>

namespace tiervm {

CodeBlock::CodeBlock() = default;
CodeBlock::~CodeBlock() = default;
CodeBlock::CodeBlock(CodeBlock&&) noexcept = default;
CodeBlock& CodeBlock::operator=(CodeBlock&&) noexcept = default;

void CodeBlock::Init(BytecodeStream s)
{
    stream = std::move(s);
    const BytecodeRegistry& reg = GuestRegistry();
    icSlots.assign(stream.numIcSlots, InterpreterICSlot {});
    ordinalOfPos.assign(stream.bytes.size(), ~0u);
    for (uint32_t ord = 0; ord < stream.NumBytecodes(); ord++) {
        uint32_t pos = stream.offsets[ord];
        ordinalOfPos[pos] = ord;
        int32_t slot = stream.icSlots[ord];
        if (slot < 0)
            continue;
        const BytecodeDef& def = reg.Def(reg.Layout(ReadOpcode(stream.bytes, pos)).kind);
        GuestIcKinds()[def.ics[0].descriptor].InitSlot(icSlots[slot]);
    }
}

Engine::Engine(Config cfg)
    : m_cfg(cfg)
{
    m_ctx.globalObject = m_heap.NewTable();
    m_ctx.stack.assign(4096, BoxedValue::Nil());
}

Engine::~Engine() = default;

const BytecodeRegistry& Engine::Registry() const { return GuestRegistry(); }

std::ostream& Engine::Out() { return m_out ? *m_out : std::cout; }

FunctionProto* Engine::AddProto(std::unique_ptr<FunctionProto> p)
{
    m_protos.push_back(std::move(p));
    return m_protos.back().get();
}

FunctionProto* Engine::NewProto(std::string name, BytecodeStream s, uint32_t numFixedParams, bool varArgs, uint32_t numSlots)
{
    auto p = std::make_unique<FunctionProto>();
    p->name = std::move(name);
    p->cb.Init(std::move(s));
    p->numFixedParams = numFixedParams;
    p->acceptsVarArgs = varArgs;
    p->numSlots = numSlots;
    return AddProto(std::move(p));
}

BoxedValue Engine::NewClosure(FunctionProto* p)
{
    TIERVM_ASSERT(p->upvalues.empty(), "closures with upvalues are created by CreateClosure");
    return m_heap.NewClosure(p);
}

int32_t Engine::RegisterLib(const std::string& name, LibFn fn)
{
    int32_t id = static_cast<int32_t>(m_libs.size());
    m_libs.push_back({ name, fn, m_heap.NewLibFunction(id) });
    return id;
}

uint32_t Engine::RegisterContinuation(LibFn fn, bool catcher)
{
    m_continuations.push_back({ fn, catcher });
    return static_cast<uint32_t>(m_continuations.size() - 1);
}

BoxedValue Engine::LibFunction(int32_t id) { return m_libs.at(id).value; }

void Engine::SetGlobal(std::string_view name, BoxedValue v)
{
    m_heap.PutProperty(m_heap.Table(m_ctx.globalObject), Str(name).HeapHandle(), v);
}

BoxedValue Engine::GetGlobal(std::string_view name)
{
    return m_heap.GetProperty(m_heap.Table(m_ctx.globalObject), Str(name).HeapHandle());
}

std::string Engine::FormatNumber(double d)
{
    if (std::isnan(d))
        return "nan";
    // Shortest round-trip digits; positional notation for magnitudes in
    // [1e-6, 1e21), exponent notation outside.
    double mag = std::fabs(d);
    bool fixed = mag == 0 || std::isinf(mag) || (mag >= 1e-6 && mag < 1e21);
    char buf[512];
    auto r = std::to_chars(buf, buf + sizeof(buf), d, fixed ? std::chars_format::fixed : std::chars_format::scientific);
    return std::string(buf, r.ptr);
}

const char* Engine::TypeName(BoxedValue v)
{
    if (v.IsNil())
        return "nil";
    if (v.IsBool())
        return "boolean";
    if (v.IsDouble())
        return "number";
    if (v.IsString())
        return "string";
    if (v.IsFunction())
        return "function";
    return "table";
}

std::string Engine::ToString(BoxedValue v) const
{
    if (v.IsNil())
        return "nil";
    if (v.IsBool())
        return v.AsBool() ? "true" : "false";
    if (v.IsDouble())
        return FormatNumber(v.AsDouble());
    if (v.IsString())
        return m_heap.Str(v);
    return std::string(v.IsFunction() ? "function:" : "table:") + std::to_string(v.HeapHandle());
}

std::vector<FrameInfo> Engine::WalkFrames() const
{
    std::vector<FrameInfo> out;
    if (!m_st)
        return out;
    uint32_t b = m_st->stackBase;
    for (uint32_t i = 0; i < m_frameDepth; i++) {
        FrameInfo f;
        f.stackBase = b;
        f.callee = m_ctx.stack[b + kHdrCallee];
        f.returnSite = ReturnSite::Unpack(m_ctx.stack[b + kHdrReturnSite].word);
        f.numVarArgs = uint32_t(m_ctx.stack[b + kHdrNumVarArgs].word);
        out.push_back(f);
        if (f.returnSite.kind == ReturnKind::Host)
            break;
        b = uint32_t(m_ctx.stack[b + kHdrCallerBase].word);
    }
    return out;
}

void Engine::EnsureStack(uint32_t needed)
{
    if (needed <= m_ctx.stack.size())
        return;
    size_t n = m_ctx.stack.size();
    while (n < needed)
        n *= 2;
    m_ctx.stack.resize(std::min<size_t>(n, m_cfg.stackCapSlots), BoxedValue::Nil());
}

void Engine::PushFrame()
{
    m_frameDepth++;
    m_counters.peakFrames = std::max<uint64_t>(m_counters.peakFrames, m_frameDepth);
}

bool Engine::TryCompile(CodeBlock& cb)
{
    if (cb.code)
        return true;
    if (cb.pinned)
        return false;
    cb.tierState = TierState::Compiling;
    try {
        cb.code = Compile(cb, m_cfg, m_counters);
    } catch (const CompileUnsupported&) {
        cb.pinned = true;
        cb.tierState = TierState::InterpreterOnly;
        m_counters.compileFailures++;
        return false;
    }
    cb.tierState = TierState::Tiered;
    m_counters.tierUps++;
    m_counters.compiledBytecodes += cb.stream.NumBytecodes();
    m_counters.emittedCellBytes += cb.code->report.emitted.cellBytes;
    return true;
}

DecodedBytecode Engine::DecodeAt(const CodeBlock& cb, uint32_t pos)
{
    m_counters.decodesPerformed++;
    return Decode(GuestRegistry(), cb.stream, pos);
}

void Engine::Account(const PinnedState& st, uint32_t throughOrd)
{
    TIERVM_DEBUG_ASSERT(throughOrd + 1 >= m_lastOrd, "profiling accounting point precedes the last one");
    uint64_t n = throughOrd + 1 - m_lastOrd;
    st.cb->bytecodesExecuted += n;
    m_counters.bytecodesExecuted += n;
    if (st.mode == ExecMode::Jit)
        m_counters.tier2Bytecodes += n;
    m_lastOrd = throughOrd + 1;
}

void Engine::TakeBranch(const PinnedState& st, uint32_t fromOrd, uint32_t toOrd)
{
    Account(st, fromOrd);
    m_lastOrd = toOrd;
    m_counters.branchesTaken++;
}

void Engine::MaybeOsr(PinnedState& st, uint32_t targetOrd)
{
    if (!m_cfg.tiered || !m_cfg.osr)
        return;
    CodeBlock& cb = *st.cb;
    if (!cb.code) {
        if (cb.pinned || cb.bytecodesExecuted < m_cfg.tierUpThreshold)
            return;
        if (!TryCompile(cb))
            return;
    }
    st.mode = ExecMode::Jit;
    st.pos = cb.code->bcToCell[targetOrd];
    m_counters.osrEntries++;
}

void Engine::EnterFunction(PinnedState& st, FunctionProto* proto, uint32_t base)
{
    st.stackBase = base;
    st.cb = &proto->cb;
    m_lastOrd = 0;
    CodeBlock& cb = proto->cb;
    if (m_cfg.tiered && !cb.code && !cb.pinned && cb.bytecodesExecuted >= m_cfg.tierUpThreshold)
        TryCompile(cb);
    if (cb.code) {
        st.mode = ExecMode::Jit;
        st.pos = cb.code->bcToCell[0];
    } else {
        st.mode = ExecMode::Interp;
        st.pos = 0;
    }
}

void Engine::CallValue(PinnedState& st, uint32_t c, uint32_t numArgs, ReturnSite rs, uint32_t callerBase)
{
    BoxedValue fnv = m_ctx.stack[c];
    FunctionObject* fo = m_heap.Function(fnv);
    if (!fo->proto) {
        uint32_t b = c + kHeaderSlots;
        if (b + numArgs + 64 > m_cfg.stackCapSlots) {
            ThrowError(st, Str("stack overflow"));
            return;
        }
        EnsureStack(b + numArgs + 64);
        auto& stack = m_ctx.stack;
        stack[b + kHdrCallee] = fnv;
        stack[b + kHdrCallerBase] = BoxedValue::FromWord(callerBase);
        stack[b + kHdrReturnSite] = BoxedValue::FromWord(rs.Pack());
        stack[b + kHdrNumVarArgs] = BoxedValue::FromWord(numArgs);
        PushFrame();
        st.stackBase = b;
        LibCall call;
        call.frameBase = b;
        call.numArgs = numArgs;
        ProcessLibAction(st, b, m_libs[fo->libId].fn(*this, call));
        return;
    }
    FunctionProto* proto = fo->proto;
    uint32_t nf = proto->numFixedParams;
    uint32_t nva = 0;
    uint32_t b = c + kHeaderSlots;
    uint64_t need = uint64_t(c) + kHeaderSlots + numArgs + kHeaderSlots + nf + proto->numSlots + 64;
    if (need > m_cfg.stackCapSlots) {
        ThrowError(st, Str("stack overflow"));
        return;
    }
    EnsureStack(uint32_t(need));
    auto& stack = m_ctx.stack;
    if (proto->acceptsVarArgs && numArgs > nf) {
        // Varargs stay in place; the header and fixed arguments move above them.
        nva = numArgs - nf;
        uint32_t h = c + kHeaderSlots + numArgs;
        b = h + kHeaderSlots;
        for (uint32_t i = 0; i < nf; i++)
            stack[b + i] = stack[c + kHeaderSlots + i];
        m_counters.argCopies += nf;
    } else {
        for (uint32_t i = numArgs; i < nf; i++)
            stack[b + i] = BoxedValue::Nil();
    }
    stack[b + kHdrCallee] = fnv;
    stack[b + kHdrCallerBase] = BoxedValue::FromWord(callerBase);
    stack[b + kHdrReturnSite] = BoxedValue::FromWord(rs.Pack());
    stack[b + kHdrNumVarArgs] = BoxedValue::FromWord(nva);
    PushFrame();
    EnterFunction(st, proto, b);
}

Flow Engine::DoCall(PinnedState& st, const ExecSite& site, uint32_t base, uint32_t numArgs, bool passVarRes, bool checkedFunction)
{
    uint32_t c = st.stackBase + base;
    if (passVarRes) {
        const std::vector<BoxedValue>& vr = TakeVarRes(st, site.ord);
        EnsureStack(c + kHeaderSlots + numArgs + uint32_t(vr.size()) + 1);
        std::copy(vr.begin(), vr.end(), m_ctx.stack.begin() + c + kHeaderSlots + numArgs);
        numArgs += uint32_t(vr.size());
    }
    BoxedValue fnv = m_ctx.stack[c];
    if (!checkedFunction && !fnv.IsFunction())
        return ThrowMessage(st, site, std::string("attempt to call a ") + TypeName(fnv) + " value");
    Account(st, site.ord);
    CallValue(st, c, numArgs, { ReturnKind::Bytecode, site.tier, site.resumeId }, st.stackBase);
    return Flow::Transferred;
}

Flow Engine::DoTailCall(PinnedState& st, const ExecSite& site, uint32_t base, uint32_t numArgs, bool passVarRes)
{
    uint32_t b = st.stackBase;
    uint32_t src = b + base;
    if (passVarRes) {
        const std::vector<BoxedValue>& vr = TakeVarRes(st, site.ord);
        EnsureStack(src + kHeaderSlots + numArgs + uint32_t(vr.size()) + 1);
        std::copy(vr.begin(), vr.end(), m_ctx.stack.begin() + src + kHeaderSlots + numArgs);
        numArgs += uint32_t(vr.size());
    }
    auto& stack = m_ctx.stack;
    BoxedValue fnv = stack[src];
    if (!fnv.IsFunction())
        return ThrowMessage(st, site, std::string("attempt to call a ") + TypeName(fnv) + " value");
    Account(st, site.ord);
    uint32_t nva = uint32_t(stack[b + kHdrNumVarArgs].word);
    uint32_t frameStart = b - kHeaderSlots - nva;
    ReturnSite rs = ReturnSite::Unpack(stack[b + kHdrReturnSite].word);
    uint32_t callerBase = uint32_t(stack[b + kHdrCallerBase].word);
    CloseUpvalues(b);
    for (uint32_t i = 0; i < kHeaderSlots + numArgs; i++)
        stack[frameStart + i] = stack[src + i];
    PopFrame();
    CallValue(st, frameStart, numArgs, rs, callerBase);
    return Flow::Transferred;
}

void Engine::DoReturn(PinnedState& st, uint32_t frameBase, const BoxedValue* vals, uint32_t n)
{
    std::vector<BoxedValue> values(vals, vals + n);
    auto& stack = m_ctx.stack;
    ReturnSite rs = ReturnSite::Unpack(stack[frameBase + kHdrReturnSite].word);
    uint32_t callerBase = uint32_t(stack[frameBase + kHdrCallerBase].word);
    CloseUpvalues(frameBase);
    PopFrame();
    switch (rs.kind) {
    case ReturnKind::Host:
        m_hostResults = std::move(values);
        st.mode = ExecMode::Exit;
        return;
    case ReturnKind::Lib: {
        st.stackBase = callerBase;
        LibCall call;
        call.frameBase = callerBase;
        call.numArgs = uint32_t(stack[callerBase + kHdrNumVarArgs].word);
        call.results = values;
        ProcessLibAction(st, callerBase, m_continuations[rs.id].fn(*this, call));
        return;
    }
    case ReturnKind::Bytecode: {
        st.stackBase = callerBase;
        st.cb = &m_heap.Function(stack[callerBase + kHdrCallee])->proto->cb;
        st.pos = rs.id;
        st.mode = rs.tier ? ExecMode::Jit : ExecMode::Interp;
        m_retBuf = std::move(values);
        m_pendingReturn = true;
        return;
    }
    }
}

namespace {

void WriteResults(Engine& e, PinnedState& st, uint32_t base, int64_t numRets, uint32_t ord, const std::vector<BoxedValue>& vals)
{
    if (numRets < 0) {
        e.StoreVarRes(st, ord, vals.data(), uint32_t(vals.size()));
        return;
    }
    for (int64_t i = 0; i < numRets; i++)
        e.Slot(st, base + uint32_t(i)) = size_t(i) < vals.size() ? vals[i] : BoxedValue::Nil();
}

} // namespace

void Engine::FinishReturnInterp(PinnedState& st)
{
    m_pendingReturn = false;
    DecodedBytecode d = DecodeAt(*st.cb, st.pos);
    TIERVM_DEBUG_ASSERT(d.kind == Kinds().Call, "return continuation must resume at a call");
    uint32_t ord = st.cb->OrdinalOf(st.pos);
    WriteResults(*this, st, d.ops[0].ord, d.ops[1].lit, ord, m_retBuf);
    st.pos += d.length;
    m_lastOrd = ord + 1;
}

void Engine::FinishReturnJit(PinnedState& st)
{
    m_pendingReturn = false;
    const CodeObject& co = *st.cb->code;
    const Cell& c = co.fastCells[st.pos];
    const StencilTemplate& s = *c.stencil;
    const uint64_t* p = co.Payload(c);
    const HoleSlot& baseHole = s.fast.holes[s.FindHole(HoleRoot::OperandSlot, 0)];
    const HoleSlot& retsHole = s.fast.holes[s.FindHole(HoleRoot::LiteralOperand, 1)];
    uint32_t base = uint32_t(ReadHole(baseHole.expr, baseHole.decision, p[baseHole.slot]) / 8);
    int64_t numRets = ReadHole(retsHole.expr, retsHole.decision, p[retsHole.slot]);
    WriteResults(*this, st, base, numRets, c.ord, m_retBuf);
    st.pos++;
    m_lastOrd = c.ord + 1;
}

void Engine::StoreVarRes(const PinnedState& st, uint32_t producerOrd, const BoxedValue* vals, uint32_t n)
{
    m_varRes.assign(vals, vals + n);
    m_varResValid = true;
    m_varResFrame = st.stackBase;
    m_varResConsumer = producerOrd + 1;
    m_varResCb = st.cb;
}

const std::vector<BoxedValue>& Engine::TakeVarRes(const PinnedState& st, uint32_t consumerOrd)
{
    TIERVM_DEBUG_ASSERT(m_varResValid && m_varResFrame == st.stackBase && m_varResConsumer == consumerOrd && m_varResCb == st.cb,
        "variadic results must be consumed by the bytecode right after their producer");
    m_varResValid = false;
    return m_varRes;
}

Upvalue* Engine::FindOrCreateUpvalue(uint32_t absSlot)
{
    auto& open = m_ctx.openUpvalues;
    auto it = std::lower_bound(open.begin(), open.end(), absSlot, [](const Upvalue* u, uint32_t s) { return u->slot < s; });
    if (it != open.end() && (*it)->slot == absSlot)
        return *it;
    Upvalue* u = m_heap.NewUpvalue();
    u->open = true;
    u->slot = absSlot;
    open.insert(it, u);
    return u;
}

void Engine::CloseUpvalues(uint32_t floor)
{
    auto& open = m_ctx.openUpvalues;
    while (!open.empty() && open.back()->slot >= floor) {
        Upvalue* u = open.back();
        u->closed = m_ctx.stack[u->slot];
        u->open = false;
        open.pop_back();
    }
}

Flow Engine::ThrowFromBytecode(PinnedState& st, const ExecSite& site, BoxedValue err)
{
    Account(st, site.ord);
    ThrowError(st, err);
    return Flow::Transferred;
}

void Engine::ThrowError(PinnedState& st, BoxedValue err)
{
    m_varResValid = false;
    auto& stack = m_ctx.stack;
    uint32_t b = st.stackBase;
    while (true) {
        ReturnSite rs = ReturnSite::Unpack(stack[b + kHdrReturnSite].word);
        uint32_t callerBase = uint32_t(stack[b + kHdrCallerBase].word);
        CloseUpvalues(b);
        PopFrame();
        if (rs.kind == ReturnKind::Host) {
            m_pendingError = err;
            st.mode = ExecMode::Exit;
            return;
        }
        if (rs.kind == ReturnKind::Lib && m_continuations[rs.id].catcher) {
            st.stackBase = callerBase;
            LibCall call;
            call.frameBase = callerBase;
            call.numArgs = uint32_t(stack[callerBase + kHdrNumVarArgs].word);
            call.isError = true;
            call.error = err;
            ProcessLibAction(st, callerBase, m_continuations[rs.id].fn(*this, call));
            return;
        }
        b = callerBase;
    }
}

void Engine::ProcessLibAction(PinnedState& st, uint32_t libFrameBase, LibAction&& a)
{
    switch (a.kind) {
    case LibAction::Kind::Return:
        DoReturn(st, libFrameBase, a.values.data(), uint32_t(a.values.size()));
        return;
    case LibAction::Kind::Throw:
        st.stackBase = libFrameBase;
        ThrowError(st, a.error);
        return;
    case LibAction::Kind::Call: {
        uint32_t libArgs = uint32_t(m_ctx.stack[libFrameBase + kHdrNumVarArgs].word);
        if (!a.callee.IsFunction()) {
            BoxedValue err = Str(std::string("attempt to call a ") + TypeName(a.callee) + " value");
            if (m_continuations[a.continuation].catcher) {
                LibCall call;
                call.frameBase = libFrameBase;
                call.numArgs = libArgs;
                call.isError = true;
                call.error = err;
                ProcessLibAction(st, libFrameBase, m_continuations[a.continuation].fn(*this, call));
                return;
            }
            st.stackBase = libFrameBase;
            ThrowError(st, err);
            return;
        }
        uint32_t c = libFrameBase + libArgs;
        EnsureStack(c + kHeaderSlots + uint32_t(a.values.size()) + 1);
        m_ctx.stack[c] = a.callee;
        std::copy(a.values.begin(), a.values.end(), m_ctx.stack.begin() + c + kHeaderSlots);
        st.stackBase = libFrameBase;
        CallValue(st, c, uint32_t(a.values.size()), { ReturnKind::Lib, 0, a.continuation }, libFrameBase);
        return;
    }
    case LibAction::Kind::LongJump: {
        uint32_t b = libFrameBase;
        while (b != a.targetFrameBase) {
            ReturnSite rs = ReturnSite::Unpack(m_ctx.stack[b + kHdrReturnSite].word);
            TIERVM_ASSERT(rs.kind != ReturnKind::Host, "long jump target is not a live ancestor frame");
            uint32_t callerBase = uint32_t(m_ctx.stack[b + kHdrCallerBase].word);
            CloseUpvalues(b);
            PopFrame();
            m_counters.framesDiscarded++;
            b = callerBase;
        }
        DoReturn(st, b, a.values.data(), uint32_t(a.values.size()));
        return;
    }
    }
}

BoxedValue Engine::RunIc(PinnedState& st, const ExecSite& site, uint32_t icKind, const IcInput& input)
{
    const IcKind& ic = GuestIcKinds()[icKind];
    if (site.tier == 1)
        return st.cb->code->icSites[site.site].Execute(this, input, m_counters);
    if (!m_cfg.icCaching) {
        std::optional<ICEntry> entry;
        IcStats stats;
        BoxedValue v = ic.RunBody(this, input, entry, stats);
        m_counters.icMisses++;
        m_counters.icBodyRuns++;
        return v;
    }
    CodeBlock& cb = *st.cb;
    InterpreterICSlot& slot = cb.icSlots[site.d->icSlot];
    const BytecodeRegistry& reg = GuestRegistry();
    int32_t quickened = reg.Layout(site.d->opcode).quickenedEffect;
    if (quickened >= 0 && slot.cachedKey == input.key) {
        m_counters.icHits++;
        return ic.Apply(uint32_t(quickened), this, input, slot.state);
    }
    IcStats stats;
    bool updated = false;
    BoxedValue v = ic.InterpExecute(slot, this, input, stats, &updated);
    m_counters.icHits += stats.hits;
    m_counters.icMisses += stats.misses;
    m_counters.effectSwitches += stats.effectSwitches;
    m_counters.existenceChecks += stats.existenceChecks;
    m_counters.icBodyRuns += stats.bodyRuns;
    if (updated && ic.Desc().fuseIntoOpcode) {
        auto op = reg.QuickenedOpcode(site.d->kind, site.d->variant, int32_t(slot.effect));
        TIERVM_ASSERT(op.has_value(), "missing quickened opcode");
        uint16_t w = *op;
        std::memcpy(cb.stream.bytes.data() + site.d->pos, &w, sizeof(w));
    }
    return v;
}

std::vector<BoxedValue> Engine::Run(BoxedValue fn, std::span<const BoxedValue> args)
{
    TIERVM_ASSERT(!m_st, "nested Engine::Run is not supported");
    if (!fn.IsFunction())
        throw GuestError(Str("attempt to call a non-function value"), std::string("attempt to call a ") + TypeName(fn) + " value");
    PinnedState st;
    st.ctx = &m_ctx;
    m_st = &st;
    m_pendingError.reset();
    m_pendingReturn = false;
    m_hostResults.clear();
    m_frameDepth = 0;
    uint32_t c = 0;
    EnsureStack(c + kHeaderSlots + uint32_t(args.size()) + 1);
    m_ctx.stack[c] = fn;
    std::copy(args.begin(), args.end(), m_ctx.stack.begin() + c + kHeaderSlots);
    struct Reset {
        Engine* e;
        ~Reset() { e->m_st = nullptr; }
    } reset { this };
    CallValue(st, c, uint32_t(args.size()), { ReturnKind::Host, 0, 0 }, 0);
    while (st.mode != ExecMode::Exit) {
        if (st.mode == ExecMode::Interp) {
            RunInterp(st);
        } else {
            if (m_observer)
                m_observer(TierEvent::EnterTier2, m_counters);
            RunJit(st);
            if (m_observer)
                m_observer(TierEvent::LeaveTier2, m_counters);
        }
    }
    if (m_pendingError) {
        BoxedValue err = *m_pendingError;
        m_pendingError.reset();
        throw GuestError(err, ToString(err));
    }
    return m_hostResults;
}

} // namespace tiervm
