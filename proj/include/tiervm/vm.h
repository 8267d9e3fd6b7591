#pragma once

#include "tiervm/bytecode.h"
#include "tiervm/heap.h"
#include "tiervm/ic.h"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tiervm {

struct CodeObject;
class Engine;

// An uncaught guest error surfacing at the host boundary.
class GuestError : public std::runtime_error {
public:
    GuestError(BoxedValue v, const std::string& msg) : std::runtime_error(msg), value(v) { }
    BoxedValue value;
};

inline constexpr uint64_t kNeverTierUp = ~uint64_t(0);

struct Config {
    bool tiered = true;
    uint64_t tierUpThreshold = 5000;
    bool osr = true;
    // Count every dispatched bytecode individually; the oracle for the delta
    // accounting of bytecodesExecuted.
    bool naiveCounting = false;
    // When false every interpreter IC execution runs the idempotent body.
    bool icCaching = true;
    uint32_t maxStubs = 8;
    uint32_t stackCapSlots = 1u << 24;
};

struct Counters {
    uint64_t bytecodesExecuted = 0;
    uint64_t decodesPerformed = 0;
    uint64_t branchesTaken = 0;
    uint64_t icHits = 0;
    uint64_t icMisses = 0;
    uint64_t icStubsCreated = 0;
    uint64_t tierUps = 0;
    uint64_t osrEntries = 0;
    uint64_t compiledBytecodes = 0;
    uint64_t emittedCellBytes = 0;
    double wallTimeMs = 0;

    uint64_t naiveBytecodes = 0;
    uint64_t tier2Bytecodes = 0;
    uint64_t compileDecodes = 0;
    uint64_t compileFailures = 0;
    uint64_t effectSwitches = 0;
    uint64_t existenceChecks = 0;
    uint64_t icBodyRuns = 0;
    uint64_t callIcFunctionChecks = 0;
    uint64_t callIcHits = 0;
    uint64_t callIcTransitions = 0;
    uint64_t slowPathsTaken = 0;
    uint64_t argCopies = 0;
    uint64_t peakFrames = 0;
    uint64_t framesDiscarded = 0;
    uint64_t probesExecuted = 0;
};

enum class TierState : uint8_t { InterpreterOnly, Compiling, Tiered };

struct CodeBlock {
    CodeBlock();
    ~CodeBlock();
    CodeBlock(CodeBlock&&) noexcept;
    CodeBlock& operator=(CodeBlock&&) noexcept;

    // Takes the stream and sizes the interpreter IC array.
    void Init(BytecodeStream s);
    uint32_t OrdinalOf(uint32_t pos) const { return ordinalOfPos[pos]; }

    BytecodeStream stream;
    std::vector<InterpreterICSlot> icSlots;
    // Bytecode ordinal per byte position; only bytecode starts are meaningful.
    std::vector<uint32_t> ordinalOfPos;
    uint64_t bytecodesExecuted = 0;
    TierState tierState = TierState::InterpreterOnly;
    // Set when compilation failed; the block then stays in the interpreter.
    bool pinned = false;
    std::unique_ptr<CodeObject> code;
};

struct UpvalueDesc {
    bool fromParentLocal = true;
    // Parent local slot, or parent upvalue ordinal.
    uint32_t index = 0;
    bool isMutable = true;
    std::string name;
};

struct FunctionProto {
    std::string name;
    CodeBlock cb;
    uint32_t numFixedParams = 0;
    bool acceptsVarArgs = false;
    uint32_t numSlots = 0;
    std::vector<UpvalueDesc> upvalues;
    std::vector<FunctionProto*> children;
};

struct CoroutineContext {
    std::vector<BoxedValue> stack;
    BoxedValue globalObject;
    // Open upvalues sorted by stack slot.
    std::vector<Upvalue*> openUpvalues;
};

enum class ExecMode : uint8_t { Interp, Jit, Exit };

// The pinned VM state threaded through every handler.
struct PinnedState {
    CoroutineContext* ctx = nullptr;
    uint32_t stackBase = 0;
    // Interpreter: bytecode byte position. Tier 2: fast cell index.
    uint32_t pos = 0;
    CodeBlock* cb = nullptr;
    ExecMode mode = ExecMode::Exit;
};

enum class ReturnKind : uint8_t { Host = 0, Bytecode = 1, Lib = 2 };

// Packed into one header slot: id in bits 0..31, kind in bits 32..33, tier in
// bit 34. For bytecode sites id is the call's position (interpreter) or cell
// (tier 2); for library sites it is the continuation id.
struct ReturnSite {
    ReturnKind kind = ReturnKind::Host;
    uint8_t tier = 0;
    uint32_t id = 0;

    uint64_t Pack() const { return uint64_t(id) | (uint64_t(kind) << 32) | (uint64_t(tier) << 34); }
    static ReturnSite Unpack(uint64_t w) { return { ReturnKind((w >> 32) & 3), uint8_t((w >> 34) & 1), uint32_t(w) }; }
};

inline constexpr uint32_t kHeaderSlots = 4;
// Header slot offsets relative to the frame's stackBase.
inline constexpr int kHdrCallee = -4;
inline constexpr int kHdrCallerBase = -3;
inline constexpr int kHdrReturnSite = -2;
inline constexpr int kHdrNumVarArgs = -1;

struct LibCall {
    // Stack index of argument 0.
    uint32_t frameBase = 0;
    uint32_t numArgs = 0;
    // Continuations: values returned by the callee, or the error when
    // isError is set.
    std::span<const BoxedValue> results;
    bool isError = false;
    BoxedValue error;
};

struct LibAction {
    enum class Kind : uint8_t { Return, Call, Throw, LongJump };
    Kind kind = Kind::Return;
    std::vector<BoxedValue> values;
    BoxedValue callee;
    BoxedValue error;
    uint32_t continuation = 0;
    uint32_t targetFrameBase = 0;

    static LibAction Return(std::vector<BoxedValue> v) { LibAction a; a.values = std::move(v); return a; }
    static LibAction Throw(BoxedValue e) { LibAction a; a.kind = Kind::Throw; a.error = e; return a; }
    static LibAction Call(BoxedValue callee, std::vector<BoxedValue> args, uint32_t cont)
    {
        LibAction a;
        a.kind = Kind::Call;
        a.callee = callee;
        a.values = std::move(args);
        a.continuation = cont;
        return a;
    }
    static LibAction LongJump(uint32_t target, std::vector<BoxedValue> v)
    {
        LibAction a;
        a.kind = Kind::LongJump;
        a.targetFrameBase = target;
        a.values = std::move(v);
        return a;
    }
};

struct FrameInfo {
    uint32_t stackBase = 0;
    uint32_t numVarArgs = 0;
    BoxedValue callee;
    ReturnSite returnSite;
};

enum class TierEvent : uint8_t { EnterTier2, LeaveTier2 };

enum class Flow : uint8_t { Next, Branch, Transferred };

// What a shared bytecode semantic needs to know about where it runs.
struct ExecSite {
    const DecodedBytecode* d = nullptr;
    uint32_t ord = 0;
    uint8_t tier = 0;
    // Interpreter: bytecode position. Tier 2: fast cell index.
    uint32_t resumeId = 0;
    // Tier 2 IC or call IC site of the cell, or -1.
    int32_t site = -1;
};

class Engine {
public:
    explicit Engine(Config cfg = {});
    ~Engine();
    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    Config& GetConfig() { return m_cfg; }
    Counters& Stats() { return m_counters; }
    const Counters& Stats() const { return m_counters; }
    Heap& GetHeap() { return m_heap; }
    CoroutineContext& Ctx() { return m_ctx; }
    const BytecodeRegistry& Registry() const;
    void SetOutput(std::ostream* os) { m_out = os; }
    std::ostream& Out();
    void SetTierObserver(std::function<void(TierEvent, const Counters&)> fn) { m_observer = std::move(fn); }

    FunctionProto* AddProto(std::unique_ptr<FunctionProto> p);
    // A proto wrapping a hand-built stream.
    FunctionProto* NewProto(std::string name, BytecodeStream s, uint32_t numFixedParams, bool varArgs, uint32_t numSlots);
    const std::vector<std::unique_ptr<FunctionProto>>& Protos() const { return m_protos; }
    BoxedValue NewClosure(FunctionProto* p);

    int32_t RegisterLib(const std::string& name, LibFn fn);
    uint32_t RegisterContinuation(LibFn fn, bool catcher);
    BoxedValue LibFunction(int32_t id);
    const std::string& LibName(int32_t id) const { return m_libs.at(id).name; }
    void SetGlobal(std::string_view name, BoxedValue v);
    BoxedValue GetGlobal(std::string_view name);
    BoxedValue Str(std::string_view s) { return m_heap.Intern(s); }

    // Calls fn with args to completion. Throws GuestError when an error is
    // not caught inside the guest.
    std::vector<BoxedValue> Run(BoxedValue fn, std::span<const BoxedValue> args = {});

    std::string ToString(BoxedValue v) const;
    static std::string FormatNumber(double d);
    static const char* TypeName(BoxedValue v);

    // Frames from the innermost outwards; valid while the engine runs.
    std::vector<FrameInfo> WalkFrames() const;
    uint32_t FrameDepth() const { return m_frameDepth; }

    // Compiles a code block to tier 2 if allowed; returns success.
    bool TryCompile(CodeBlock& cb);

    // Execution internals shared by the interpreter and the tier 2 cells.
    BoxedValue& Slot(const PinnedState& st, uint32_t ord) { return m_ctx.stack[st.stackBase + ord]; }
    BoxedValue OperandValueOf(const PinnedState& st, const OperandValue& o)
    {
        return o.kind == OperandValue::Kind::Constant ? o.cst : m_ctx.stack[st.stackBase + o.ord];
    }
    DecodedBytecode DecodeAt(const CodeBlock& cb, uint32_t pos);
    Flow Exec(PinnedState& st, const ExecSite& site);
    void Account(const PinnedState& st, uint32_t throughOrd);
    void TakeBranch(const PinnedState& st, uint32_t fromOrd, uint32_t toOrd);
    void MaybeOsr(PinnedState& st, uint32_t targetOrd);
    // Raises a guest error from the bytecode at site; crediting it first.
    Flow ThrowFromBytecode(PinnedState& st, const ExecSite& site, BoxedValue err);
    Flow ThrowMessage(PinnedState& st, const ExecSite& site, const std::string& msg) { return ThrowFromBytecode(st, site, Str(msg)); }
    void ThrowError(PinnedState& st, BoxedValue err);
    // Calls the function at absolute slot c with args at c+4.
    void CallValue(PinnedState& st, uint32_t c, uint32_t numArgs, ReturnSite rs, uint32_t callerBase);
    Flow DoCall(PinnedState& st, const ExecSite& site, uint32_t base, uint32_t numArgs, bool passVarRes, bool checkedFunction);
    Flow DoTailCall(PinnedState& st, const ExecSite& site, uint32_t base, uint32_t numArgs, bool passVarRes);
    // Returns from the frame at frameBase.
    void DoReturn(PinnedState& st, uint32_t frameBase, const BoxedValue* vals, uint32_t n);
    // Completes a pending bytecode return in the caller's tier.
    void FinishReturnInterp(PinnedState& st);
    void FinishReturnJit(PinnedState& st);
    bool HasPendingReturn() const { return m_pendingReturn; }
    void StoreVarRes(const PinnedState& st, uint32_t producerOrd, const BoxedValue* vals, uint32_t n);
    const std::vector<BoxedValue>& TakeVarRes(const PinnedState& st, uint32_t consumerOrd);
    Upvalue* FindOrCreateUpvalue(uint32_t absSlot);
    void CloseUpvalues(uint32_t floor);
    BoxedValue ReadUpvalue(Upvalue* u) const { return u->open ? m_ctx.stack[u->slot] : u->closed; }
    void WriteUpvalue(Upvalue* u, BoxedValue v)
    {
        if (u->open)
            m_ctx.stack[u->slot] = v;
        else
            u->closed = v;
    }
    FunctionObject* CurrentFunction(const PinnedState& st) { return m_heap.Function(m_ctx.stack[st.stackBase + kHdrCallee]); }
    BoxedValue RunIc(PinnedState& st, const ExecSite& site, uint32_t icKind, const IcInput& input);
    void EnsureStack(uint32_t needed);

private:
    void EnterFunction(PinnedState& st, FunctionProto* proto, uint32_t base);
    void ProcessLibAction(PinnedState& st, uint32_t libFrameBase, LibAction&& a);
    void RunInterp(PinnedState& st);
    void RunJit(PinnedState& st);
    void PushFrame();
    void PopFrame() { m_frameDepth--; }

    Config m_cfg;
    Counters m_counters;
    Heap m_heap;
    CoroutineContext m_ctx;
    std::ostream* m_out = nullptr;
    std::function<void(TierEvent, const Counters&)> m_observer;

    std::vector<std::unique_ptr<FunctionProto>> m_protos;
    struct LibEntry {
        std::string name;
        LibFn fn;
        BoxedValue value;
    };
    std::vector<LibEntry> m_libs;
    struct Continuation {
        LibFn fn;
        bool catcher;
    };
    std::vector<Continuation> m_continuations;

    PinnedState* m_st = nullptr;
    uint32_t m_lastOrd = 0;
    uint32_t m_frameDepth = 0;
    bool m_pendingReturn = false;
    std::vector<BoxedValue> m_retBuf;
    std::vector<BoxedValue> m_hostResults;
    std::optional<BoxedValue> m_pendingError;

    std::vector<BoxedValue> m_varRes;
    bool m_varResValid = false;
    uint32_t m_varResFrame = 0;
    uint32_t m_varResConsumer = 0;
    CodeBlock* m_varResCb = nullptr;
};

} // namespace tiervm
