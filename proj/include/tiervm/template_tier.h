#pragma once

#include "tiervm/bytecode.h"
#include "tiervm/ic.h"
#include "tiervm/type_opt.h"
#include "tiervm/vm.h"

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tiervm {

// ---- Holes ---------------------------------------------------------------

enum class HoleRoot : uint8_t {
    OperandSlot,
    LiteralOperand,
    ConstantValue,
    RangeLength,
    OutputSlot,
    FallthroughAddr,
    BranchTargetAddr,
    SlowPathDataOffset,
    IcStateField,
};
const char* HoleRootName(HoleRoot r);

struct AffineStep {
    enum class Op : uint8_t { Mul, Add };
    Op op = Op::Mul;
    int64_t k = 0;
};

struct HoleExpr {
    HoleRoot root = HoleRoot::OperandSlot;
    // Operand index, or the effect index for IcStateField.
    uint32_t index = 0;
    // IcStateField: the state field.
    uint32_t field = 0;
    std::vector<AffineStep> chain;

    // Value of the expression for a root value, with 64-bit wraparound.
    int64_t Eval(int64_t rootValue) const;
    std::string Describe() const;
};

enum class HoleMode : uint8_t { Direct, Adjusted, RuntimeEvaluated };

struct HoleDecision {
    HoleMode mode = HoleMode::RuntimeEvaluated;
    // Added to the evaluated value before burning (Adjusted only).
    int64_t adjust = 0;
    // Proven interval of the evaluated expression (when not runtime).
    int64_t lo = 0;
    int64_t hi = 0;
    std::string Describe() const;
};

// Half-open target range [kHoleTargetLo, kHoleTargetHi) of burned values.
inline constexpr int64_t kHoleTargetLo = 1;
inline constexpr int64_t kHoleTargetHi = (int64_t(1) << 31) - (int64_t(1) << 24);
inline constexpr int64_t kMaxSlotRoot = 1000000;
inline constexpr int64_t kMaxSlowPathDataOffset = int64_t(1) << 28;

struct RootRange {
    int64_t lo = 0;
    int64_t hi = 0;
    // The root may take any 64-bit value.
    bool unbounded = false;
};

// Interval arithmetic over the affine chain of expr for roots in [lo, hi].
HoleDecision ProveRange(const HoleExpr& expr, RootRange root, int64_t targetLo = kHoleTargetLo, int64_t targetHi = kHoleTargetHi);
// The word burned into a payload slot for a root value.
uint64_t PatchHole(const HoleExpr& expr, const HoleDecision& d, int64_t rootValue);
// The evaluated expression recovered from a burned word.
int64_t ReadHole(const HoleExpr& expr, const HoleDecision& d, uint64_t burned);

// ---- Stencils --------------------------------------------------------------

struct Cell;
using JitHandler = void (*)(Engine&, PinnedState&, const Cell&);

enum class CellHandlerKind : uint8_t { Generic, ArithGuarded, IcAccess, CallIc, SlowBridge };
const char* CellHandlerKindName(CellHandlerKind k);

struct HoleSlot {
    std::string name;
    HoleExpr expr;
    HoleDecision decision;
    uint32_t slot = 0;
};

struct CellProto {
    CellHandlerKind kind = CellHandlerKind::Generic;
    JitHandler handler = nullptr;
    std::vector<HoleSlot> holes;
    uint32_t payloadSlots = 0;
};

struct IcSiteDesc {
    uint32_t descriptor = 0;
    uint32_t slabCapacity = 0;
    // Stub payload holes per concrete effect: one per non-specialized field.
    std::vector<std::vector<HoleSlot>> stateHoles;
};

struct StencilTemplate {
    uint32_t kind = 0;
    uint32_t variant = 0;
    std::string name;
    bool supported = true;
    std::string unsupportedReason;
    CellProto fast;
    std::optional<CellProto> slow;
    bool fallthroughEliminable = true;
    std::optional<IcSiteDesc> icSite;
    bool callIcSite = false;
    // Guarded arithmetic cells.
    std::vector<sem::Guard> guards;
    std::optional<sem::SemFunction> fastPath;
    int prim = -1;

    // Index of the fast-cell hole for a root, or -1.
    int FindHole(HoleRoot root, uint32_t index = 0) const;
};

// Built once per (kind, variant) and cached.
const StencilTemplate& GetStencil(uint32_t kind, uint32_t variant);
std::string DumpStencil(const StencilTemplate& s);
std::string DumpTemplates(const std::vector<std::pair<uint32_t, uint32_t>>& variants);

// ---- Code objects ------------------------------------------------------------

struct Cell {
    JitHandler handler = nullptr;
    uint32_t payload = 0;
    const StencilTemplate* stencil = nullptr;
    int32_t slowCell = -1;
    int32_t site = -1;
    uint32_t ord = 0;
};

struct SlowPathRecord {
    DecodedBytecode bc;
    uint32_t ord = 0;
    uint32_t fallthroughAddr = 0;
    uint32_t targetAddr = 0;
};

inline constexpr uint32_t kSlowPathDataHeaderBytes = 8;
inline constexpr uint64_t kUnpatchedBranch = ~uint64_t(0);

// Tier 2 polymorphic inline cache site.
class Tier2IcSite {
public:
    enum class Mode : uint8_t { MissOnly, InlineSlab, Chained, Megamorphic };
    struct Stub {
        uint64_t key = 0;
        uint32_t effect = 0;
        std::vector<uint64_t> payload;
        int32_t next = -1;
    };

    Tier2IcSite(const IcKind* kind, const IcSiteDesc* desc, uint32_t maxStubs);

    BoxedValue Execute(IcEnv env, const IcInput& input, Counters& counters);

    Mode GetMode() const { return m_mode; }
    bool SlabOccupied() const { return m_slabUsed; }
    uint64_t SlabKey() const { return m_slab.key; }
    // Stub keys from the chain head to its tail.
    std::vector<uint64_t> ChainKeys() const;
    size_t NumStubs() const { return m_stubs.size(); }
    const IcKind& Kind() const { return *m_kind; }

private:
    IcState StubState(const Stub& s) const;

    const IcKind* m_kind;
    const IcSiteDesc* m_desc;
    uint32_t m_maxStubs;
    Mode m_mode = Mode::MissOnly;
    bool m_slabUsed = false;
    ICEntry m_slab;
    std::vector<Stub> m_stubs;
    int32_t m_head = -1;
};

struct CallIcSite {
    enum class Mode : uint8_t { Empty, Direct, Closure };
    Mode mode = Mode::Empty;
    uint64_t cachedFunction = 0;
    const FunctionProto* cachedProto = nullptr;
};

struct CompileSizes {
    uint32_t fastCells = 0;
    uint32_t slowCells = 0;
    uint32_t payloadSlots = 0;
    uint32_t slowPayloadSlots = 0;
    uint32_t slowPathDataBytes = 0;
    uint32_t icSites = 0;
    uint32_t callIcSites = 0;
    uint64_t cellBytes = 0;
    bool operator==(const CompileSizes&) const = default;
};

struct CompileReport {
    CompileSizes predicted;
    CompileSizes emitted;
    uint32_t numBytecodes = 0;
    uint32_t pass3Visits = 0;
    uint32_t branchSlotsPatched = 0;
    uint32_t unresolvedBranchSlots = 0;
};

struct CodeObject {
    std::vector<Cell> fastCells;
    std::vector<Cell> slowCells;
    std::vector<uint64_t> payload;
    std::vector<uint64_t> slowPayload;
    std::vector<uint8_t> slowPathData;
    std::vector<uint32_t> bcToCell;
    std::vector<Tier2IcSite> icSites;
    std::vector<CallIcSite> callIcs;
    CompileReport report;

    const uint64_t* Payload(const Cell& c) const { return payload.data() + c.payload; }
    SlowPathRecord Record(uint32_t offset) const;
};

class CompileUnsupported : public std::runtime_error {
public:
    CompileUnsupported(uint32_t k, const std::string& msg) : std::runtime_error(msg), kind(k) { }
    uint32_t kind;
};

// Four-pass compilation of a code block. Throws CompileUnsupported.
std::unique_ptr<CodeObject> Compile(const CodeBlock& cb, const Config& cfg, Counters& counters);

// Recovers the operand record of a fast cell from its burned payload.
DecodedBytecode OperandsFromPayload(const CodeObject& co, const Cell& c);

} // namespace tiervm
