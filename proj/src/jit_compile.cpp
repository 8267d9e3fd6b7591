#include "jit_internal.h"

#include "tiervm/common.h"
#include "tiervm/guest_bytecodes.h"

#include <cstring>
#include <type_traits>

namespace tiervm {

static_assert(std::is_trivially_copyable_v<SlowPathRecord>);

SlowPathRecord CodeObject::Record(uint32_t offset) const
{
    TIERVM_DEBUG_ASSERT(offset >= kSlowPathDataHeaderBytes && offset + sizeof(SlowPathRecord) <= slowPathData.size(), "slow path data offset out of bounds");
    SlowPathRecord r;
    std::memcpy(&r, slowPathData.data() + offset, sizeof(r));
    return r;
}

namespace {

int64_t RootValue(const HoleSlot& h, const DecodedBytecode& d, uint32_t slowPathOffset)
{
    const OperandValue& o = d.ops[h.expr.index];
    switch (h.expr.root) {
    case HoleRoot::OperandSlot: return o.ord;
    case HoleRoot::LiteralOperand: return o.lit;
    case HoleRoot::ConstantValue: return int64_t(o.cst.word);
    case HoleRoot::RangeLength: return o.len;
    case HoleRoot::OutputSlot: return d.output;
    case HoleRoot::SlowPathDataOffset: return slowPathOffset;
    default: break;
    }
    TIERVM_ASSERT(false, std::string("hole root has no bytecode value: ") + HoleRootName(h.expr.root));
    return 0;
}

uint64_t CellBytes(uint32_t payloadSlots) { return 8 + 8 * uint64_t(payloadSlots); }

struct BranchFixup {
    uint32_t payloadIndex;
    const HoleSlot* hole;
    uint32_t targetPos;
    uint32_t recordOffset;
};

} // namespace

std::unique_ptr<CodeObject> Compile(const CodeBlock& cb, const Config& cfg, Counters& counters)
{
    const BytecodeRegistry& reg = GuestRegistry();
    const BytecodeStream& s = cb.stream;
    auto co = std::make_unique<CodeObject>();
    CompileReport& rep = co->report;
    uint32_t n = s.NumBytecodes();
    rep.numBytecodes = n;

    // Pass 1: sizes from opcodes alone.
    CompileSizes& p = rep.predicted;
    p.slowPathDataBytes = kSlowPathDataHeaderBytes;
    for (uint32_t ord = 0; ord < n; ord++) {
        const OpcodeLayout& l = reg.Layout(ReadOpcode(s.bytes, s.offsets[ord]));
        const StencilTemplate& st = GetStencil(l.kind, l.variant);
        if (!st.supported)
            throw CompileUnsupported(l.kind, "cannot compile " + st.name + ": " + st.unsupportedReason);
        p.fastCells++;
        p.payloadSlots += st.fast.payloadSlots;
        p.cellBytes += CellBytes(st.fast.payloadSlots);
        if (st.slow) {
            p.slowCells++;
            p.slowPayloadSlots += st.slow->payloadSlots;
            p.cellBytes += CellBytes(st.slow->payloadSlots);
        }
        p.slowPathDataBytes += sizeof(SlowPathRecord);
        if (st.icSite)
            p.icSites++;
        if (st.callIcSite)
            p.callIcSites++;
    }

    // Pass 2: allocation.
    co->fastCells.resize(p.fastCells);
    co->slowCells.resize(p.slowCells);
    co->payload.assign(p.payloadSlots, 0);
    co->slowPayload.assign(p.slowPayloadSlots, 0);
    co->slowPathData.assign(p.slowPathDataBytes, 0);
    co->bcToCell.assign(n, ~0u);
    co->icSites.reserve(p.icSites);
    co->callIcs.reserve(p.callIcSites);
    std::memcpy(co->slowPathData.data(), "SPD1", 4);
    std::memcpy(co->slowPathData.data() + 4, &n, 4);

    // Pass 3: one decode per bytecode; emit cells and burn holes.
    CompileSizes& em = rep.emitted;
    em.slowPathDataBytes = kSlowPathDataHeaderBytes;
    std::vector<BranchFixup> fixups;
    uint32_t payloadCursor = 0;
    uint32_t slowPayloadCursor = 0;
    for (uint32_t ord = 0; ord < n; ord++) {
        DecodedBytecode d = Decode(reg, s, s.offsets[ord]);
        counters.compileDecodes++;
        rep.pass3Visits++;
        const StencilTemplate& st = GetStencil(d.kind, d.variant);

        uint32_t cellIndex = em.fastCells++;
        co->bcToCell[ord] = cellIndex;
        Cell& c = co->fastCells[cellIndex];
        c.handler = st.fast.handler;
        c.payload = payloadCursor;
        c.stencil = &st;
        c.ord = ord;

        uint32_t recordOffset = em.slowPathDataBytes;
        SlowPathRecord rec;
        rec.bc = d;
        rec.ord = ord;
        rec.fallthroughAddr = cellIndex + 2;
        rec.targetAddr = 0;
        std::memcpy(co->slowPathData.data() + recordOffset, &rec, sizeof(rec));
        em.slowPathDataBytes += sizeof(SlowPathRecord);

        for (const HoleSlot& h : st.fast.holes) {
            uint32_t idx = payloadCursor + h.slot;
            if (h.expr.root == HoleRoot::BranchTargetAddr) {
                co->payload[idx] = kUnpatchedBranch;
                fixups.push_back({ idx, &h, d.target, recordOffset });
                continue;
            }
            co->payload[idx] = PatchHole(h.expr, h.decision, RootValue(h, d, recordOffset));
        }
        payloadCursor += st.fast.payloadSlots;
        em.payloadSlots += st.fast.payloadSlots;
        em.cellBytes += CellBytes(st.fast.payloadSlots);

        if (st.slow) {
            c.slowCell = int32_t(em.slowCells++);
            Cell& sc = co->slowCells[c.slowCell];
            sc.handler = st.slow->handler;
            sc.payload = slowPayloadCursor;
            sc.stencil = &st;
            sc.ord = ord;
            for (const HoleSlot& h : st.slow->holes)
                co->slowPayload[slowPayloadCursor + h.slot] = PatchHole(h.expr, h.decision, RootValue(h, d, recordOffset));
            slowPayloadCursor += st.slow->payloadSlots;
            em.slowPayloadSlots += st.slow->payloadSlots;
            em.cellBytes += CellBytes(st.slow->payloadSlots);
        }
        if (st.icSite) {
            c.site = int32_t(em.icSites++);
            co->icSites.emplace_back(&GuestIcKinds()[st.icSite->descriptor], &*st.icSite, cfg.maxStubs);
        }
        if (st.callIcSite) {
            c.site = int32_t(em.callIcSites++);
            co->callIcs.emplace_back();
        }
    }

    // Pass 4: branch targets.
    for (const BranchFixup& f : fixups) {
        int64_t targetOrd = s.OrdinalAt(f.targetPos);
        TIERVM_ASSERT(targetOrd >= 0, "branch target is not a bytecode start");
        uint32_t addr = co->bcToCell[targetOrd] + 1;
        co->payload[f.payloadIndex] = PatchHole(f.hole->expr, f.hole->decision, addr);
        std::memcpy(co->slowPathData.data() + f.recordOffset + offsetof(SlowPathRecord, targetAddr), &addr, sizeof(addr));
        rep.branchSlotsPatched++;
    }
    for (uint32_t ord = 0; ord < n; ord++) {
        const Cell& c = co->fastCells[co->bcToCell[ord]];
        for (const HoleSlot& h : c.stencil->fast.holes) {
            if (h.expr.root == HoleRoot::BranchTargetAddr && co->payload[c.payload + h.slot] == kUnpatchedBranch)
                rep.unresolvedBranchSlots++;
        }
    }
    TIERVM_ASSERT(rep.predicted == rep.emitted, "emitted code size differs from the pass 1 prediction");
    TIERVM_ASSERT(rep.unresolvedBranchSlots == 0, "unpatched branch slot after pass 4");
    return co;
}

DecodedBytecode OperandsFromPayload(const CodeObject& co, const Cell& c)
{
    const StencilTemplate& st = *c.stencil;
    const BytecodeRegistry& reg = GuestRegistry();
    const OpcodeLayout& layout = reg.Layout(reg.OpcodeOf(st.kind, st.variant));
    const uint64_t* p = co.Payload(c);
    DecodedBytecode d;
    d.kind = st.kind;
    d.variant = st.variant;
    d.opcode = reg.OpcodeOf(st.kind, st.variant);
    d.numOperands = uint8_t(reg.Def(st.kind).operands.size());
    const VariantSpec& vs = reg.Def(st.kind).variants[st.variant];
    for (size_t i = 0; i < vs.operands.size(); i++) {
        if (vs.operands[i].kind == Specialization::Kind::HasValue)
            d.ops[i] = OperandValue::Lit(vs.operands[i].value);
    }
    for (const HoleSlot& h : st.fast.holes) {
        int64_t v = ReadHole(h.expr, h.decision, p[h.slot]);
        OperandValue& o = d.ops[h.expr.index];
        switch (h.expr.root) {
        case HoleRoot::OperandSlot:
            if (layout.operandForm[h.expr.index] == 'r') {
                o.kind = OperandValue::Kind::Range;
                o.ord = uint32_t(v / 8);
            } else {
                o = OperandValue::Local(uint32_t(v / 8));
            }
            break;
        case HoleRoot::RangeLength:
            o.len = uint32_t(v);
            break;
        case HoleRoot::LiteralOperand:
            o = OperandValue::Lit(v);
            break;
        case HoleRoot::ConstantValue:
            o = OperandValue::Cst(BoxedValue::FromWord(uint64_t(v)));
            break;
        case HoleRoot::OutputSlot:
            d.hasOutput = true;
            d.output = uint32_t(v / 8);
            break;
        case HoleRoot::BranchTargetAddr:
            d.hasTarget = true;
            d.target = uint32_t(v);
            break;
        default:
            break;
        }
    }
    return d;
}

} // namespace tiervm
