#include "jit_internal.h"

#include "tiervm/common.h"
#include "tiervm/guest_bytecodes.h"
#include "tiervm/guest_types.h"

#include <mutex>
#include <sstream>

namespace tiervm {

const char* CellHandlerKindName(CellHandlerKind k)
{
    switch (k) {
    case CellHandlerKind::Generic: return "generic";
    case CellHandlerKind::ArithGuarded: return "arith_guarded";
    case CellHandlerKind::IcAccess: return "ic_access";
    case CellHandlerKind::CallIc: return "call_ic";
    case CellHandlerKind::SlowBridge: return "slow_bridge";
    }
    return "?";
}

int StencilTemplate::FindHole(HoleRoot root, uint32_t index) const
{
    for (size_t i = 0; i < fast.holes.size(); i++) {
        const HoleExpr& e = fast.holes[i].expr;
        if (e.root != root)
            continue;
        bool indexed = root == HoleRoot::OperandSlot || root == HoleRoot::LiteralOperand || root == HoleRoot::ConstantValue || root == HoleRoot::RangeLength;
        if (!indexed || e.index == index)
            return int(i);
    }
    return -1;
}

namespace {

constexpr RootRange kSlotRange { 0, kMaxSlotRoot, false };
constexpr RootRange kUnbounded { 0, 0, true };

HoleExpr Expr(HoleRoot root, uint32_t index, std::vector<AffineStep> chain = {})
{
    HoleExpr e;
    e.root = root;
    e.index = index;
    e.chain = std::move(chain);
    return e;
}

std::vector<AffineStep> TimesEight() { return { { AffineStep::Op::Mul, 8 } }; }

void AddHole(CellProto& cell, std::string name, HoleExpr expr, RootRange range)
{
    HoleSlot h;
    h.name = std::move(name);
    h.decision = ProveRange(expr, range);
    h.expr = std::move(expr);
    h.slot = uint32_t(cell.holes.size());
    cell.holes.push_back(std::move(h));
    cell.payloadSlots = uint32_t(cell.holes.size());
}

RootRange LiteralRange(const OperandSpec& o)
{
    int64_t bits = int64_t(o.literalWidth) * 8;
    if (o.literalSigned)
        return { -(int64_t(1) << (bits - 1)), (int64_t(1) << (bits - 1)) - 1, false };
    return { 0, (int64_t(1) << bits) - 1, false };
}

bool IsArithFastShape(const sem::SemFunction& f)
{
    using K = sem::Instr::Kind;
    if (f.blocks.size() != 1)
        return false;
    const sem::Block& b = f.blocks[0];
    if (b.term.kind != sem::Terminator::Kind::ReturnValue || b.instrs.size() != 4)
        return false;
    return b.instrs[0].kind == K::Unbox && b.instrs[1].kind == K::Unbox && b.instrs[2].kind == K::PrimOp && b.instrs[3].kind == K::Box;
}

StencilTemplate Build(uint32_t kind, uint32_t variant)
{
    const BytecodeRegistry& reg = GuestRegistry();
    const BytecodeDef& def = reg.Def(kind);
    const VariantSpec& vs = def.variants[variant];
    const OpcodeLayout& layout = reg.Layout(reg.OpcodeOf(kind, variant));
    const GuestKinds& k = Kinds();

    StencilTemplate s;
    s.kind = kind;
    s.variant = variant;
    s.name = layout.name;
    if (kind == k.Probe) {
        s.supported = false;
        s.unsupportedReason = "interpreter-only bytecode";
        return s;
    }

    for (uint32_t i = 0; i < def.operands.size(); i++) {
        const OperandSpec& o = def.operands[i];
        switch (layout.operandForm[i]) {
        case 'l':
            AddHole(s.fast, o.name, Expr(HoleRoot::OperandSlot, i, TimesEight()), kSlotRange);
            break;
        case 'c':
            AddHole(s.fast, o.name, Expr(HoleRoot::ConstantValue, i), kUnbounded);
            break;
        case 'r':
            AddHole(s.fast, o.name, Expr(HoleRoot::OperandSlot, i, TimesEight()), kSlotRange);
            AddHole(s.fast, o.name + ".length", Expr(HoleRoot::RangeLength, i), { 0, 65535, false });
            break;
        case '1':
        case '2':
        case '4':
            if (vs.operands[i].kind != Specialization::Kind::HasValue)
                AddHole(s.fast, o.name, Expr(HoleRoot::LiteralOperand, i), LiteralRange(o));
            break;
        default:
            s.supported = false;
            s.unsupportedReason = "operand '" + o.name + "' is not specialized to a local or a constant";
            return s;
        }
    }
    if (def.result.hasOutput)
        AddHole(s.fast, "output", Expr(HoleRoot::OutputSlot, 0, TimesEight()), kSlotRange);
    if (def.result.mayBranch)
        AddHole(s.fast, "target", Expr(HoleRoot::BranchTargetAddr, 0), { kHoleTargetLo, kHoleTargetHi - 1, false });

    s.fallthroughEliminable = !(kind == k.Jump || kind == k.Return || kind == k.ReturnVarRes || kind == k.TailCall);
    s.fast.handler = jit::GenericHandler(kind);

    s.prim = ArithPrimOf(kind);
    if (s.prim >= 0 && def.semantics) {
        std::vector<TypeMask> known;
        for (const Specialization& sp : vs.operands)
            known.push_back(sp.kind == Specialization::Kind::IsConstant && sp.mask ? *sp.mask : tmask::tTop);
        std::vector<std::optional<TypeMask>> spec = vs.speculation;
        spec.resize(known.size());
        sem::SplitResult split = sem::SplitFastSlow(*def.semantics, known, spec, GuestScheme());
        if (IsArithFastShape(split.fast)) {
            s.fast.kind = CellHandlerKind::ArithGuarded;
            s.fast.handler = jit::ArithHandler();
            s.guards = split.guards;
            s.fastPath = split.fast;
            CellProto slow;
            slow.kind = CellHandlerKind::SlowBridge;
            slow.handler = jit::SlowBridgeHandler();
            AddHole(slow, "slow_path_data", Expr(HoleRoot::SlowPathDataOffset, 0), { 1, kMaxSlowPathDataOffset, false });
            s.slow = std::move(slow);
        }
    }

    if (!def.ics.empty()) {
        const IcKind& ic = GuestIcKinds()[def.ics[0].descriptor];
        IcSiteDesc site;
        site.descriptor = def.ics[0].descriptor;
        site.slabCapacity = ic.SmallestPayload();
        for (uint32_t e = 0; e < ic.Effects().size(); e++) {
            const ConcreteEffect& ce = ic.Effects()[e];
            const EffectDef& ed = ic.Desc().effects[ce.def];
            std::vector<HoleSlot> holes;
            for (uint32_t f = 0; f < ce.fixed.size(); f++) {
                if (ce.fixed[f])
                    continue;
                HoleSlot h;
                h.name = ed.fields[f].name;
                h.expr = Expr(HoleRoot::IcStateField, e);
                h.expr.field = f;
                RootRange r = kUnbounded;
                if (ed.fields[f].range)
                    r = { ed.fields[f].range->first, ed.fields[f].range->second, false };
                h.decision = ProveRange(h.expr, r);
                h.slot = uint32_t(holes.size());
                holes.push_back(std::move(h));
            }
            site.stateHoles.push_back(std::move(holes));
        }
        s.icSite = std::move(site);
        s.fast.kind = CellHandlerKind::IcAccess;
    }

    if (kind == k.Call) {
        s.callIcSite = true;
        s.fast.kind = CellHandlerKind::CallIc;
        s.fast.handler = jit::CallIcHandler();
    }
    return s;
}

struct StencilCache {
    std::vector<std::vector<StencilTemplate>> byKind;
};

const StencilCache& Cache()
{
    static const StencilCache* cache = [] {
        auto* c = new StencilCache;
        const BytecodeRegistry& reg = GuestRegistry();
        c->byKind.resize(reg.NumKinds());
        for (uint32_t kind = 0; kind < reg.NumKinds(); kind++) {
            for (uint32_t v = 0; v < reg.Def(kind).variants.size(); v++)
                c->byKind[kind].push_back(Build(kind, v));
        }
        return c;
    }();
    return *cache;
}

void DumpHoles(std::ostringstream& os, const std::vector<HoleSlot>& holes, const char* indent)
{
    for (const HoleSlot& h : holes) {
        os << indent << "hole " << h.name << ": " << h.expr.Describe();
        if (h.decision.mode != HoleMode::RuntimeEvaluated)
            os << " in [" << h.decision.lo << "," << h.decision.hi << "]";
        os << " " << h.decision.Describe() << "\n";
    }
}

} // namespace

const StencilTemplate& GetStencil(uint32_t kind, uint32_t variant)
{
    return Cache().byKind.at(kind).at(variant);
}

std::string DumpStencil(const StencilTemplate& s)
{
    std::ostringstream os;
    os << "stencil " << s.name;
    if (!s.supported) {
        os << " unsupported: " << s.unsupportedReason << "\n";
        return os.str();
    }
    os << "\n";
    os << "  fast cell: " << CellHandlerKindName(s.fast.kind) << " payload=" << s.fast.payloadSlots
       << " fallthrough=" << (s.fallthroughEliminable ? "eliminable" : "kept") << "\n";
    DumpHoles(os, s.fast.holes, "    ");
    const BytecodeDef& def = GuestRegistry().Def(s.kind);
    for (const sem::Guard& g : s.guards) {
        os << "    guard " << def.operands[g.operand].name << ": " << GuestScheme().MaskName(g.mask) << " via "
           << GuestScheme().DescribeDecision(g.decision) << "\n";
    }
    if (s.slow) {
        os << "  slow cell: " << CellHandlerKindName(s.slow->kind) << " payload=" << s.slow->payloadSlots << "\n";
        DumpHoles(os, s.slow->holes, "    ");
    }
    if (s.icSite) {
        const IcKind& ic = GuestIcKinds()[s.icSite->descriptor];
        os << "  ic site: " << ic.Desc().name << " slab=" << s.icSite->slabCapacity << "\n";
        for (uint32_t e = 0; e < ic.Effects().size(); e++) {
            os << "    stub " << ic.Effects()[e].name << " payload=" << s.icSite->stateHoles[e].size() << "\n";
            DumpHoles(os, s.icSite->stateHoles[e], "      ");
        }
    }
    if (s.callIcSite)
        os << "  call ic site\n";
    return os.str();
}

std::string DumpTemplates(const std::vector<std::pair<uint32_t, uint32_t>>& variants)
{
    std::string out;
    for (const auto& [kind, variant] : variants)
        out += DumpStencil(GetStencil(kind, variant));
    return out;
}

} // namespace tiervm
