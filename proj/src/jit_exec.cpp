#include "exec_internal.h"
#include "jit_internal.h"

#include "tiervm/common.h"
#include "tiervm/guest_bytecodes.h"
#include "tiervm/guest_types.h"

#include <vector>

namespace tiervm::jit {

namespace {

void AfterTransfer(Engine& e, PinnedState& st)
{
    if (e.HasPendingReturn() && st.mode == ExecMode::Jit)
        e.FinishReturnJit(st);
}

void ApplyFlow(Engine& e, PinnedState& st, Flow f, uint32_t ord, uint32_t nextAddr, uint32_t targetAddr)
{
    switch (f) {
    case Flow::Next:
        st.pos = nextAddr - 1;
        break;
    case Flow::Branch:
        e.TakeBranch(st, ord, targetAddr - 1);
        st.pos = targetAddr - 1;
        break;
    case Flow::Transferred:
        AfterTransfer(e, st);
        break;
    }
}

template<exec::ExecFn F>
void Generic(Engine& e, PinnedState& st, const Cell& c)
{
    DecodedBytecode d = OperandsFromPayload(*st.cb->code, c);
    uint32_t ord = c.ord;
    uint32_t cell = st.pos;
    ExecSite site { &d, ord, 1, cell, c.site };
    ApplyFlow(e, st, F(e, st, site), ord, cell + 2, d.target);
}

BoxedValue LoadOperand(Engine& e, const PinnedState& st, const HoleSlot& h, const uint64_t* p)
{
    int64_t v = ReadHole(h.expr, h.decision, p[h.slot]);
    if (h.expr.root == HoleRoot::ConstantValue)
        return BoxedValue::FromWord(uint64_t(v));
    return e.Slot(st, uint32_t(v / 8));
}

void Arith(Engine& e, PinnedState& st, const Cell& c)
{
    const CodeObject& co = *st.cb->code;
    const StencilTemplate& s = *c.stencil;
    const uint64_t* p = co.Payload(c);
    BoxedValue ops[2] = { LoadOperand(e, st, s.fast.holes[0], p), LoadOperand(e, st, s.fast.holes[1], p) };
    const BoxingScheme& scheme = GuestScheme();
    for (const sem::Guard& g : s.guards) {
        if (!scheme.Evaluate(g.decision, ops[g.operand])) {
            const Cell& slow = co.slowCells[c.slowCell];
            slow.handler(e, st, slow);
            return;
        }
    }
    const HoleSlot& out = s.fast.holes[2];
    uint32_t dst = uint32_t(ReadHole(out.expr, out.decision, p[out.slot]) / 8);
    e.Slot(st, dst) = BoxedValue::Double(sem::EvalArith(sem::PrimKind(s.prim), ops[0].AsDouble(), ops[1].AsDouble()));
    st.pos++;
}

void SlowBridge(Engine& e, PinnedState& st, const Cell& c)
{
    const CodeObject& co = *st.cb->code;
    const HoleSlot& h = c.stencil->slow->holes[0];
    uint32_t offset = uint32_t(ReadHole(h.expr, h.decision, co.slowPayload[c.payload + h.slot]));
    SlowPathRecord rec = co.Record(offset);
    e.Stats().slowPathsTaken++;
    ExecSite site { &rec.bc, rec.ord, 1, st.pos, -1 };
    ApplyFlow(e, st, e.Exec(st, site), rec.ord, rec.fallthroughAddr, rec.targetAddr);
}

void CallIc(Engine& e, PinnedState& st, const Cell& c)
{
    CodeObject& co = *st.cb->code;
    DecodedBytecode d = OperandsFromPayload(co, c);
    CallIcSite& ic = co.callIcs[c.site];
    Counters& ctr = e.Stats();
    uint32_t base = d.ops[0].ord;
    BoxedValue callee = e.Slot(st, base);
    bool checked = false;
    if (ic.mode == CallIcSite::Mode::Direct && callee.word == ic.cachedFunction) {
        ctr.callIcHits++;
        checked = true;
    } else {
        ctr.callIcFunctionChecks++;
        if (callee.IsFunction()) {
            const FunctionProto* proto = e.GetHeap().Function(callee)->proto;
            if (ic.mode == CallIcSite::Mode::Closure && proto && proto == ic.cachedProto) {
                ctr.callIcHits++;
            } else if (ic.mode == CallIcSite::Mode::Direct && proto && proto == ic.cachedProto) {
                ic.mode = CallIcSite::Mode::Closure;
                ctr.callIcTransitions++;
            } else {
                ic.mode = CallIcSite::Mode::Direct;
                ic.cachedFunction = callee.word;
                ic.cachedProto = proto;
            }
            checked = true;
        }
    }
    ExecSite site { &d, c.ord, 1, st.pos, c.site };
    e.DoCall(st, site, base, d.ops[0].len, d.ops[2].lit != 0, checked);
    AfterTransfer(e, st);
}

} // namespace

JitHandler GenericHandler(uint32_t kind)
{
    static const std::vector<JitHandler> table = [] {
        std::vector<JitHandler> t(GuestRegistry().NumKinds(), nullptr);
        const GuestKinds& k = Kinds();
#define TIERVM_JIT_ENTRY(name) t[k.name] = &Generic<&exec::name>;
        TIERVM_FOR_EACH_EXEC(TIERVM_JIT_ENTRY)
#undef TIERVM_JIT_ENTRY
        return t;
    }();
    return table[kind];
}

JitHandler ArithHandler() { return &Arith; }
JitHandler SlowBridgeHandler() { return &SlowBridge; }
JitHandler CallIcHandler() { return &CallIc; }

} // namespace tiervm::jit

namespace tiervm {

void Engine::RunJit(PinnedState& st)
{
    if (m_pendingReturn)
        FinishReturnJit(st);
    const bool naive = m_cfg.naiveCounting;
    while (st.mode == ExecMode::Jit) {
        const Cell& c = st.cb->code->fastCells[st.pos];
        if (naive)
            m_counters.naiveBytecodes++;
        c.handler(*this, st, c);
    }
}

} // namespace tiervm
