#include "exec_internal.h"

#include "tiervm/common.h"
#include "tiervm/guest_bytecodes.h"

#include <vector>

namespace tiervm::exec {

namespace {

BoxedValue Op(Engine& e, const PinnedState& st, const ExecSite& s, unsigned i) { return e.OperandValueOf(st, s.d->ops[i]); }

Flow ArithOp(Engine& e, PinnedState& st, const ExecSite& s, sem::PrimKind prim)
{
    BoxedValue a = Op(e, st, s, 0);
    BoxedValue b = Op(e, st, s, 1);
    if (!a.IsDouble() || !b.IsDouble()) {
        e.Stats().slowPathsTaken++;
        BoxedValue bad = a.IsDouble() ? b : a;
        return e.ThrowMessage(st, s, std::string("attempt to perform arithmetic on a ") + Engine::TypeName(bad) + " value");
    }
    e.Slot(st, s.d->output) = BoxedValue::Double(sem::EvalArith(prim, a.AsDouble(), b.AsDouble()));
    return Flow::Next;
}

bool RawEquals(BoxedValue a, BoxedValue b)
{
    if (a.IsDouble() && b.IsDouble())
        return a.AsDouble() == b.AsDouble();
    return a.word == b.word;
}

Flow CompareError(Engine& e, PinnedState& st, const ExecSite& s, BoxedValue a, BoxedValue b)
{
    std::string ta = Engine::TypeName(a);
    std::string tb = Engine::TypeName(b);
    if (ta == tb)
        return e.ThrowMessage(st, s, "attempt to compare two " + ta + " values");
    return e.ThrowMessage(st, s, "attempt to compare " + ta + " with " + tb);
}

enum class Cmp { Lt, Le, Eq };

Flow CompareJump(Engine& e, PinnedState& st, const ExecSite& s, Cmp cmp, bool negated)
{
    BoxedValue a = Op(e, st, s, 0);
    BoxedValue b = Op(e, st, s, 1);
    bool r;
    if (cmp == Cmp::Eq) {
        r = RawEquals(a, b);
    } else if (a.IsDouble() && b.IsDouble()) {
        r = cmp == Cmp::Lt ? a.AsDouble() < b.AsDouble() : a.AsDouble() <= b.AsDouble();
    } else if (a.IsString() && b.IsString()) {
        const std::string& x = e.GetHeap().Str(a);
        const std::string& y = e.GetHeap().Str(b);
        r = cmp == Cmp::Lt ? x < y : x <= y;
    } else {
        return CompareError(e, st, s, a, b);
    }
    return r != negated ? Flow::Branch : Flow::Next;
}

Flow IndexError(Engine& e, PinnedState& st, const ExecSite& s, BoxedValue v)
{
    return e.ThrowMessage(st, s, std::string("attempt to index a ") + Engine::TypeName(v) + " value");
}

} // namespace

Flow Nop(Engine&, PinnedState&, const ExecSite&) { return Flow::Next; }

Flow Mov(Engine& e, PinnedState& st, const ExecSite& s)
{
    e.Slot(st, s.d->output) = e.Slot(st, s.d->ops[0].ord);
    return Flow::Next;
}

Flow LoadConstant(Engine& e, PinnedState& st, const ExecSite& s)
{
    e.Slot(st, s.d->output) = s.d->ops[0].cst;
    return Flow::Next;
}

Flow Add(Engine& e, PinnedState& st, const ExecSite& s) { return ArithOp(e, st, s, sem::PrimKind::Add); }
Flow Sub(Engine& e, PinnedState& st, const ExecSite& s) { return ArithOp(e, st, s, sem::PrimKind::Sub); }
Flow Mul(Engine& e, PinnedState& st, const ExecSite& s) { return ArithOp(e, st, s, sem::PrimKind::Mul); }
Flow Div(Engine& e, PinnedState& st, const ExecSite& s) { return ArithOp(e, st, s, sem::PrimKind::Div); }
Flow Mod(Engine& e, PinnedState& st, const ExecSite& s) { return ArithOp(e, st, s, sem::PrimKind::Mod); }

Flow Unm(Engine& e, PinnedState& st, const ExecSite& s)
{
    BoxedValue v = Op(e, st, s, 0);
    if (!v.IsDouble())
        return e.ThrowMessage(st, s, std::string("attempt to perform arithmetic on a ") + Engine::TypeName(v) + " value");
    e.Slot(st, s.d->output) = BoxedValue::Double(-v.AsDouble());
    return Flow::Next;
}

Flow Not(Engine& e, PinnedState& st, const ExecSite& s)
{
    e.Slot(st, s.d->output) = BoxedValue::Bool(!Op(e, st, s, 0).IsTruthy());
    return Flow::Next;
}

Flow Len(Engine& e, PinnedState& st, const ExecSite& s)
{
    BoxedValue v = Op(e, st, s, 0);
    double n;
    if (v.IsString())
        n = double(e.GetHeap().Str(v).size());
    else if (v.IsTable())
        n = e.GetHeap().Length(e.GetHeap().Table(v));
    else
        return e.ThrowMessage(st, s, std::string("attempt to get length of a ") + Engine::TypeName(v) + " value");
    e.Slot(st, s.d->output) = BoxedValue::Double(n);
    return Flow::Next;
}

Flow Concat(Engine& e, PinnedState& st, const ExecSite& s)
{
    BoxedValue a = Op(e, st, s, 0);
    BoxedValue b = Op(e, st, s, 1);
    for (BoxedValue v : { a, b }) {
        if (!v.IsString() && !v.IsDouble())
            return e.ThrowMessage(st, s, std::string("attempt to concatenate a ") + Engine::TypeName(v) + " value");
    }
    e.Slot(st, s.d->output) = e.Str(e.ToString(a) + e.ToString(b));
    return Flow::Next;
}

Flow JmpIfLt(Engine& e, PinnedState& st, const ExecSite& s) { return CompareJump(e, st, s, Cmp::Lt, false); }
Flow JmpIfNotLt(Engine& e, PinnedState& st, const ExecSite& s) { return CompareJump(e, st, s, Cmp::Lt, true); }
Flow JmpIfLe(Engine& e, PinnedState& st, const ExecSite& s) { return CompareJump(e, st, s, Cmp::Le, false); }
Flow JmpIfNotLe(Engine& e, PinnedState& st, const ExecSite& s) { return CompareJump(e, st, s, Cmp::Le, true); }
Flow JmpIfEq(Engine& e, PinnedState& st, const ExecSite& s) { return CompareJump(e, st, s, Cmp::Eq, false); }
Flow JmpIfNotEq(Engine& e, PinnedState& st, const ExecSite& s) { return CompareJump(e, st, s, Cmp::Eq, true); }

Flow BrTruthy(Engine& e, PinnedState& st, const ExecSite& s) { return Op(e, st, s, 0).IsTruthy() ? Flow::Branch : Flow::Next; }
Flow BrFalsy(Engine& e, PinnedState& st, const ExecSite& s) { return Op(e, st, s, 0).IsTruthy() ? Flow::Next : Flow::Branch; }
Flow Jump(Engine&, PinnedState&, const ExecSite&) { return Flow::Branch; }

Flow ForPrep(Engine& e, PinnedState& st, const ExecSite& s)
{
    uint32_t base = s.d->ops[0].ord;
    BoxedValue i = e.Slot(st, base);
    BoxedValue limit = e.Slot(st, base + 1);
    BoxedValue step = e.Slot(st, base + 2);
    if (!i.IsDouble())
        return e.ThrowMessage(st, s, "'for' initial value must be a number");
    if (!limit.IsDouble())
        return e.ThrowMessage(st, s, "'for' limit must be a number");
    if (!step.IsDouble())
        return e.ThrowMessage(st, s, "'for' step must be a number");
    double st0 = step.AsDouble();
    bool enter = st0 > 0 ? i.AsDouble() <= limit.AsDouble() : i.AsDouble() >= limit.AsDouble();
    if (!enter)
        return Flow::Branch;
    e.Slot(st, base + 3) = i;
    return Flow::Next;
}

Flow ForLoop(Engine& e, PinnedState& st, const ExecSite& s)
{
    uint32_t base = s.d->ops[0].ord;
    double step = e.Slot(st, base + 2).AsDouble();
    double limit = e.Slot(st, base + 1).AsDouble();
    double i = e.Slot(st, base).AsDouble() + step;
    BoxedValue iv = BoxedValue::Double(i);
    e.Slot(st, base) = iv;
    if (step > 0 ? i <= limit : i >= limit) {
        e.Slot(st, base + 3) = iv;
        return Flow::Branch;
    }
    return Flow::Next;
}

Flow NewTable(Engine& e, PinnedState& st, const ExecSite& s)
{
    e.Slot(st, s.d->output) = e.GetHeap().NewTable();
    return Flow::Next;
}

Flow GetById(Engine& e, PinnedState& st, const ExecSite& s)
{
    BoxedValue b = e.Slot(st, s.d->ops[0].ord);
    if (!b.IsTable())
        return IndexError(e, st, s, b);
    IcInput in { e.GetHeap().Table(b)->hiddenClass->id, b, s.d->ops[1].cst, {} };
    BoxedValue v = e.RunIc(st, s, kIcGetById, in);
    e.Slot(st, s.d->output) = v;
    return Flow::Next;
}

Flow SetById(Engine& e, PinnedState& st, const ExecSite& s)
{
    BoxedValue b = e.Slot(st, s.d->ops[0].ord);
    if (!b.IsTable())
        return IndexError(e, st, s, b);
    IcInput in { e.GetHeap().Table(b)->hiddenClass->id, b, s.d->ops[1].cst, e.Slot(st, s.d->ops[2].ord) };
    e.RunIc(st, s, kIcSetById, in);
    return Flow::Next;
}

Flow GetByVal(Engine& e, PinnedState& st, const ExecSite& s)
{
    BoxedValue b = e.Slot(st, s.d->ops[0].ord);
    if (!b.IsTable())
        return IndexError(e, st, s, b);
    e.Slot(st, s.d->output) = e.GetHeap().GetByVal(e.GetHeap().Table(b), Op(e, st, s, 1));
    return Flow::Next;
}

Flow SetByVal(Engine& e, PinnedState& st, const ExecSite& s)
{
    BoxedValue b = e.Slot(st, s.d->ops[0].ord);
    if (!b.IsTable())
        return IndexError(e, st, s, b);
    BoxedValue key = Op(e, st, s, 1);
    if (!e.GetHeap().SetByVal(e.GetHeap().Table(b), key, e.Slot(st, s.d->ops[2].ord)))
        return e.ThrowMessage(st, s, key.IsNil() ? "index is nil" : "index is NaN");
    return Flow::Next;
}

Flow GetGlobal(Engine& e, PinnedState& st, const ExecSite& s)
{
    BoxedValue g = st.ctx->globalObject;
    IcInput in { e.GetHeap().Table(g)->hiddenClass->id, g, s.d->ops[0].cst, {} };
    BoxedValue v = e.RunIc(st, s, kIcGetGlobal, in);
    e.Slot(st, s.d->output) = v;
    return Flow::Next;
}

Flow SetGlobal(Engine& e, PinnedState& st, const ExecSite& s)
{
    BoxedValue g = st.ctx->globalObject;
    IcInput in { e.GetHeap().Table(g)->hiddenClass->id, g, s.d->ops[0].cst, e.Slot(st, s.d->ops[1].ord) };
    e.RunIc(st, s, kIcSetGlobal, in);
    return Flow::Next;
}

Flow CreateClosure(Engine& e, PinnedState& st, const ExecSite& s)
{
    FunctionObject* cur = e.CurrentFunction(st);
    FunctionProto* proto = cur->proto->children.at(size_t(s.d->ops[0].lit));
    BoxedValue fv = e.GetHeap().NewClosure(proto);
    FunctionObject* fo = e.GetHeap().Function(fv);
    fo->upvalues.reserve(proto->upvalues.size());
    for (const UpvalueDesc& u : proto->upvalues) {
        if (!u.fromParentLocal) {
            fo->upvalues.push_back(cur->upvalues[u.index]);
        } else if (u.isMutable) {
            fo->upvalues.push_back(e.FindOrCreateUpvalue(st.stackBase + u.index));
        } else {
            Upvalue* c = e.GetHeap().NewUpvalue();
            c->open = false;
            c->closed = e.Slot(st, u.index);
            fo->upvalues.push_back(c);
        }
    }
    e.Slot(st, s.d->output) = fv;
    return Flow::Next;
}

Flow UpvalueGet(Engine& e, PinnedState& st, const ExecSite& s)
{
    Upvalue* u = e.CurrentFunction(st)->upvalues[size_t(s.d->ops[0].lit)];
    if (s.d->ops[1].lit == 0) {
        TIERVM_DEBUG_ASSERT(!u->open, "immutable upvalues are captured closed");
        e.Slot(st, s.d->output) = u->closed;
    } else {
        e.Slot(st, s.d->output) = e.ReadUpvalue(u);
    }
    return Flow::Next;
}

Flow UpvaluePut(Engine& e, PinnedState& st, const ExecSite& s)
{
    Upvalue* u = e.CurrentFunction(st)->upvalues[size_t(s.d->ops[0].lit)];
    e.WriteUpvalue(u, e.Slot(st, s.d->ops[1].ord));
    return Flow::Next;
}

Flow UpvalueClose(Engine& e, PinnedState& st, const ExecSite& s)
{
    e.CloseUpvalues(st.stackBase + s.d->ops[0].ord);
    return Flow::Next;
}

Flow Call(Engine& e, PinnedState& st, const ExecSite& s)
{
    return e.DoCall(st, s, s.d->ops[0].ord, s.d->ops[0].len, s.d->ops[2].lit != 0, false);
}

Flow TailCall(Engine& e, PinnedState& st, const ExecSite& s)
{
    return e.DoTailCall(st, s, s.d->ops[0].ord, s.d->ops[0].len, s.d->ops[1].lit != 0);
}

Flow Return(Engine& e, PinnedState& st, const ExecSite& s)
{
    e.Account(st, s.ord);
    e.DoReturn(st, st.stackBase, &e.Slot(st, s.d->ops[0].ord), s.d->ops[0].len);
    return Flow::Transferred;
}

Flow ReturnVarRes(Engine& e, PinnedState& st, const ExecSite& s)
{
    std::vector<BoxedValue> vals;
    for (uint32_t i = 0; i < s.d->ops[0].len; i++)
        vals.push_back(e.Slot(st, s.d->ops[0].ord + i));
    const std::vector<BoxedValue>& vr = e.TakeVarRes(st, s.ord);
    vals.insert(vals.end(), vr.begin(), vr.end());
    e.Account(st, s.ord);
    e.DoReturn(st, st.stackBase, vals.data(), uint32_t(vals.size()));
    return Flow::Transferred;
}

Flow VarArgs(Engine& e, PinnedState& st, const ExecSite& s)
{
    auto& stack = st.ctx->stack;
    uint32_t nva = uint32_t(stack[st.stackBase + kHdrNumVarArgs].word);
    uint32_t first = st.stackBase - kHeaderSlots - nva;
    int64_t count = s.d->ops[1].lit;
    if (count < 0) {
        std::vector<BoxedValue> vals(stack.begin() + first, stack.begin() + first + nva);
        e.StoreVarRes(st, s.ord, vals.data(), nva);
        return Flow::Next;
    }
    uint32_t dst = s.d->ops[0].ord;
    for (int64_t i = 0; i < count; i++)
        e.Slot(st, dst + uint32_t(i)) = uint32_t(i) < nva ? stack[first + uint32_t(i)] : BoxedValue::Nil();
    return Flow::Next;
}

Flow TableSetVarRes(Engine& e, PinnedState& st, const ExecSite& s)
{
    TableObject* t = e.GetHeap().Table(e.Slot(st, s.d->ops[0].ord));
    std::vector<BoxedValue> vr = e.TakeVarRes(st, s.ord);
    double start = double(s.d->ops[1].lit);
    for (size_t i = 0; i < vr.size(); i++)
        e.GetHeap().SetByVal(t, BoxedValue::Double(start + double(i)), vr[i]);
    return Flow::Next;
}

Flow Probe(Engine& e, PinnedState&, const ExecSite&)
{
    e.Stats().probesExecuted++;
    return Flow::Next;
}

ExecFn ForKind(uint32_t kind)
{
    static const std::vector<ExecFn> table = [] {
        std::vector<ExecFn> t(GuestRegistry().NumKinds(), nullptr);
        const GuestKinds& k = Kinds();
#define TIERVM_EXEC_ENTRY(name) t[k.name] = &name;
        TIERVM_FOR_EACH_EXEC(TIERVM_EXEC_ENTRY)
#undef TIERVM_EXEC_ENTRY
        return t;
    }();
    return table[kind];
}

} // namespace tiervm::exec

namespace tiervm {

Flow Engine::Exec(PinnedState& st, const ExecSite& site)
{
    return exec::ForKind(site.d->kind)(*this, st, site);
}

} // namespace tiervm
