#include "tiervm/guest_bytecodes.h"

#include "tiervm/common.h"
#include "tiervm/guest_semantics.h"
#include "tiervm/guest_types.h"
#include "tiervm/vm.h"

namespace tiervm {

namespace {

using S = Specialization;

Engine& EngineOf(IcEnv env) { return *static_cast<Engine*>(env); }

BoxedValue GetBody(IcEnv env, const IcInput& in, IcEffectSink& sink)
{
    TableObject* t = EngineOf(env).GetHeap().Table(in.base);
    int64_t slot = t->hiddenClass->Lookup(in.name.HeapHandle());
    IcState s {};
    if (slot >= 0) {
        s.f[0] = slot;
        return sink.Fire(kGetEffectFound, s);
    }
    return sink.Fire(kGetEffectNotFound, s);
}

BoxedValue GetFound(IcEnv env, const IcInput& in, const IcState& s)
{
    return EngineOf(env).GetHeap().Table(in.base)->GetSlot(uint32_t(s.f[0]));
}

BoxedValue GetNotFound(IcEnv, const IcInput&, const IcState&) { return BoxedValue::Nil(); }

BoxedValue SetBody(IcEnv env, const IcInput& in, IcEffectSink& sink)
{
    Heap& heap = EngineOf(env).GetHeap();
    TableObject* t = heap.Table(in.base);
    int64_t slot = t->hiddenClass->Lookup(in.name.HeapHandle());
    IcState s {};
    if (slot >= 0) {
        s.f[0] = slot;
        return sink.Fire(kSetEffectReplace, s);
    }
    HiddenClass* next = heap.Transition(t->hiddenClass, in.name.HeapHandle());
    s.f[0] = int64_t(next->properties.size() - 1);
    s.f[1] = next->id;
    return sink.Fire(kSetEffectTransition, s);
}

BoxedValue SetReplace(IcEnv env, const IcInput& in, const IcState& s)
{
    EngineOf(env).GetHeap().Table(in.base)->SetSlot(uint32_t(s.f[0]), in.value);
    return BoxedValue::Nil();
}

BoxedValue SetTransition(IcEnv env, const IcInput& in, const IcState& s)
{
    Heap& heap = EngineOf(env).GetHeap();
    TableObject* t = heap.Table(in.base);
    t->hiddenClass = heap.ClassById(uint32_t(s.f[1]));
    uint32_t slot = uint32_t(s.f[0]);
    if (slot < kInlineSlots) {
        t->inlineSlots[slot] = in.value;
    } else {
        TIERVM_DEBUG_ASSERT(t->overflow.size() == slot - kInlineSlots, "transition appends the next overflow slot");
        t->overflow.push_back(in.value);
    }
    return BoxedValue::Nil();
}

IcStateField SlotField() { return { "slot", IcFieldKind::Int, std::make_pair(int64_t(0), kMaxPropertySlot) }; }

IcAxis InlineSlotAxis() { return { 0, { 0, 1, 2, 3 }, true }; }

BytecodeDef Arith(const std::string& name, sem::PrimKind prim)
{
    using namespace tmask;
    BytecodeDef d;
    d.name = name;
    d.operands = { OperandSpec::LocalOrConstant("lhs"), OperandSpec::LocalOrConstant("rhs") };
    d.result.hasOutput = true;
    d.semantics = ArithSemantics(prim, name);
    d.slowPaths = { "non_double" };
    d.sameLengthGroup = 0;
    d.variants = {
        { "LL", { S::IsLocal(), S::IsLocal() }, { tDoubleNotNaN, tDoubleNotNaN }, false },
        { "LC", { S::IsLocal(), S::IsConstant(tDouble) }, { tDoubleNotNaN, std::nullopt }, false },
        { "LK", { S::IsLocal(), S::IsConstant() }, {}, false },
        { "CL", { S::IsConstant(tDouble), S::IsLocal() }, { std::nullopt, tDoubleNotNaN }, false },
        { "KL", { S::IsConstant(), S::IsLocal() }, {}, false },
        { "KK", { S::IsConstant(), S::IsConstant() }, {}, false },
    };
    return d;
}

BytecodeDef Simple(const std::string& name, std::vector<OperandSpec> ops, bool hasOutput, bool mayBranch = false)
{
    BytecodeDef d;
    d.name = name;
    d.operands = std::move(ops);
    d.result.hasOutput = hasOutput;
    d.result.mayBranch = mayBranch;
    d.variants.push_back(VariantSpec {});
    return d;
}

BytecodeDef CompareJump(const std::string& name)
{
    BytecodeDef d = Simple(name, { OperandSpec::Local("lhs"), OperandSpec::LocalOrConstant("rhs") }, false, true);
    d.variants = {
        { "LL", { S::Any(), S::IsLocal() }, {}, false },
        { "LC", { S::Any(), S::IsConstant() }, {}, false },
    };
    return d;
}

struct Registry {
    BytecodeRegistry reg;
    GuestKinds k {};
    std::vector<IcKind> ics;
};

Registry* Build()
{
    auto* r = new Registry();
    r->ics.emplace_back(GetByIdDescriptor("GetById"));
    r->ics.emplace_back(SetByIdDescriptor("SetById"));
    r->ics.emplace_back(GetByIdDescriptor("GetGlobal", false));
    r->ics.emplace_back(SetByIdDescriptor("SetGlobal", false));

    BytecodeRegistry& reg = r->reg;
    GuestKinds& k = r->k;
    k.Nop = kNopOpcode;
    k.Mov = reg.Define(Simple("Mov", { OperandSpec::Local("src") }, true));
    k.LoadConstant = reg.Define(Simple("LoadConstant", { OperandSpec::Constant("value") }, true));
    k.Add = reg.Define(Arith("Add", sem::PrimKind::Add));
    k.Sub = reg.Define(Arith("Sub", sem::PrimKind::Sub));
    k.Mul = reg.Define(Arith("Mul", sem::PrimKind::Mul));
    k.Div = reg.Define(Arith("Div", sem::PrimKind::Div));
    k.Mod = reg.Define(Arith("Mod", sem::PrimKind::Mod));
    k.Unm = reg.Define(Simple("Unm", { OperandSpec::Local("src") }, true));
    k.Not = reg.Define(Simple("Not", { OperandSpec::Local("src") }, true));
    k.Len = reg.Define(Simple("Len", { OperandSpec::Local("src") }, true));
    k.Concat = reg.Define(Simple("Concat", { OperandSpec::Local("lhs"), OperandSpec::Local("rhs") }, true));
    k.JmpIfLt = reg.Define(CompareJump("JmpIfLt"));
    k.JmpIfNotLt = reg.Define(CompareJump("JmpIfNotLt"));
    k.JmpIfLe = reg.Define(CompareJump("JmpIfLe"));
    k.JmpIfNotLe = reg.Define(CompareJump("JmpIfNotLe"));
    k.JmpIfEq = reg.Define(CompareJump("JmpIfEq"));
    k.JmpIfNotEq = reg.Define(CompareJump("JmpIfNotEq"));
    k.BrTruthy = reg.Define(Simple("BrTruthy", { OperandSpec::Local("src") }, false, true));
    k.BrFalsy = reg.Define(Simple("BrFalsy", { OperandSpec::Local("src") }, false, true));
    {
        BytecodeDef d = Simple("Jump", { OperandSpec::Literal("loop", 1, false) }, false, true);
        d.variants = { { "", { S::HasValue(0) }, {}, false }, { "Loop", { S::HasValue(1) }, {}, true } };
        k.Jump = reg.Define(std::move(d));
    }
    k.ForPrep = reg.Define(Simple("ForPrep", { OperandSpec::Local("base") }, false, true));
    {
        BytecodeDef d = Simple("ForLoop", { OperandSpec::Local("base") }, false, true);
        d.variants[0].osrCheck = true;
        k.ForLoop = reg.Define(std::move(d));
    }
    k.NewTable = reg.Define(Simple("NewTable", {}, true));
    {
        BytecodeDef d = Simple("GetById", { OperandSpec::Local("base"), OperandSpec::Constant("name", tmask::tString) }, true);
        d.ics = { { kIcGetById, true } };
        k.GetById = reg.Define(std::move(d));
    }
    {
        BytecodeDef d = Simple("SetById",
            { OperandSpec::Local("base"), OperandSpec::Constant("name", tmask::tString), OperandSpec::Local("value") }, false);
        d.ics = { { kIcSetById, true } };
        k.SetById = reg.Define(std::move(d));
    }
    {
        BytecodeDef d = Simple("GetByVal", { OperandSpec::Local("base"), OperandSpec::LocalOrConstant("key") }, true);
        d.variants = { { "L", { S::Any(), S::IsLocal() }, {}, false }, { "C", { S::Any(), S::IsConstant() }, {}, false } };
        k.GetByVal = reg.Define(std::move(d));
    }
    {
        BytecodeDef d = Simple("SetByVal", { OperandSpec::Local("base"), OperandSpec::LocalOrConstant("key"), OperandSpec::Local("value") }, false);
        d.variants = { { "L", { S::Any(), S::IsLocal(), S::Any() }, {}, false }, { "C", { S::Any(), S::IsConstant(), S::Any() }, {}, false } };
        k.SetByVal = reg.Define(std::move(d));
    }
    {
        BytecodeDef d = Simple("GetGlobal", { OperandSpec::Constant("name", tmask::tString) }, true);
        d.ics = { { kIcGetGlobal, false } };
        k.GetGlobal = reg.Define(std::move(d));
    }
    {
        BytecodeDef d = Simple("SetGlobal", { OperandSpec::Constant("name", tmask::tString), OperandSpec::Local("value") }, false);
        d.ics = { { kIcSetGlobal, false } };
        k.SetGlobal = reg.Define(std::move(d));
    }
    k.CreateClosure = reg.Define(Simple("CreateClosure", { OperandSpec::Literal("proto", 4, false) }, true));
    {
        BytecodeDef d = Simple("UpvalueGet", { OperandSpec::Literal("ord", 2, false), OperandSpec::Literal("mutable", 1, false) }, true);
        d.variants = { { "Imm", { S::Any(), S::HasValue(0) }, {}, false }, { "Mut", { S::Any(), S::HasValue(1) }, {}, false } };
        k.UpvalueGet = reg.Define(std::move(d));
    }
    k.UpvaluePut = reg.Define(Simple("UpvaluePut", { OperandSpec::Literal("ord", 2, false), OperandSpec::Local("value") }, false));
    k.UpvalueClose = reg.Define(Simple("UpvalueClose", { OperandSpec::Local("base") }, false));
    {
        BytecodeDef d = Simple("Call",
            { OperandSpec::RangeRW("args"), OperandSpec::Literal("numRets", 2, true), OperandSpec::Literal("passVarRes", 1, false) }, false);
        d.returnContinuations = { "on_return" };
        d.variants = { { "", { S::Any(), S::Any(), S::HasValue(0) }, {}, false }, { "VR", { S::Any(), S::Any(), S::HasValue(1) }, {}, false } };
        k.Call = reg.Define(std::move(d));
    }
    {
        BytecodeDef d = Simple("TailCall", { OperandSpec::RangeRO("args"), OperandSpec::Literal("passVarRes", 1, false) }, false);
        d.variants = { { "", { S::Any(), S::HasValue(0) }, {}, false }, { "VR", { S::Any(), S::HasValue(1) }, {}, false } };
        k.TailCall = reg.Define(std::move(d));
    }
    k.Return = reg.Define(Simple("Return", { OperandSpec::RangeRO("values") }, false));
    k.ReturnVarRes = reg.Define(Simple("ReturnVarRes", { OperandSpec::RangeRO("values") }, false));
    k.VarArgs = reg.Define(Simple("VarArgs", { OperandSpec::Local("dst"), OperandSpec::Literal("count", 2, true) }, false));
    k.TableSetVarRes = reg.Define(Simple("TableSetVarRes", { OperandSpec::Local("table"), OperandSpec::Literal("start", 4, false) }, false));
    k.Probe = reg.Define(Simple("Probe", {}, false));

    for (uint32_t kind : { k.GetById, k.SetById }) {
        const IcKind& ic = r->ics[reg.Def(kind).ics[0].descriptor];
        for (uint32_t e = 0; e < ic.Effects().size(); e++)
            reg.AddQuickenedOpcode(kind, 0, int32_t(e), reg.Def(kind).name + "@" + ic.Effects()[e].name);
    }
    reg.Finalize();
    return r;
}

const Registry& Get()
{
    static const Registry* r = Build();
    return *r;
}

} // namespace

ICDescriptor GetByIdDescriptor(const std::string& name, bool fused)
{
    ICDescriptor d;
    d.name = name;
    d.body = &GetBody;
    d.impossibleKey = 0;
    d.fuseIntoOpcode = fused;
    d.effects.push_back({ "found", { SlotField() }, { InlineSlotAxis() }, &GetFound });
    d.effects.push_back({ "notfound", {}, {}, &GetNotFound });
    return d;
}

ICDescriptor SetByIdDescriptor(const std::string& name, bool fused)
{
    ICDescriptor d;
    d.name = name;
    d.body = &SetBody;
    d.impossibleKey = 0;
    d.fuseIntoOpcode = fused;
    d.effects.push_back({ "replace", { SlotField() }, { InlineSlotAxis() }, &SetReplace });
    d.effects.push_back({ "transition",
        { SlotField(), { "newClassId", IcFieldKind::Int, std::make_pair(int64_t(1), kMaxPropertySlot) } }, {}, &SetTransition });
    return d;
}

const BytecodeRegistry& GuestRegistry() { return Get().reg; }
const GuestKinds& Kinds() { return Get().k; }
const std::vector<IcKind>& GuestIcKinds() { return Get().ics; }

int ArithPrimOf(uint32_t kind)
{
    const GuestKinds& k = Kinds();
    if (kind == k.Add)
        return int(sem::PrimKind::Add);
    if (kind == k.Sub)
        return int(sem::PrimKind::Sub);
    if (kind == k.Mul)
        return int(sem::PrimKind::Mul);
    if (kind == k.Div)
        return int(sem::PrimKind::Div);
    if (kind == k.Mod)
        return int(sem::PrimKind::Mod);
    return -1;
}

} // namespace tiervm
