#include "tiervm/sem_ir.h"

#include "tiervm/common.h"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace tiervm::sem {

const char* PrimKindName(PrimKind k)
{
    switch (k) {
    case PrimKind::Add: return "add";
    case PrimKind::Sub: return "sub";
    case PrimKind::Mul: return "mul";
    case PrimKind::Div: return "div";
    case PrimKind::Mod: return "mod";
    case PrimKind::CmpLt: return "lt";
    case PrimKind::CmpLe: return "le";
    case PrimKind::CmpEq: return "eq";
    }
    return "?";
}

static bool IsCompare(PrimKind k) { return k == PrimKind::CmpLt || k == PrimKind::CmpLe || k == PrimKind::CmpEq; }

const Block* SemFunction::Find(BlockId id) const
{
    for (const auto& b : blocks) {
        if (b.id == id)
            return &b;
    }
    return nullptr;
}

Block* SemFunction::Find(BlockId id)
{
    return const_cast<Block*>(static_cast<const SemFunction*>(this)->Find(id));
}

size_t SemFunction::IndexOf(BlockId id) const
{
    for (size_t i = 0; i < blocks.size(); i++) {
        if (blocks[i].id == id)
            return i;
    }
    return blocks.size();
}

std::string Verify(const SemFunction& f)
{
    std::unordered_set<BlockId> ids;
    for (const auto& b : f.blocks) {
        if (!ids.insert(b.id).second)
            return "duplicate block id " + std::to_string(b.id);
    }
    if (!ids.count(f.entry))
        return "entry block missing";
    for (const auto& b : f.blocks) {
        auto where = "block " + b.name + ": ";
        // Unboxed values produced so far: true = bool, false = double.
        std::vector<int> shape(b.instrs.size(), -1);
        for (size_t i = 0; i < b.instrs.size(); i++) {
            const Instr& in = b.instrs[i];
            auto operandOk = [&](uint32_t ref) { return ref < i && shape[ref] >= 0; };
            switch (in.kind) {
            case Instr::Kind::TypeCheck:
            case Instr::Kind::Unbox:
                if (in.param >= f.ParamCount() || f.params[in.param] != ParamKind::Boxed)
                    return where + "type-sensitive instruction on a non-boxed parameter";
                if (in.kind == Instr::Kind::Unbox) {
                    if (in.mask == TypeMask::Single(unsigned(GuestType::Bool)))
                        shape[i] = 1;
                    else
                        shape[i] = 0;
                }
                break;
            case Instr::Kind::PrimOp:
                if (!operandOk(in.lhs) || !operandOk(in.rhs) || shape[in.lhs] != 0 || shape[in.rhs] != 0)
                    return where + "prim op operands must be earlier unboxed doubles";
                shape[i] = IsCompare(in.prim) ? 1 : 0;
                break;
            case Instr::Kind::Box:
                if (!operandOk(in.lhs))
                    return where + "box operand must be an earlier unboxed value";
                break;
            }
        }
        const Terminator& t = b.term;
        switch (t.kind) {
        case Terminator::Kind::CondBr: {
            if (t.cond >= b.instrs.size())
                return where + "condition out of range";
            const Instr& c = b.instrs[t.cond];
            bool ok = c.kind == Instr::Kind::TypeCheck || (c.kind == Instr::Kind::PrimOp && IsCompare(c.prim))
                || (c.kind == Instr::Kind::Unbox && shape[t.cond] == 1);
            if (!ok)
                return where + "condition must be a type check or boolean value";
            if (!ids.count(t.thenBlock) || !ids.count(t.elseBlock))
                return where + "branch target missing";
            break;
        }
        case Terminator::Kind::Br:
            if (!ids.count(t.thenBlock))
                return where + "branch target missing";
            break;
        case Terminator::Kind::ReturnValue:
            if (t.value.isParam) {
                if (t.value.index >= f.ParamCount() || f.params[t.value.index] != ParamKind::Boxed)
                    return where + "returned parameter is not boxed";
            } else if (t.value.index >= b.instrs.size() || b.instrs[t.value.index].kind != Instr::Kind::Box) {
                return where + "returned value must be a Box result";
            }
            break;
        default: break;
        }
        // Type checks may only feed conditional branches.
        for (size_t i = 0; i < b.instrs.size(); i++) {
            if (b.instrs[i].kind != Instr::Kind::TypeCheck)
                continue;
            for (const auto& other : b.instrs) {
                if ((other.kind == Instr::Kind::PrimOp || other.kind == Instr::Kind::Box) && (other.lhs == i || (other.kind == Instr::Kind::PrimOp && other.rhs == i)))
                    return where + "type check result used as a data value";
            }
        }
    }
    return {};
}

SemBuilder::SemBuilder(std::string name, unsigned boxedParams)
    : SemBuilder(std::move(name), std::vector<ParamKind>(boxedParams, ParamKind::Boxed))
{
}

SemBuilder::SemBuilder(std::string name, std::vector<ParamKind> params)
{
    m_fn.name = std::move(name);
    m_fn.params = std::move(params);
}

BlockId SemBuilder::NewBlock(std::string name)
{
    BlockId id = static_cast<BlockId>(m_fn.blocks.size());
    m_fn.blocks.push_back(Block { id, std::move(name), {}, {} });
    if (m_current == kNoBlock)
        m_current = id;
    return id;
}

Block& SemBuilder::Cur()
{
    TIERVM_ASSERT(m_current != kNoBlock, "no insert point");
    return *m_fn.Find(m_current);
}

uint32_t SemBuilder::TypeCheck(uint32_t param, TypeMask mask)
{
    Instr in;
    in.kind = Instr::Kind::TypeCheck;
    in.param = param;
    in.mask = mask;
    Cur().instrs.push_back(in);
    return static_cast<uint32_t>(Cur().instrs.size() - 1);
}

uint32_t SemBuilder::Unbox(uint32_t param, TypeMask mask)
{
    Instr in;
    in.kind = Instr::Kind::Unbox;
    in.param = param;
    in.mask = mask;
    Cur().instrs.push_back(in);
    return static_cast<uint32_t>(Cur().instrs.size() - 1);
}

uint32_t SemBuilder::Box(TypeMask mask, uint32_t value)
{
    Instr in;
    in.kind = Instr::Kind::Box;
    in.mask = mask;
    in.lhs = value;
    Cur().instrs.push_back(in);
    return static_cast<uint32_t>(Cur().instrs.size() - 1);
}

uint32_t SemBuilder::Prim(PrimKind k, uint32_t lhs, uint32_t rhs)
{
    Instr in;
    in.kind = Instr::Kind::PrimOp;
    in.prim = k;
    in.lhs = lhs;
    in.rhs = rhs;
    Cur().instrs.push_back(in);
    return static_cast<uint32_t>(Cur().instrs.size() - 1);
}

void SemBuilder::CondBr(uint32_t cond, BlockId thenB, BlockId elseB)
{
    Cur().term = Terminator { Terminator::Kind::CondBr, cond, thenB, elseB, {}, 0 };
}

void SemBuilder::Br(BlockId target)
{
    Cur().term = Terminator { Terminator::Kind::Br, 0, target, kNoBlock, {}, 0 };
}

void SemBuilder::ReturnValue(ValueRef v)
{
    Cur().term = Terminator { Terminator::Kind::ReturnValue, 0, kNoBlock, kNoBlock, v, 0 };
}

void SemBuilder::Dispatch() { Cur().term = Terminator { Terminator::Kind::Dispatch, 0, kNoBlock, kNoBlock, {}, 0 }; }
void SemBuilder::EnterSlowPath(uint32_t tag) { Cur().term = Terminator { Terminator::Kind::EnterSlowPath, 0, kNoBlock, kNoBlock, {}, tag }; }
void SemBuilder::MakeCallMarker(uint32_t tag) { Cur().term = Terminator { Terminator::Kind::MakeCallMarker, 0, kNoBlock, kNoBlock, {}, tag }; }
void SemBuilder::Trap() { Cur().term = Terminator { Terminator::Kind::Trap, 0, kNoBlock, kNoBlock, {}, 0 }; }

SemFunction SemBuilder::Finish()
{
    std::string err = Verify(m_fn);
    if (!err.empty())
        throw BuildError("semantic function " + m_fn.name + ": " + err);
    return std::move(m_fn);
}

namespace {

struct RtValue {
    bool isBool = false;
    bool b = false;
    double d = 0;
    BoxedValue boxed;
};

double ApplyArith(PrimKind k, double a, double b) { return EvalArith(k, a, b); }

bool ApplyCompare(PrimKind k, double a, double b)
{
    switch (k) {
    case PrimKind::CmpLt: return a < b;
    case PrimKind::CmpLe: return a <= b;
    case PrimKind::CmpEq: return a == b;
    default: return false;
    }
}

} // namespace

Outcome Interpret(const SemFunction& f, std::span<const BoxedValue> args, const BoxingScheme& scheme)
{
    TIERVM_ASSERT(args.size() == f.ParamCount(), "argument count mismatch");
    const Block* b = f.Find(f.entry);
    // Generated functions are acyclic; the bound only guards against misuse.
    for (size_t steps = 0; b && steps < 100000; steps++) {
        std::vector<RtValue> vals(b->instrs.size());
        for (size_t i = 0; i < b->instrs.size(); i++) {
            const Instr& in = b->instrs[i];
            RtValue& out = vals[i];
            switch (in.kind) {
            case Instr::Kind::TypeCheck:
                out.isBool = true;
                out.b = in.lowered ? scheme.Evaluate(*in.lowered, args[in.param]) : scheme.Is(in.mask, args[in.param]);
                break;
            case Instr::Kind::Unbox: {
                Unboxed u = scheme.As(in.mask, args[in.param]);
                if (auto* pb = std::get_if<bool>(&u)) {
                    out.isBool = true;
                    out.b = *pb;
                } else if (auto* pd = std::get_if<double>(&u)) {
                    out.d = *pd;
                }
                break;
            }
            case Instr::Kind::PrimOp:
                if (IsCompare(in.prim)) {
                    out.isBool = true;
                    out.b = ApplyCompare(in.prim, vals[in.lhs].d, vals[in.rhs].d);
                } else {
                    out.d = ApplyArith(in.prim, vals[in.lhs].d, vals[in.rhs].d);
                }
                break;
            case Instr::Kind::Box:
                if (vals[in.lhs].isBool)
                    out.boxed = scheme.Create(in.mask, Unboxed(vals[in.lhs].b));
                else
                    out.boxed = scheme.Create(in.mask, Unboxed(vals[in.lhs].d));
                break;
            }
        }
        const Terminator& t = b->term;
        switch (t.kind) {
        case Terminator::Kind::CondBr:
            b = f.Find(vals[t.cond].b ? t.thenBlock : t.elseBlock);
            break;
        case Terminator::Kind::Br:
            b = f.Find(t.thenBlock);
            break;
        case Terminator::Kind::ReturnValue: {
            Outcome o { t.kind, 0, {} };
            o.value = t.value.isParam ? args[t.value.index] : vals[t.value.index].boxed;
            return o;
        }
        default:
            return Outcome { t.kind, t.tag, {} };
        }
    }
    TIERVM_ASSERT(false, "semantic function did not terminate");
}

std::string Dump(const SemFunction& f, const BoxingScheme& scheme)
{
    std::ostringstream os;
    os << "function " << f.name << "(";
    for (unsigned i = 0; i < f.ParamCount(); i++)
        os << (i ? ", " : "") << (f.params[i] == ParamKind::Boxed ? "v" : "lit") << i;
    os << ") entry=" << (f.Find(f.entry) ? f.Find(f.entry)->name : "?") << "\n";
    auto blockName = [&](BlockId id) {
        const Block* b = f.Find(id);
        return b ? b->name : std::string("?");
    };
    for (const auto& b : f.blocks) {
        os << b.name << ":";
        for (size_t i = 0; i < b.instrs.size(); i++) {
            const Instr& in = b.instrs[i];
            os << " %" << i << " = ";
            switch (in.kind) {
            case Instr::Kind::TypeCheck:
                os << "is v" << in.param << " " << scheme.MaskName(in.mask);
                if (in.lowered)
                    os << " via " << scheme.DescribeDecision(*in.lowered);
                break;
            case Instr::Kind::Unbox: os << "unbox v" << in.param << " " << scheme.MaskName(in.mask); break;
            case Instr::Kind::Box: os << "box " << scheme.MaskName(in.mask) << " %" << in.lhs; break;
            case Instr::Kind::PrimOp: os << PrimKindName(in.prim) << " %" << in.lhs << " %" << in.rhs; break;
            }
            os << ";";
        }
        const Terminator& t = b.term;
        os << " ";
        switch (t.kind) {
        case Terminator::Kind::CondBr: os << "condbr %" << t.cond << " " << blockName(t.thenBlock) << " " << blockName(t.elseBlock); break;
        case Terminator::Kind::Br: os << "br " << blockName(t.thenBlock); break;
        case Terminator::Kind::ReturnValue:
            os << "return " << (t.value.isParam ? "v" : "%") << t.value.index;
            break;
        case Terminator::Kind::Dispatch: os << "dispatch"; break;
        case Terminator::Kind::EnterSlowPath: os << "slowpath " << t.tag; break;
        case Terminator::Kind::MakeCallMarker: os << "call " << t.tag; break;
        case Terminator::Kind::Trap: os << "trap"; break;
        }
        os << "\n";
    }
    return os.str();
}

double EvalArith(PrimKind k, double a, double b)
{
    switch (k) {
    case PrimKind::Add: return a + b;
    case PrimKind::Sub: return a - b;
    case PrimKind::Mul: return a * b;
    case PrimKind::Div: return a / b;
    case PrimKind::Mod: return a - std::floor(a / b) * b;
    default: return 0;
    }
}

} // namespace tiervm::sem
