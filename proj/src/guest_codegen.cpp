#include "guest_ast.h"

#include "tiervm/guest_bytecodes.h"
#include "tiervm/guest_lang.h"
#include "tiervm/template_tier.h"

#include <algorithm>
#include <set>
#include <sstream>

namespace tiervm {

namespace {

using namespace guest;

constexpr uint32_t kMaxSlots = 65535;

OperandValue L(uint32_t slot) { return OperandValue::Local(slot); }
OperandValue Lit(int64_t v) { return OperandValue::Lit(v); }

class FuncCompiler {
public:
    FuncCompiler(Engine& e, FuncAst& f)
        : m_e(e)
        , m_k(Kinds())
        , m_b(GuestRegistry())
        , m_f(f)
    {
    }

    FunctionProto* Compile()
    {
        auto proto = std::make_unique<FunctionProto>();
        m_proto = proto.get();
        proto->name = m_f.name;
        proto->numFixedParams = uint32_t(m_f.params.size());
        proto->acceptsVarArgs = m_f.varargs;
        m_free = uint32_t(m_f.params.size());
        Touch(m_free);
        CompileBlock(*m_f.body, false);
        Emit(m_k.Return, { OperandValue::Range(m_free, 0) });
        for (const UpvalueInfo& u : m_f.upvalues)
            proto->upvalues.push_back({ u.fromParentLocal, u.index, u.decl->IsMutable(), u.name });
        proto->numSlots = m_maxSlots;
        try {
            proto->cb.Init(m_b.Finish());
        } catch (const std::exception& ex) {
            throw SourceError(m_f.line, std::string("code generation failed: ") + ex.what());
        }
        return m_e.AddProto(std::move(proto));
    }

private:
    struct BlockCtx {
        Block* block;
        bool isLoop;
        std::vector<uint32_t>* breaks;
    };

    // ---- Emission helpers ----

    uint32_t Emit(uint32_t kind, std::initializer_list<OperandValue> ops) { return m_b.Emit(kind, ops); }
    uint32_t Here() const { return m_b.GetCurLength(); }
    void PatchTo(const std::vector<uint32_t>& jumps, uint32_t dest)
    {
        for (uint32_t j : jumps)
            m_b.SetBranchTarget(j, dest);
    }
    void PatchHere(const std::vector<uint32_t>& jumps) { PatchTo(jumps, Here()); }
    uint32_t EmitJump(bool loop = false) { return Emit(m_k.Jump, { Lit(loop ? 1 : 0) }); }

    void Touch(uint64_t slotsUsed)
    {
        if (slotsUsed > kMaxSlots)
            throw SourceError(m_line, "function needs too many stack slots");
        m_maxSlots = std::max(m_maxSlots, uint32_t(slotsUsed));
    }

    uint32_t Alloc(uint32_t n = 1)
    {
        uint32_t r = m_free;
        m_free += n;
        Touch(m_free);
        return r;
    }

    OperandValue Const(const Expr& e)
    {
        switch (e.k) {
        case Expr::K::Nil: return OperandValue::Cst(BoxedValue::Nil());
        case Expr::K::True: return OperandValue::Cst(BoxedValue::Bool(true));
        case Expr::K::False: return OperandValue::Cst(BoxedValue::Bool(false));
        case Expr::K::Number: return OperandValue::Cst(BoxedValue::Double(e.num));
        case Expr::K::String: return OperandValue::Cst(m_e.Str(e.str));
        default: break;
        }
        return {};
    }

    static bool IsConst(const Expr& e)
    {
        return e.k == Expr::K::Nil || e.k == Expr::K::True || e.k == Expr::K::False || e.k == Expr::K::Number || e.k == Expr::K::String;
    }

    static bool IsLocalVar(const Expr& e) { return e.k == Expr::K::Var && e.var.kind == VarRef::Kind::Local; }

    // ---- Expressions ----

    OperandValue ExprToOperand(const Expr& e)
    {
        if (IsConst(e))
            return Const(e);
        if (IsLocalVar(e))
            return L(e.var.decl->slot);
        uint32_t r = Alloc();
        ExprToReg(e, r);
        return L(r);
    }

    uint32_t ExprToAnyReg(const Expr& e)
    {
        if (IsLocalVar(e))
            return e.var.decl->slot;
        uint32_t r = Alloc();
        ExprToReg(e, r);
        return r;
    }

    void ExprToReg(const Expr& e, uint32_t dst)
    {
        m_line = e.line;
        uint32_t save = m_free;
        Touch(uint64_t(dst) + 1);
        switch (e.k) {
        case Expr::K::Nil:
        case Expr::K::True:
        case Expr::K::False:
        case Expr::K::Number:
        case Expr::K::String:
            Emit(m_k.LoadConstant, { Const(e), L(dst) });
            break;
        case Expr::K::VarArg:
            Emit(m_k.VarArgs, { L(dst), Lit(1) });
            break;
        case Expr::K::Var:
            VarToReg(e.var, dst);
            break;
        case Expr::K::Index: {
            uint32_t obj = ExprToAnyReg(*e.a);
            if (e.b->k == Expr::K::String)
                Emit(m_k.GetById, { L(obj), Const(*e.b), L(dst) });
            else
                Emit(m_k.GetByVal, { L(obj), ExprToOperand(*e.b), L(dst) });
            break;
        }
        case Expr::K::Call:
        case Expr::K::Method: {
            uint32_t c = CompileCall(e, 1, false);
            if (c != dst)
                Emit(m_k.Mov, { L(c), L(dst) });
            break;
        }
        case Expr::K::Paren:
            ExprToReg(*e.a, dst);
            break;
        case Expr::K::Function:
            Emit(m_k.CreateClosure, { Lit(CompileChild(*e.func)), L(dst) });
            break;
        case Expr::K::Table:
            CompileTable(e, dst);
            break;
        case Expr::K::Unary: {
            uint32_t kind = e.uop == UnOp::Neg ? m_k.Unm : e.uop == UnOp::Not ? m_k.Not : m_k.Len;
            Emit(kind, { L(ExprToAnyReg(*e.a)), L(dst) });
            break;
        }
        case Expr::K::Binary:
            BinaryToReg(e, dst);
            break;
        case Expr::K::And:
        case Expr::K::Or: {
            ExprToReg(*e.a, dst);
            uint32_t j = Emit(e.k == Expr::K::And ? m_k.BrFalsy : m_k.BrTruthy, { L(dst) });
            ExprToReg(*e.b, dst);
            m_b.SetBranchTarget(j, Here());
            break;
        }
        }
        m_free = save;
    }

    void VarToReg(const VarRef& v, uint32_t dst)
    {
        switch (v.kind) {
        case VarRef::Kind::Local:
            if (v.decl->slot != dst)
                Emit(m_k.Mov, { L(v.decl->slot), L(dst) });
            break;
        case VarRef::Kind::Upvalue:
            Emit(m_k.UpvalueGet, { Lit(v.upvalue), Lit(v.decl->IsMutable() ? 1 : 0), L(dst) });
            break;
        case VarRef::Kind::Global:
            Emit(m_k.GetGlobal, { OperandValue::Cst(m_e.Str(v.name)), L(dst) });
            break;
        }
    }

    static bool IsComparison(BinOp op) { return op >= BinOp::Lt; }

    void BinaryToReg(const Expr& e, uint32_t dst)
    {
        if (IsComparison(e.op)) {
            std::vector<uint32_t> onFalse;
            CondJump(e, false, onFalse);
            Emit(m_k.LoadConstant, { OperandValue::Cst(BoxedValue::Bool(true)), L(dst) });
            uint32_t skip = EmitJump();
            PatchHere(onFalse);
            Emit(m_k.LoadConstant, { OperandValue::Cst(BoxedValue::Bool(false)), L(dst) });
            m_b.SetBranchTarget(skip, Here());
            return;
        }
        if (e.op == BinOp::Concat) {
            uint32_t a = ExprToAnyReg(*e.a);
            uint32_t b = ExprToAnyReg(*e.b);
            Emit(m_k.Concat, { L(a), L(b), L(dst) });
            return;
        }
        uint32_t kind = 0;
        switch (e.op) {
        case BinOp::Add: kind = m_k.Add; break;
        case BinOp::Sub: kind = m_k.Sub; break;
        case BinOp::Mul: kind = m_k.Mul; break;
        case BinOp::Div: kind = m_k.Div; break;
        case BinOp::Mod: kind = m_k.Mod; break;
        default: break;
        }
        OperandValue a = ExprToOperand(*e.a);
        OperandValue b = ExprToOperand(*e.b);
        Emit(kind, { a, b, L(dst) });
    }

    // Emits code that branches when the truthiness of e equals jumpWhen and
    // falls through otherwise; the branches are appended to `jumps`.
    void CondJump(const Expr& e, bool jumpWhen, std::vector<uint32_t>& jumps)
    {
        m_line = e.line;
        uint32_t save = m_free;
        switch (e.k) {
        case Expr::K::Nil:
        case Expr::K::False:
            if (!jumpWhen)
                jumps.push_back(EmitJump());
            break;
        case Expr::K::True:
        case Expr::K::Number:
        case Expr::K::String:
            if (jumpWhen)
                jumps.push_back(EmitJump());
            break;
        case Expr::K::Unary:
            if (e.uop == UnOp::Not) {
                CondJump(*e.a, !jumpWhen, jumps);
                break;
            }
            [[fallthrough]];
        default:
            if (e.k == Expr::K::And || e.k == Expr::K::Or) {
                bool isAnd = e.k == Expr::K::And;
                if (isAnd != jumpWhen) {
                    CondJump(*e.a, jumpWhen, jumps);
                    CondJump(*e.b, jumpWhen, jumps);
                } else {
                    std::vector<uint32_t> skip;
                    CondJump(*e.a, !jumpWhen, skip);
                    CondJump(*e.b, jumpWhen, jumps);
                    PatchHere(skip);
                }
                break;
            }
            if (e.k == Expr::K::Binary && IsComparison(e.op)) {
                CompareJump(e, jumpWhen, jumps);
                break;
            }
            uint32_t r = ExprToAnyReg(e);
            jumps.push_back(Emit(jumpWhen ? m_k.BrTruthy : m_k.BrFalsy, { L(r) }));
            break;
        }
        m_free = save;
    }

    void CompareJump(const Expr& e, bool jumpWhen, std::vector<uint32_t>& jumps)
    {
        const Expr* lhs = e.a.get();
        const Expr* rhs = e.b.get();
        BinOp op = e.op;
        if (op == BinOp::Gt || op == BinOp::Ge) {
            std::swap(lhs, rhs);
            op = op == BinOp::Gt ? BinOp::Lt : BinOp::Le;
        }
        if ((op == BinOp::Eq || op == BinOp::Ne) && IsConst(*lhs) && !IsConst(*rhs))
            std::swap(lhs, rhs);
        bool positive = jumpWhen;
        if (op == BinOp::Ne) {
            op = BinOp::Eq;
            positive = !positive;
        }
        uint32_t a = ExprToAnyReg(*lhs);
        OperandValue b = ExprToOperand(*rhs);
        uint32_t kind;
        if (op == BinOp::Lt)
            kind = positive ? m_k.JmpIfLt : m_k.JmpIfNotLt;
        else if (op == BinOp::Le)
            kind = positive ? m_k.JmpIfLe : m_k.JmpIfNotLe;
        else
            kind = positive ? m_k.JmpIfEq : m_k.JmpIfNotEq;
        jumps.push_back(Emit(kind, { L(a), b }));
    }

    uint32_t CompileChild(FuncAst& f)
    {
        FuncCompiler child(m_e, f);
        FunctionProto* p = child.Compile();
        m_proto->children.push_back(p);
        return uint32_t(m_proto->children.size() - 1);
    }

    void CompileTable(const Expr& e, uint32_t dst)
    {
        uint32_t t = dst;
        Emit(m_k.NewTable, { L(t) });
        double index = 1;
        for (size_t i = 0; i < e.items.size(); i++) {
            const TableItem& item = e.items[i];
            uint32_t save = m_free;
            bool last = i + 1 == e.items.size();
            if (!item.key && last && item.value->IsMulti()) {
                ProduceVarRes(*item.value);
                Emit(m_k.TableSetVarRes, { L(t), Lit(int64_t(index)) });
            } else if (!item.key) {
                uint32_t v = ExprToAnyReg(*item.value);
                Emit(m_k.SetByVal, { L(t), OperandValue::Cst(BoxedValue::Double(index)), L(v) });
                index++;
            } else if (item.key->k == Expr::K::String) {
                uint32_t v = ExprToAnyReg(*item.value);
                Emit(m_k.SetById, { L(t), Const(*item.key), L(v) });
            } else {
                OperandValue k = ExprToOperand(*item.key);
                uint32_t v = ExprToAnyReg(*item.value);
                Emit(m_k.SetByVal, { L(t), k, L(v) });
            }
            m_free = save;
        }
    }

    // Leaves the values of a multi-value expression in the variadic result
    // buffer, to be consumed by the very next bytecode.
    void ProduceVarRes(const Expr& e)
    {
        if (e.k == Expr::K::VarArg) {
            Emit(m_k.VarArgs, { L(Alloc()), Lit(-1) });
            return;
        }
        CompileCall(e, -1, false);
    }

    // Compiles a call with its callee at the current top slot. Returns that
    // slot, where the results are placed.
    uint32_t CompileCall(const Expr& e, int numRets, bool tail)
    {
        m_line = e.line;
        uint32_t c = Alloc(kHeaderSlots);
        if (e.k == Expr::K::Method) {
            uint32_t self = Alloc();
            ExprToReg(*e.a, self);
            Emit(m_k.GetById, { L(self), OperandValue::Cst(m_e.Str(e.str)), L(c) });
        } else {
            ExprToReg(*e.a, c);
        }
        uint32_t numFixed = e.k == Expr::K::Method ? 1 : 0;
        bool passVarRes = false;
        for (size_t i = 0; i < e.args.size(); i++) {
            const Expr& arg = *e.args[i];
            if (i + 1 == e.args.size() && arg.IsMulti()) {
                ProduceVarRes(arg);
                passVarRes = true;
            } else {
                uint32_t r = Alloc();
                ExprToReg(arg, r);
                numFixed++;
            }
        }
        m_line = e.line;
        if (tail)
            Emit(m_k.TailCall, { OperandValue::Range(c, numFixed), Lit(passVarRes ? 1 : 0) });
        else
            Emit(m_k.Call, { OperandValue::Range(c, numFixed), Lit(numRets), Lit(passVarRes ? 1 : 0) });
        Touch(uint64_t(c) + std::max<int>(numRets, 1));
        m_free = c;
        return c;
    }

    // Evaluates exprs into n consecutive slots starting at base; extra values
    // are dropped and missing ones are nil.
    void ExprListToRegs(const std::vector<ExprPtr>& exprs, uint32_t base, uint32_t n)
    {
        for (size_t i = 0; i < exprs.size(); i++) {
            const Expr& e = *exprs[i];
            bool last = i + 1 == exprs.size();
            if (i >= n) {
                uint32_t save = m_free;
                if (e.k == Expr::K::Call || e.k == Expr::K::Method)
                    CompileCall(e, 0, false);
                else if (e.k != Expr::K::VarArg)
                    ExprToAnyReg(e);
                m_free = save;
                continue;
            }
            m_free = base + uint32_t(i);
            if (last && e.IsMulti() && n - i > 1) {
                uint32_t want = n - uint32_t(i);
                if (e.k == Expr::K::VarArg) {
                    Emit(m_k.VarArgs, { L(base + uint32_t(i)), Lit(want) });
                    Touch(uint64_t(base) + n);
                } else {
                    CompileCall(e, int(want), false);
                }
                m_free = base + n;
                return;
            }
            Alloc();
            ExprToReg(e, base + uint32_t(i));
        }
        for (size_t i = exprs.size(); i < n; i++) {
            m_free = base + uint32_t(i);
            Alloc();
            Emit(m_k.LoadConstant, { OperandValue::Cst(BoxedValue::Nil()), L(base + uint32_t(i)) });
        }
        m_free = base + n;
    }

    // ---- Statements ----

    void CompileBlock(Block& b, bool isLoop, std::vector<uint32_t>* breaks = nullptr, bool closeAtEnd = true)
    {
        m_blocks.push_back({ &b, isLoop, breaks });
        for (StmtPtr& s : b.stmts)
            CompileStmt(*s);
        if (closeAtEnd && b.HasCapturedMutable())
            Emit(m_k.UpvalueClose, { L(b.baseSlot) });
        m_blocks.pop_back();
        m_free = b.baseSlot;
    }

    void CompileStmt(Stmt& s)
    {
        m_line = s.line;
        uint32_t stmtBase = m_free;
        switch (s.k) {
        case Stmt::K::Local: {
            uint32_t n = uint32_t(s.decls.size());
            ExprListToRegs(s.exprs, s.decls[0]->slot, n);
            m_free = s.decls.back()->slot + 1;
            return;
        }
        case Stmt::K::LocalFunction: {
            uint32_t slot = s.decls[0]->slot;
            m_free = slot + 1;
            Touch(m_free);
            Emit(m_k.CreateClosure, { Lit(CompileChild(*s.exprs[0]->func)), L(slot) });
            return;
        }
        case Stmt::K::Assign:
            CompileAssign(s);
            break;
        case Stmt::K::Call:
            CompileCall(*s.exprs[0], 0, false);
            break;
        case Stmt::K::Do:
            CompileBlock(*s.body, false);
            break;
        case Stmt::K::While: {
            uint32_t start = Here();
            std::vector<uint32_t> exits;
            CondJump(*s.cond, false, exits);
            std::vector<uint32_t> breaks;
            CompileBlock(*s.body, true, &breaks);
            m_b.SetBranchTarget(EmitJump(true), start);
            PatchHere(exits);
            PatchHere(breaks);
            break;
        }
        case Stmt::K::Repeat: {
            uint32_t start = Here();
            std::vector<uint32_t> breaks;
            Block& body = *s.body;
            m_blocks.push_back({ &body, true, &breaks });
            for (StmtPtr& st : body.stmts)
                CompileStmt(*st);
            std::vector<uint32_t> exits;
            CondJump(*s.cond, true, exits);
            bool close = body.HasCapturedMutable();
            if (close)
                Emit(m_k.UpvalueClose, { L(body.baseSlot) });
            m_b.SetBranchTarget(EmitJump(true), start);
            PatchHere(exits);
            if (close)
                Emit(m_k.UpvalueClose, { L(body.baseSlot) });
            m_blocks.pop_back();
            m_free = body.baseSlot;
            PatchHere(breaks);
            break;
        }
        case Stmt::K::If: {
            std::vector<uint32_t> ends;
            for (size_t i = 0; i < s.clauses.size(); i++) {
                std::vector<uint32_t> next;
                CondJump(*s.clauses[i].cond, false, next);
                CompileBlock(*s.clauses[i].body, false);
                bool more = i + 1 < s.clauses.size() || s.elseBody;
                if (more)
                    ends.push_back(EmitJump());
                PatchHere(next);
            }
            if (s.elseBody)
                CompileBlock(*s.elseBody, false);
            PatchHere(ends);
            break;
        }
        case Stmt::K::NumFor: {
            uint32_t base = s.forBase;
            m_free = base;
            Alloc(3);
            ExprToReg(*s.exprs[0], base);
            ExprToReg(*s.exprs[1], base + 1);
            if (s.exprs.size() > 2)
                ExprToReg(*s.exprs[2], base + 2);
            else
                Emit(m_k.LoadConstant, { OperandValue::Cst(BoxedValue::Double(1)), L(base + 2) });
            uint32_t prep = Emit(m_k.ForPrep, { L(base) });
            uint32_t bodyStart = Here();
            m_free = base + 3;
            Alloc();
            std::vector<uint32_t> breaks;
            CompileBlock(*s.body, true, &breaks);
            m_b.SetBranchTarget(Emit(m_k.ForLoop, { L(base) }), bodyStart);
            m_b.SetBranchTarget(prep, Here());
            PatchHere(breaks);
            break;
        }
        case Stmt::K::Return:
            CompileReturn(s);
            break;
        case Stmt::K::Break: {
            uint32_t closeFrom = ~0u;
            for (auto it = m_blocks.rbegin(); it != m_blocks.rend(); ++it) {
                if (it->block->HasCapturedMutable())
                    closeFrom = it->block->baseSlot;
                if (it->isLoop) {
                    if (closeFrom != ~0u)
                        Emit(m_k.UpvalueClose, { L(closeFrom) });
                    it->breaks->push_back(EmitJump());
                    break;
                }
            }
            break;
        }
        }
        m_free = stmtBase;
    }

    void CompileReturn(Stmt& s)
    {
        uint32_t base = m_free;
        if (s.exprs.empty()) {
            Emit(m_k.Return, { OperandValue::Range(base, 0) });
            return;
        }
        if (s.exprs.size() == 1) {
            const Expr& e = *s.exprs[0];
            if (e.k == Expr::K::Call || e.k == Expr::K::Method) {
                CompileCall(e, -1, true);
                return;
            }
            if (IsLocalVar(e)) {
                Emit(m_k.Return, { OperandValue::Range(e.var.decl->slot, 1) });
                return;
            }
        }
        uint32_t numFixed = 0;
        bool varRes = false;
        for (size_t i = 0; i < s.exprs.size(); i++) {
            const Expr& e = *s.exprs[i];
            if (i + 1 == s.exprs.size() && e.IsMulti()) {
                ProduceVarRes(e);
                varRes = true;
            } else {
                ExprToReg(e, Alloc());
                numFixed++;
            }
        }
        Emit(varRes ? m_k.ReturnVarRes : m_k.Return, { OperandValue::Range(base, numFixed) });
    }

    static bool WritesOutputLast(const Expr& e)
    {
        switch (e.k) {
        case Expr::K::Table:
        case Expr::K::And:
        case Expr::K::Or:
        case Expr::K::Call:
        case Expr::K::Method:
            return false;
        case Expr::K::Binary:
            return !IsComparison(e.op);
        case Expr::K::Paren:
            return WritesOutputLast(*e.a);
        default:
            return true;
        }
    }

    void StoreTo(const Expr& target, uint32_t objReg, OperandValue key, uint32_t value)
    {
        if (target.k == Expr::K::Var) {
            const VarRef& v = target.var;
            if (v.kind == VarRef::Kind::Local) {
                if (v.decl->slot != value)
                    Emit(m_k.Mov, { L(value), L(v.decl->slot) });
            } else if (v.kind == VarRef::Kind::Upvalue) {
                Emit(m_k.UpvaluePut, { Lit(v.upvalue), L(value) });
            } else {
                Emit(m_k.SetGlobal, { OperandValue::Cst(m_e.Str(v.name)), L(value) });
            }
            return;
        }
        if (key.kind == OperandValue::Kind::Constant && key.cst.IsString())
            Emit(m_k.SetById, { L(objReg), key, L(value) });
        else
            Emit(m_k.SetByVal, { L(objReg), key, L(value) });
    }

    void CompileAssign(Stmt& s)
    {
        if (s.targets.size() == 1 && s.exprs.size() == 1) {
            const Expr& t = *s.targets[0];
            const Expr& e = *s.exprs[0];
            if (t.k == Expr::K::Var && t.var.kind == VarRef::Kind::Local) {
                uint32_t slot = t.var.decl->slot;
                if (WritesOutputLast(e)) {
                    ExprToReg(e, slot);
                } else {
                    uint32_t r = Alloc();
                    ExprToReg(e, r);
                    Emit(m_k.Mov, { L(r), L(slot) });
                }
                return;
            }
            uint32_t obj = 0;
            OperandValue key;
            if (t.k == Expr::K::Index) {
                obj = ExprToAnyReg(*t.a);
                key = t.b->k == Expr::K::String ? Const(*t.b) : ExprToOperand(*t.b);
            }
            StoreTo(t, obj, key, ExprToAnyReg(e));
            return;
        }
        std::vector<uint32_t> objs(s.targets.size());
        std::vector<OperandValue> keys(s.targets.size());
        for (size_t i = 0; i < s.targets.size(); i++) {
            const Expr& t = *s.targets[i];
            if (t.k != Expr::K::Index)
                continue;
            objs[i] = Alloc();
            ExprToReg(*t.a, objs[i]);
            if (t.b->k == Expr::K::String) {
                keys[i] = Const(*t.b);
            } else {
                uint32_t k = Alloc();
                ExprToReg(*t.b, k);
                keys[i] = L(k);
            }
        }
        uint32_t n = uint32_t(s.targets.size());
        uint32_t vals = m_free;
        ExprListToRegs(s.exprs, vals, n);
        for (size_t i = n; i-- > 0;)
            StoreTo(*s.targets[i], objs[i], keys[i], vals + uint32_t(i));
    }

    Engine& m_e;
    const GuestKinds& m_k;
    BytecodeBuilder m_b;
    FuncAst& m_f;
    FunctionProto* m_proto = nullptr;
    uint32_t m_free = 0;
    uint32_t m_maxSlots = 0;
    int m_line = 0;
    std::vector<BlockCtx> m_blocks;
};

void CollectProtos(const FunctionProto* p, std::vector<const FunctionProto*>& out)
{
    out.push_back(p);
    for (const FunctionProto* c : p->children)
        CollectProtos(c, out);
}

} // namespace

FunctionProto* CompileChunk(Engine& e, std::string_view source, const std::string& chunkName)
{
    std::unique_ptr<guest::FuncAst> ast = guest::ParseChunk(source, chunkName);
    FuncCompiler fc(e, *ast);
    return fc.Compile();
}

std::vector<BoxedValue> RunSource(Engine& e, std::string_view source)
{
    InstallStdlib(e);
    FunctionProto* main = CompileChunk(e, source);
    return e.Run(e.NewClosure(main));
}

std::vector<const FunctionProto*> AllProtos(const FunctionProto* main)
{
    std::vector<const FunctionProto*> out;
    CollectProtos(main, out);
    return out;
}

std::string DumpProgramBytecode(Engine& e, const FunctionProto* main)
{
    std::ostringstream os;
    for (const FunctionProto* p : AllProtos(main)) {
        os << "function " << p->name << " params=" << p->numFixedParams << (p->acceptsVarArgs ? "+..." : "")
           << " slots=" << p->numSlots << " upvalues=" << p->upvalues.size() << "\n";
        os << Disassemble(GuestRegistry(), p->cb.stream, [&](BoxedValue v) {
            return v.IsString() ? "\"" + e.ToString(v) + "\"" : e.ToString(v);
        });
        os << "\n";
    }
    return os.str();
}

std::vector<std::pair<uint32_t, uint32_t>> UsedVariants(const FunctionProto* main)
{
    const BytecodeRegistry& reg = GuestRegistry();
    std::vector<std::pair<uint32_t, uint32_t>> out;
    std::set<std::pair<uint32_t, uint32_t>> seen;
    for (const FunctionProto* p : AllProtos(main)) {
        const BytecodeStream& s = p->cb.stream;
        for (uint32_t pos : s.offsets) {
            const OpcodeLayout& l = reg.Layout(ReadOpcode(s.bytes, pos));
            std::pair<uint32_t, uint32_t> kv { l.kind, l.variant };
            if (seen.insert(kv).second)
                out.push_back(kv);
        }
    }
    return out;
}

std::string DumpProgramTemplates(const FunctionProto* main) { return DumpTemplates(UsedVariants(main)); }

} // namespace tiervm
