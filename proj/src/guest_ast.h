#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace tiervm::guest {

struct LocalDecl {
    std::string name;
    uint32_t slot = 0;
    // Assigned after its declaration, anywhere in the chunk.
    bool assigned = false;
    bool captured = false;
    bool isLocalFunction = false;

    bool IsMutable() const { return assigned || isLocalFunction; }
};

struct UpvalueInfo {
    std::string name;
    bool fromParentLocal = true;
    uint32_t index = 0;
    LocalDecl* decl = nullptr;
};

struct VarRef {
    enum class Kind : uint8_t { Local, Upvalue, Global };
    Kind kind = Kind::Global;
    LocalDecl* decl = nullptr;
    uint32_t upvalue = 0;
    std::string name;
};

enum class BinOp : uint8_t { Add, Sub, Mul, Div, Mod, Concat, Lt, Le, Gt, Ge, Eq, Ne };
enum class UnOp : uint8_t { Neg, Not, Len };

struct FuncAst;
struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct TableItem {
    // Null for positional items.
    ExprPtr key;
    ExprPtr value;
};

struct Expr {
    enum class K : uint8_t { Nil, True, False, Number, String, VarArg, Function, Table, Binary, Unary, And, Or, Var, Index, Call, Method, Paren };
    K k = K::Nil;
    int line = 0;
    double num = 0;
    // String literal, or method name.
    std::string str;
    BinOp op = BinOp::Add;
    UnOp uop = UnOp::Neg;
    VarRef var;
    // Binary: lhs, rhs. Index: object, key. Call: callee. Method: object.
    // Unary, Paren: operand.
    ExprPtr a;
    ExprPtr b;
    std::vector<ExprPtr> args;
    std::vector<TableItem> items;
    std::unique_ptr<FuncAst> func;

    bool IsMulti() const { return k == K::Call || k == K::Method || k == K::VarArg; }
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Block {
    std::vector<StmtPtr> stmts;
    std::vector<LocalDecl*> locals;
    uint32_t baseSlot = 0;

    bool HasCapturedMutable() const
    {
        for (const LocalDecl* d : locals) {
            if (d->captured && d->IsMutable())
                return true;
        }
        return false;
    }
};

struct IfClause {
    ExprPtr cond;
    std::unique_ptr<Block> body;
};

struct Stmt {
    enum class K : uint8_t { Local, Assign, Call, Do, While, Repeat, If, NumFor, LocalFunction, Return, Break };
    K k = K::Do;
    int line = 0;
    std::vector<LocalDecl*> decls;
    std::vector<ExprPtr> targets;
    std::vector<ExprPtr> exprs;
    ExprPtr cond;
    std::unique_ptr<Block> body;
    std::vector<IfClause> clauses;
    std::unique_ptr<Block> elseBody;
    uint32_t forBase = 0;
};

struct FuncAst {
    std::string name;
    int line = 0;
    std::vector<LocalDecl*> params;
    bool varargs = false;
    std::unique_ptr<Block> body;
    std::vector<UpvalueInfo> upvalues;
    std::vector<std::unique_ptr<LocalDecl>> declStore;
};

// Parses and resolves a chunk. Throws SourceError.
std::unique_ptr<FuncAst> ParseChunk(std::string_view source, const std::string& chunkName);

} // namespace tiervm::guest
