#pragma once

#include "tiervm/boxed_value.h"
#include "tiervm/boxing_scheme.h"
#include "tiervm/type_mask.h"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tiervm::sem {

using BlockId = uint32_t;
inline constexpr BlockId kNoBlock = ~BlockId(0);

enum class PrimKind : uint8_t { Add, Sub, Mul, Div, Mod, CmpLt, CmpLe, CmpEq };
const char* PrimKindName(PrimKind k);
// Double arithmetic of a non-compare primitive. Mod floors like Lua.
double EvalArith(PrimKind k, double a, double b);

// Reference to a value usable by ReturnValue: either a boxed parameter or the
// result of a Box instruction in the same block.
struct ValueRef {
    bool isParam = true;
    uint32_t index = 0;
    bool operator==(const ValueRef&) const = default;
};

struct Instr {
    enum class Kind : uint8_t { TypeCheck, Unbox, Box, PrimOp };
    Kind kind = Kind::TypeCheck;
    // TypeCheck/Unbox: the parameter inspected.
    uint32_t param = 0;
    // TypeCheck: mask to test. Unbox/Box: the representation mask.
    TypeMask mask;
    // TypeCheck lowered by the optimizer (a strength-reduction rule or the
    // plain checker); absent means "evaluate the checker for mask".
    std::optional<CheckDecision> lowered;
    PrimKind prim = PrimKind::Add;
    // PrimOp operands / Box operand: indices of earlier instructions.
    uint32_t lhs = 0;
    uint32_t rhs = 0;
};

struct Terminator {
    enum class Kind : uint8_t { CondBr, Br, ReturnValue, Dispatch, EnterSlowPath, MakeCallMarker, Trap };
    Kind kind = Kind::Trap;
    uint32_t cond = 0;
    BlockId thenBlock = kNoBlock;
    BlockId elseBlock = kNoBlock;
    ValueRef value;
    uint32_t tag = 0;
};

struct Block {
    BlockId id = 0;
    std::string name;
    std::vector<Instr> instrs;
    Terminator term;
};

enum class ParamKind : uint8_t { Boxed, Literal };

// A tiny SSA-style function: values are block-local, parameters are re-read
// wherever needed, and only TypeCheck results drive foldable branches.
struct SemFunction {
    std::string name;
    std::vector<ParamKind> params;
    std::vector<Block> blocks;
    BlockId entry = 0;

    unsigned ParamCount() const { return static_cast<unsigned>(params.size()); }
    const Block* Find(BlockId id) const;
    Block* Find(BlockId id);
    size_t IndexOf(BlockId id) const;
};

// Checks structural well-formedness; returns an empty string when valid.
std::string Verify(const SemFunction& f);

// Incremental construction helper.
class SemBuilder {
public:
    SemBuilder(std::string name, unsigned boxedParams);
    SemBuilder(std::string name, std::vector<ParamKind> params);

    BlockId NewBlock(std::string name);
    void SetInsertPoint(BlockId b) { m_current = b; }
    uint32_t TypeCheck(uint32_t param, TypeMask mask);
    uint32_t Unbox(uint32_t param, TypeMask mask);
    uint32_t Box(TypeMask mask, uint32_t value);
    uint32_t Prim(PrimKind k, uint32_t lhs, uint32_t rhs);
    void CondBr(uint32_t cond, BlockId thenB, BlockId elseB);
    void Br(BlockId target);
    void ReturnValue(ValueRef v);
    void Dispatch();
    void EnterSlowPath(uint32_t tag);
    void MakeCallMarker(uint32_t tag);
    void Trap();
    SemFunction Finish();

private:
    Block& Cur();
    SemFunction m_fn;
    BlockId m_current = kNoBlock;
};

// Result of interpreting a SemFunction on concrete boxed inputs.
struct Outcome {
    Terminator::Kind kind = Terminator::Kind::Trap;
    uint32_t tag = 0;
    BoxedValue value;
    bool operator==(const Outcome&) const = default;
};
Outcome Interpret(const SemFunction& f, std::span<const BoxedValue> args, const BoxingScheme& scheme);

// Deterministic listing, one block per line.
std::string Dump(const SemFunction& f, const BoxingScheme& scheme);

} // namespace tiervm::sem
