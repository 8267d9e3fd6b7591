#pragma once

#include "tiervm/boxed_value.h"
#include "tiervm/sem_ir.h"
#include "tiervm/type_mask.h"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace tiervm {

enum class OperandKind : uint8_t { Local, Constant, LocalOrConstant, RangeBaseRO, RangeBaseRW, Literal };

struct OperandSpec {
    std::string name;
    OperandKind kind = OperandKind::Local;
    // Constant: types a constant of this operand may have.
    TypeMask constMask = TypeMask(~uint64_t(0));
    // Literal: width in bytes (1, 2 or 4) and signedness.
    uint8_t literalWidth = 0;
    bool literalSigned = false;

    static OperandSpec Local(std::string n) { return { std::move(n), OperandKind::Local }; }
    static OperandSpec Constant(std::string n, TypeMask mask = TypeMask(~uint64_t(0))) { return { std::move(n), OperandKind::Constant, mask }; }
    static OperandSpec LocalOrConstant(std::string n) { return { std::move(n), OperandKind::LocalOrConstant }; }
    static OperandSpec RangeRO(std::string n) { return { std::move(n), OperandKind::RangeBaseRO }; }
    static OperandSpec RangeRW(std::string n) { return { std::move(n), OperandKind::RangeBaseRW }; }
    static OperandSpec Literal(std::string n, uint8_t width, bool isSigned)
    {
        OperandSpec s { std::move(n), OperandKind::Literal };
        s.literalWidth = width;
        s.literalSigned = isSigned;
        return s;
    }
};

struct ResultSpec {
    bool hasOutput = false;
    bool mayBranch = false;
};

struct Specialization {
    enum class Kind : uint8_t { None, IsLocal, IsConstant, HasValue };
    Kind kind = Kind::None;
    std::optional<TypeMask> mask;
    int64_t value = 0;

    static Specialization Any() { return {}; }
    static Specialization IsLocal() { return { Kind::IsLocal, std::nullopt, 0 }; }
    static Specialization IsConstant(std::optional<TypeMask> m = std::nullopt) { return { Kind::IsConstant, m, 0 }; }
    static Specialization HasValue(int64_t v) { return { Kind::HasValue, std::nullopt, v }; }
};

struct VariantSpec {
    std::string suffix;
    // One entry per operand; empty means unspecialized.
    std::vector<Specialization> operands;
    // Speculated type per operand for type-based code splitting.
    std::vector<std::optional<TypeMask>> speculation;
    bool osrCheck = false;
};

// Use of a generic inline cache by a bytecode.
struct IcUse {
    uint32_t descriptor = 0;
    bool fused = false;
};

struct BytecodeDef {
    std::string name;
    std::vector<OperandSpec> operands;
    ResultSpec result;
    std::optional<sem::SemFunction> semantics;
    std::vector<std::string> slowPaths;
    std::vector<std::string> returnContinuations;
    std::vector<VariantSpec> variants;
    int sameLengthGroup = -1;
    std::vector<IcUse> ics;
};

// An operand as supplied to the builder or produced by the decoder.
struct OperandValue {
    enum class Kind : uint8_t { None, Local, Constant, Literal, Range };
    Kind kind = Kind::None;
    uint32_t ord = 0;
    uint32_t len = 0;
    BoxedValue cst;
    uint32_t cstIndex = 0;
    int64_t lit = 0;

    static OperandValue Local(uint32_t o) { return { Kind::Local, o, 0, {}, 0, 0 }; }
    static OperandValue Cst(BoxedValue v) { return { Kind::Constant, 0, 0, v, 0, 0 }; }
    static OperandValue Lit(int64_t v) { return { Kind::Literal, 0, 0, {}, 0, v }; }
    static OperandValue Range(uint32_t base, uint32_t len) { return { Kind::Range, base, len, {}, 0, 0 }; }
    bool operator==(const OperandValue& o) const
    {
        return kind == o.kind && ord == o.ord && len == o.len && cst.word == o.cst.word && lit == o.lit;
    }
};

inline constexpr uint16_t kNopOpcode = 0;
inline constexpr size_t kMaxOperands = 6;

// Byte layout of one opcode.
struct OpcodeLayout {
    uint32_t kind = 0;
    uint32_t variant = 0;
    // Concrete IC effect this opcode is quickened to, or -1.
    int32_t quickenedEffect = -1;
    std::string name;
    uint16_t length = 0;
    uint16_t unpaddedLength = 0;
    std::array<uint16_t, kMaxOperands> operandOffset {};
    // Encoded form of each operand: 'l' u16 local, 'c' u32 constant index,
    // 'x' u32 tagged local-or-constant, 'r' u16+u16 range, '1'/'2'/'4' literal.
    std::array<char, kMaxOperands> operandForm {};
    uint16_t outputOffset = 0;
    uint16_t icSlotOffset = 0;
    uint16_t targetOffset = 0;
};

class BytecodeRegistry {
public:
    BytecodeRegistry();

    // Registers a bytecode kind and allocates one opcode per variant. Throws
    // BuildError on malformed definitions.
    uint32_t Define(BytecodeDef def);
    // Adds an opcode sharing the layout of (kind, variant), dispatching to a
    // handler specialized for one concrete IC effect.
    uint16_t AddQuickenedOpcode(uint32_t kind, uint32_t variant, int32_t effect, const std::string& name);
    void Finalize();
    bool IsFinalized() const { return m_finalized; }

    size_t NumKinds() const { return m_defs.size(); }
    size_t NumOpcodes() const { return m_layouts.size(); }
    const BytecodeDef& Def(uint32_t kind) const { return m_defs.at(kind); }
    uint32_t KindByName(const std::string& name) const;
    uint16_t OpcodeOf(uint32_t kind, uint32_t variant) const { return m_variantOpcode.at(kind).at(variant); }
    const OpcodeLayout& Layout(uint16_t opcode) const { return m_layouts.at(opcode); }
    std::optional<uint16_t> QuickenedOpcode(uint32_t kind, uint32_t variant, int32_t effect) const;

    double SpecificityScore(uint32_t kind, uint32_t variant) const;
    bool IsEligible(uint32_t kind, uint32_t variant, std::span<const OperandValue> ops) const;
    // The most specialized eligible variant; asserts when none is eligible.
    uint32_t SelectVariant(uint32_t kind, std::span<const OperandValue> ops) const;

    // Number of operand values expected by Emit (operands plus output).
    size_t EmitArity(uint32_t kind) const;

private:
    OpcodeLayout ComputeLayout(uint32_t kind, uint32_t variant) const;
    void RecomputeGroupLengths();

    std::vector<BytecodeDef> m_defs;
    std::unordered_map<std::string, uint32_t> m_byName;
    std::vector<std::vector<uint16_t>> m_variantOpcode;
    std::vector<OpcodeLayout> m_layouts;
    bool m_finalized = false;
};

struct BytecodeStream {
    std::vector<uint8_t> bytes;
    std::vector<BoxedValue> constants;
    // Start position of every bytecode, in order.
    std::vector<uint32_t> offsets;
    // Interpreter IC slot per bytecode, or -1.
    std::vector<int32_t> icSlots;
    uint32_t numIcSlots = 0;

    uint32_t NumBytecodes() const { return static_cast<uint32_t>(offsets.size()); }
    // Bytecode ordinal starting at pos, or -1.
    int64_t OrdinalAt(uint32_t pos) const;
};

struct DecodedBytecode {
    uint16_t opcode = 0;
    uint32_t kind = 0;
    uint32_t variant = 0;
    uint32_t pos = 0;
    uint32_t length = 0;
    uint8_t numOperands = 0;
    std::array<OperandValue, kMaxOperands> ops {};
    bool hasOutput = false;
    uint32_t output = 0;
    bool hasTarget = false;
    uint32_t target = 0;
    int32_t icSlot = -1;

    // Operand list in Emit order (operands then output).
    std::vector<OperandValue> EmitOperands() const;
};

uint16_t ReadOpcode(const std::vector<uint8_t>& bytes, uint32_t pos);
DecodedBytecode Decode(const BytecodeRegistry& reg, const BytecodeStream& s, uint32_t pos);
// Decode asserting the bytecode kind.
DecodedBytecode DecodeAs(const BytecodeRegistry& reg, const BytecodeStream& s, uint32_t pos, uint32_t kind);
uint32_t GetBytecodeKind(const BytecodeRegistry& reg, const BytecodeStream& s, uint32_t pos);
bool CheckWellFormedness(const BytecodeRegistry& reg, const BytecodeStream& s);

using ValueFormatter = std::function<std::string(BoxedValue)>;
std::string DefaultFormatValue(BoxedValue v);
std::string DisassembleOne(const BytecodeRegistry& reg, const BytecodeStream& s, uint32_t pos, const ValueFormatter& fmt = DefaultFormatValue);
std::string Disassemble(const BytecodeRegistry& reg, const BytecodeStream& s, const ValueFormatter& fmt = DefaultFormatValue);

class BytecodeBuilder {
public:
    explicit BytecodeBuilder(const BytecodeRegistry& reg);

    // Appends a bytecode using the most specialized eligible variant.
    // `ops` lists the operands in declaration order followed by the output
    // local when the bytecode has one. Returns the bytecode position.
    uint32_t Emit(uint32_t kind, std::span<const OperandValue> ops);
    uint32_t Emit(uint32_t kind, std::initializer_list<OperandValue> ops) { return Emit(kind, std::span<const OperandValue>(ops.begin(), ops.size())); }
    uint32_t GetCurLength() const { return static_cast<uint32_t>(m_stream.bytes.size()); }
    void SetBranchTarget(uint32_t bcPos, uint32_t destPos);
    // Replaces the bytecode at bcPos in place; the new kind must share the
    // old kind's same-length group.
    void ReplaceBytecode(uint32_t bcPos, uint32_t kind, std::span<const OperandValue> ops);
    const std::vector<BoxedValue>& GetBuiltConstantTable() const { return m_stream.constants; }
    const BytecodeStream& Peek() const { return m_stream; }
    // Validates and hands out the stream; the builder becomes empty.
    BytecodeStream Finish();

private:
    void Encode(uint16_t opcode, std::span<const OperandValue> ops, uint32_t at, int32_t icSlot);
    uint32_t Intern(BoxedValue v);

    const BytecodeRegistry& m_reg;
    BytecodeStream m_stream;
    std::unordered_map<uint64_t, uint32_t> m_constantIndex;
};

} // namespace tiervm
