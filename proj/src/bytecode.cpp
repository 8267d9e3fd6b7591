#include "tiervm/bytecode.h"

#include "tiervm/common.h"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <set>
#include <sstream>

namespace tiervm {

namespace {

constexpr uint32_t kConstantTag = 0x80000000u;

template<typename T>
void Store(std::vector<uint8_t>& bytes, uint32_t at, T v)
{
    std::memcpy(bytes.data() + at, &v, sizeof(T));
}

template<typename T>
T Load(const std::vector<uint8_t>& bytes, uint32_t at)
{
    T v;
    std::memcpy(&v, bytes.data() + at, sizeof(T));
    return v;
}

int FormSize(char form)
{
    switch (form) {
    case 'l': return 2;
    case 'c': return 4;
    case 'x': return 4;
    case 'r': return 4;
    case '1': return 1;
    case '2': return 2;
    case '4': return 4;
    }
    return 0;
}

bool LiteralFits(int64_t v, uint8_t width, bool isSigned)
{
    int bits = width * 8;
    if (isSigned)
        return v >= -(int64_t(1) << (bits - 1)) && v < (int64_t(1) << (bits - 1));
    return v >= 0 && v < (int64_t(1) << bits);
}

} // namespace

BytecodeRegistry::BytecodeRegistry()
{
    BytecodeDef nop;
    nop.name = "Nop";
    nop.variants.push_back(VariantSpec {});
    Define(std::move(nop));
}

uint32_t BytecodeRegistry::Define(BytecodeDef def)
{
    TIERVM_ASSERT(!m_finalized, "registry already finalized");
    auto fail = [&](const std::string& msg) { throw BuildError("bytecode " + def.name + ": " + msg); };
    if (def.name.empty())
        throw BuildError("bytecode without a name");
    if (m_byName.count(def.name))
        fail("duplicate bytecode name");
    if (def.operands.size() + (def.result.hasOutput ? 1 : 0) > kMaxOperands)
        fail("too many operands");
    if (def.variants.empty())
        fail("at least one variant is required");
    std::set<std::string> names;
    for (const auto& op : def.operands) {
        if (!names.insert(op.name).second)
            fail("duplicate operand name " + op.name);
        if (op.kind == OperandKind::Literal && op.literalWidth != 1 && op.literalWidth != 2 && op.literalWidth != 4)
            fail("literal operand " + op.name + " has an unsupported width");
    }
    if (def.semantics) {
        const auto& f = *def.semantics;
        if (f.ParamCount() != def.operands.size())
            fail("semantic function arity does not match operand count");
        for (size_t i = 0; i < def.operands.size(); i++) {
            bool boxed = def.operands[i].kind == OperandKind::Local || def.operands[i].kind == OperandKind::Constant
                || def.operands[i].kind == OperandKind::LocalOrConstant;
            if (boxed != (f.params[i] == sem::ParamKind::Boxed))
                fail("semantic parameter " + std::to_string(i) + " kind does not match operand " + def.operands[i].name);
        }
    }
    for (auto& v : def.variants) {
        if (v.operands.empty())
            v.operands.assign(def.operands.size(), Specialization::Any());
        if (v.operands.size() != def.operands.size())
            fail("variant specialization count does not match operand count");
        if (v.speculation.empty())
            v.speculation.assign(def.operands.size(), std::nullopt);
        if (v.speculation.size() != def.operands.size())
            fail("variant speculation count does not match operand count");
        for (size_t i = 0; i < def.operands.size(); i++) {
            const auto& sp = v.operands[i];
            OperandKind k = def.operands[i].kind;
            if ((sp.kind == Specialization::Kind::IsLocal || sp.kind == Specialization::Kind::IsConstant) && k != OperandKind::LocalOrConstant)
                fail("IsLocal/IsConstant specialization on non local-or-constant operand " + def.operands[i].name);
            if (sp.kind == Specialization::Kind::HasValue) {
                if (k != OperandKind::Literal)
                    fail("HasValue specialization on non-literal operand " + def.operands[i].name);
                if (!LiteralFits(sp.value, def.operands[i].literalWidth, def.operands[i].literalSigned))
                    fail("HasValue literal out of range for operand " + def.operands[i].name);
            }
            if (v.speculation[i] && (k == OperandKind::Literal || k == OperandKind::RangeBaseRO || k == OperandKind::RangeBaseRW))
                fail("type speculation on operand " + def.operands[i].name + " which carries no boxed value");
        }
        if (v.osrCheck && !def.result.mayBranch)
            fail("OSR entry check on a bytecode that never branches");
    }
    if (def.ics.size() > 1) {
        for (const auto& ic : def.ics) {
            if (ic.fused)
                fail("an inline cache can only be fused into an opcode that uses exactly one inline cache");
        }
    }

    uint32_t kind = static_cast<uint32_t>(m_defs.size());
    m_byName.emplace(def.name, kind);
    m_defs.push_back(std::move(def));
    m_variantOpcode.emplace_back();
    for (uint32_t v = 0; v < m_defs[kind].variants.size(); v++) {
        m_variantOpcode[kind].push_back(static_cast<uint16_t>(m_layouts.size()));
        m_layouts.push_back(ComputeLayout(kind, v));
    }
    RecomputeGroupLengths();
    return kind;
}

uint16_t BytecodeRegistry::AddQuickenedOpcode(uint32_t kind, uint32_t variant, int32_t effect, const std::string& name)
{
    TIERVM_ASSERT(!m_finalized, "registry already finalized");
    TIERVM_ASSERT(kind < m_defs.size() && variant < m_defs[kind].variants.size(), "unknown bytecode variant");
    OpcodeLayout l = m_layouts[OpcodeOf(kind, variant)];
    l.quickenedEffect = effect;
    l.name = name;
    m_layouts.push_back(l);
    return static_cast<uint16_t>(m_layouts.size() - 1);
}

std::optional<uint16_t> BytecodeRegistry::QuickenedOpcode(uint32_t kind, uint32_t variant, int32_t effect) const
{
    for (size_t i = 0; i < m_layouts.size(); i++) {
        const auto& l = m_layouts[i];
        if (l.kind == kind && l.variant == variant && l.quickenedEffect == effect)
            return static_cast<uint16_t>(i);
    }
    return std::nullopt;
}

void BytecodeRegistry::Finalize()
{
    RecomputeGroupLengths();
    // Quickened opcodes copy the layout of their base variant.
    for (auto& l : m_layouts) {
        if (l.quickenedEffect >= 0)
            l.length = m_layouts[OpcodeOf(l.kind, l.variant)].length;
    }
    m_finalized = true;
}

uint32_t BytecodeRegistry::KindByName(const std::string& name) const
{
    auto it = m_byName.find(name);
    if (it == m_byName.end())
        throw BuildError("unknown bytecode " + name);
    return it->second;
}

OpcodeLayout BytecodeRegistry::ComputeLayout(uint32_t kind, uint32_t variant) const
{
    const BytecodeDef& d = m_defs[kind];
    const VariantSpec& v = d.variants[variant];
    OpcodeLayout l;
    l.kind = kind;
    l.variant = variant;
    l.name = d.name + (v.suffix.empty() ? "" : "_" + v.suffix);
    uint16_t at = 2;
    for (size_t i = 0; i < d.operands.size(); i++) {
        char form = 0;
        switch (d.operands[i].kind) {
        case OperandKind::Local: form = 'l'; break;
        case OperandKind::Constant: form = 'c'; break;
        case OperandKind::LocalOrConstant:
            form = v.operands[i].kind == Specialization::Kind::IsLocal ? 'l' : v.operands[i].kind == Specialization::Kind::IsConstant ? 'c' : 'x';
            break;
        case OperandKind::RangeBaseRO:
        case OperandKind::RangeBaseRW: form = 'r'; break;
        case OperandKind::Literal: form = char('0' + d.operands[i].literalWidth); break;
        }
        l.operandForm[i] = form;
        l.operandOffset[i] = at;
        at = static_cast<uint16_t>(at + FormSize(form));
    }
    if (d.result.hasOutput) {
        l.outputOffset = at;
        at += 2;
    }
    if (!d.ics.empty()) {
        l.icSlotOffset = at;
        at += 4;
    }
    if (d.result.mayBranch) {
        l.targetOffset = at;
        at += 4;
    }
    l.unpaddedLength = at;
    l.length = at;
    return l;
}

void BytecodeRegistry::RecomputeGroupLengths()
{
    std::unordered_map<int, uint16_t> groupMax;
    for (const auto& l : m_layouts) {
        int g = m_defs[l.kind].sameLengthGroup;
        if (g >= 0)
            groupMax[g] = std::max(groupMax[g], l.unpaddedLength);
    }
    for (auto& l : m_layouts) {
        int g = m_defs[l.kind].sameLengthGroup;
        l.length = g >= 0 ? groupMax[g] : l.unpaddedLength;
    }
}

size_t BytecodeRegistry::EmitArity(uint32_t kind) const
{
    const auto& d = m_defs.at(kind);
    return d.operands.size() + (d.result.hasOutput ? 1 : 0);
}

double BytecodeRegistry::SpecificityScore(uint32_t kind, uint32_t variant) const
{
    const auto& v = m_defs.at(kind).variants.at(variant);
    double score = 0;
    for (const auto& sp : v.operands) {
        switch (sp.kind) {
        case Specialization::Kind::HasValue: score += 4; break;
        case Specialization::Kind::IsLocal: score += 2; break;
        case Specialization::Kind::IsConstant:
            score += 2;
            if (sp.mask)
                score += double(64 - sp.mask->Count()) / 64.0;
            break;
        case Specialization::Kind::None: break;
        }
    }
    return score;
}

bool BytecodeRegistry::IsEligible(uint32_t kind, uint32_t variant, std::span<const OperandValue> ops) const
{
    const auto& d = m_defs.at(kind);
    const auto& v = d.variants.at(variant);
    if (ops.size() != EmitArity(kind))
        return false;
    for (size_t i = 0; i < d.operands.size(); i++) {
        const OperandValue& o = ops[i];
        const OperandSpec& spec = d.operands[i];
        switch (spec.kind) {
        case OperandKind::Local:
            if (o.kind != OperandValue::Kind::Local)
                return false;
            break;
        case OperandKind::Constant:
            if (o.kind != OperandValue::Kind::Constant || !spec.constMask.Contains(unsigned(o.cst.Type())))
                return false;
            break;
        case OperandKind::LocalOrConstant:
            if (o.kind != OperandValue::Kind::Local && o.kind != OperandValue::Kind::Constant)
                return false;
            break;
        case OperandKind::RangeBaseRO:
        case OperandKind::RangeBaseRW:
            if (o.kind != OperandValue::Kind::Range)
                return false;
            break;
        case OperandKind::Literal:
            if (o.kind != OperandValue::Kind::Literal || !LiteralFits(o.lit, spec.literalWidth, spec.literalSigned))
                return false;
            break;
        }
        const auto& sp = v.operands[i];
        switch (sp.kind) {
        case Specialization::Kind::None: break;
        case Specialization::Kind::IsLocal:
            if (o.kind != OperandValue::Kind::Local)
                return false;
            break;
        case Specialization::Kind::IsConstant:
            if (o.kind != OperandValue::Kind::Constant || (sp.mask && !sp.mask->Contains(unsigned(o.cst.Type()))))
                return false;
            break;
        case Specialization::Kind::HasValue:
            if (o.lit != sp.value)
                return false;
            break;
        }
    }
    if (d.result.hasOutput && ops.back().kind != OperandValue::Kind::Local)
        return false;
    return true;
}

uint32_t BytecodeRegistry::SelectVariant(uint32_t kind, std::span<const OperandValue> ops) const
{
    const auto& d = m_defs.at(kind);
    int best = -1;
    double bestScore = -1;
    for (uint32_t v = 0; v < d.variants.size(); v++) {
        if (!IsEligible(kind, v, ops))
            continue;
        double s = SpecificityScore(kind, v);
        if (s > bestScore) {
            best = static_cast<int>(v);
            bestScore = s;
        }
    }
    TIERVM_ASSERT(best >= 0, "no eligible variant of " + d.name + " for the given operands");
    return static_cast<uint32_t>(best);
}

int64_t BytecodeStream::OrdinalAt(uint32_t pos) const
{
    auto it = std::lower_bound(offsets.begin(), offsets.end(), pos);
    if (it == offsets.end() || *it != pos)
        return -1;
    return it - offsets.begin();
}

std::vector<OperandValue> DecodedBytecode::EmitOperands() const
{
    std::vector<OperandValue> out(ops.begin(), ops.begin() + numOperands);
    if (hasOutput)
        out.push_back(OperandValue::Local(output));
    return out;
}

uint16_t ReadOpcode(const std::vector<uint8_t>& bytes, uint32_t pos) { return Load<uint16_t>(bytes, pos); }

DecodedBytecode Decode(const BytecodeRegistry& reg, const BytecodeStream& s, uint32_t pos)
{
    TIERVM_DEBUG_ASSERT(s.OrdinalAt(pos) >= 0, "decode at a position that is not a bytecode start");
    DecodedBytecode d;
    d.pos = pos;
    d.opcode = Load<uint16_t>(s.bytes, pos);
    TIERVM_ASSERT(d.opcode < reg.NumOpcodes(), "invalid opcode");
    const OpcodeLayout& l = reg.Layout(d.opcode);
    const BytecodeDef& def = reg.Def(l.kind);
    d.kind = l.kind;
    d.variant = l.variant;
    d.length = l.length;
    d.numOperands = static_cast<uint8_t>(def.operands.size());
    for (size_t i = 0; i < def.operands.size(); i++) {
        uint32_t at = pos + l.operandOffset[i];
        OperandValue& o = d.ops[i];
        switch (l.operandForm[i]) {
        case 'l': o = OperandValue::Local(Load<uint16_t>(s.bytes, at)); break;
        case 'c': {
            uint32_t idx = Load<uint32_t>(s.bytes, at);
            TIERVM_ASSERT(idx < s.constants.size(), "constant index out of range");
            o = OperandValue::Cst(s.constants[idx]);
            o.cstIndex = idx;
            break;
        }
        case 'x': {
            uint32_t raw = Load<uint32_t>(s.bytes, at);
            if (raw & kConstantTag) {
                uint32_t idx = raw & ~kConstantTag;
                TIERVM_ASSERT(idx < s.constants.size(), "constant index out of range");
                o = OperandValue::Cst(s.constants[idx]);
                o.cstIndex = idx;
            } else {
                o = OperandValue::Local(raw);
            }
            break;
        }
        case 'r': o = OperandValue::Range(Load<uint16_t>(s.bytes, at), Load<uint16_t>(s.bytes, at + 2)); break;
        case '1':
            o = OperandValue::Lit(def.operands[i].literalSigned ? int64_t(Load<int8_t>(s.bytes, at)) : int64_t(Load<uint8_t>(s.bytes, at)));
            break;
        case '2':
            o = OperandValue::Lit(def.operands[i].literalSigned ? int64_t(Load<int16_t>(s.bytes, at)) : int64_t(Load<uint16_t>(s.bytes, at)));
            break;
        case '4':
            o = OperandValue::Lit(def.operands[i].literalSigned ? int64_t(Load<int32_t>(s.bytes, at)) : int64_t(Load<uint32_t>(s.bytes, at)));
            break;
        }
    }
    if (def.result.hasOutput) {
        d.hasOutput = true;
        d.output = Load<uint16_t>(s.bytes, pos + l.outputOffset);
    }
    if (!def.ics.empty())
        d.icSlot = Load<int32_t>(s.bytes, pos + l.icSlotOffset);
    if (def.result.mayBranch) {
        d.hasTarget = true;
        d.target = static_cast<uint32_t>(int64_t(pos) + Load<int32_t>(s.bytes, pos + l.targetOffset));
    }
    return d;
}

DecodedBytecode DecodeAs(const BytecodeRegistry& reg, const BytecodeStream& s, uint32_t pos, uint32_t kind)
{
    DecodedBytecode d = Decode(reg, s, pos);
    TIERVM_ASSERT(d.kind == kind, "expected a " + reg.Def(kind).name + " bytecode, found " + reg.Def(d.kind).name);
    return d;
}

uint32_t GetBytecodeKind(const BytecodeRegistry& reg, const BytecodeStream& s, uint32_t pos)
{
    return reg.Layout(ReadOpcode(s.bytes, pos)).kind;
}

bool CheckWellFormedness(const BytecodeRegistry& reg, const BytecodeStream& s)
{
    uint32_t pos = 0;
    std::vector<uint32_t> starts;
    while (pos < s.bytes.size()) {
        if (pos + 2 > s.bytes.size())
            return false;
        uint16_t op = ReadOpcode(s.bytes, pos);
        if (op >= reg.NumOpcodes())
            return false;
        uint32_t len = reg.Layout(op).length;
        if (len == 0 || pos + len > s.bytes.size())
            return false;
        starts.push_back(pos);
        pos += len;
    }
    if (starts != s.offsets)
        return false;
    for (uint32_t p : starts) {
        const OpcodeLayout& l = reg.Layout(ReadOpcode(s.bytes, p));
        const BytecodeDef& def = reg.Def(l.kind);
        for (size_t i = 0; i < def.operands.size(); i++) {
            char form = l.operandForm[i];
            if (form == 'c' && Load<uint32_t>(s.bytes, p + l.operandOffset[i]) >= s.constants.size())
                return false;
            if (form == 'x') {
                uint32_t raw = Load<uint32_t>(s.bytes, p + l.operandOffset[i]);
                if ((raw & kConstantTag) && (raw & ~kConstantTag) >= s.constants.size())
                    return false;
            }
        }
        if (def.result.mayBranch) {
            int64_t target = int64_t(p) + Load<int32_t>(s.bytes, p + l.targetOffset);
            if (target < 0 || target >= int64_t(s.bytes.size()) || !std::binary_search(starts.begin(), starts.end(), uint32_t(target)))
                return false;
        }
    }
    return true;
}

std::string DefaultFormatValue(BoxedValue v)
{
    if (v.IsNil())
        return "nil";
    if (v.IsBool())
        return v.AsBool() ? "true" : "false";
    if (v.IsDouble()) {
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof(buf), v.AsDouble());
        return std::string(buf, r.ptr);
    }
    const char* kind = v.IsString() ? "string" : v.IsFunction() ? "function" : "table";
    return std::string(kind) + "#" + std::to_string(v.HeapHandle());
}

std::string DisassembleOne(const BytecodeRegistry& reg, const BytecodeStream& s, uint32_t pos, const ValueFormatter& fmt)
{
    DecodedBytecode d = Decode(reg, s, pos);
    const BytecodeDef& def = reg.Def(d.kind);
    std::ostringstream os;
    char head[16];
    std::snprintf(head, sizeof(head), "%5u", pos);
    os << head << "  " << reg.Layout(d.opcode).name;
    for (size_t i = 0; i < d.numOperands; i++) {
        const OperandValue& o = d.ops[i];
        os << " " << def.operands[i].name << "=";
        switch (o.kind) {
        case OperandValue::Kind::Local: os << "L" << o.ord; break;
        case OperandValue::Kind::Constant: os << "K" << o.cstIndex << "(" << fmt(o.cst) << ")"; break;
        case OperandValue::Kind::Literal: os << o.lit; break;
        case OperandValue::Kind::Range: os << "L" << o.ord << ".." << o.len; break;
        case OperandValue::Kind::None: os << "?"; break;
        }
    }
    if (d.hasOutput)
        os << " output=L" << d.output;
    if (d.icSlot >= 0)
        os << " ic=" << d.icSlot;
    if (d.hasTarget)
        os << " target=" << d.target;
    return os.str();
}

std::string Disassemble(const BytecodeRegistry& reg, const BytecodeStream& s, const ValueFormatter& fmt)
{
    std::string out;
    for (uint32_t p : s.offsets)
        out += DisassembleOne(reg, s, p, fmt) + "\n";
    return out;
}

BytecodeBuilder::BytecodeBuilder(const BytecodeRegistry& reg)
    : m_reg(reg)
{
    TIERVM_ASSERT(reg.IsFinalized(), "builder requires a finalized registry");
}

uint32_t BytecodeBuilder::Intern(BoxedValue v)
{
    auto [it, inserted] = m_constantIndex.emplace(v.word, static_cast<uint32_t>(m_stream.constants.size()));
    if (inserted)
        m_stream.constants.push_back(v);
    return it->second;
}

void BytecodeBuilder::Encode(uint16_t opcode, std::span<const OperandValue> ops, uint32_t at, int32_t icSlot)
{
    const OpcodeLayout& l = m_reg.Layout(opcode);
    const BytecodeDef& def = m_reg.Def(l.kind);
    auto& bytes = m_stream.bytes;
    std::fill(bytes.begin() + at, bytes.begin() + at + l.length, uint8_t(kNopOpcode));
    Store<uint16_t>(bytes, at, opcode);
    auto local16 = [&](uint32_t ord) {
        TIERVM_ASSERT(ord <= 0xFFFF, "local ordinal exceeds the encodable range");
        return static_cast<uint16_t>(ord);
    };
    for (size_t i = 0; i < def.operands.size(); i++) {
        const OperandValue& o = ops[i];
        uint32_t p = at + l.operandOffset[i];
        switch (l.operandForm[i]) {
        case 'l': Store<uint16_t>(bytes, p, local16(o.ord)); break;
        case 'c': Store<uint32_t>(bytes, p, Intern(o.cst)); break;
        case 'x':
            if (o.kind == OperandValue::Kind::Constant) {
                uint32_t idx = Intern(o.cst);
                TIERVM_ASSERT(idx < kConstantTag, "constant table too large");
                Store<uint32_t>(bytes, p, idx | kConstantTag);
            } else {
                TIERVM_ASSERT(o.ord < kConstantTag, "local ordinal too large");
                Store<uint32_t>(bytes, p, o.ord);
            }
            break;
        case 'r':
            Store<uint16_t>(bytes, p, local16(o.ord));
            Store<uint16_t>(bytes, p + 2, local16(o.len));
            break;
        case '1': Store<uint8_t>(bytes, p, static_cast<uint8_t>(o.lit)); break;
        case '2': Store<uint16_t>(bytes, p, static_cast<uint16_t>(o.lit)); break;
        case '4': Store<uint32_t>(bytes, p, static_cast<uint32_t>(o.lit)); break;
        }
    }
    if (def.result.hasOutput)
        Store<uint16_t>(bytes, at + l.outputOffset, local16(ops.back().ord));
    if (!def.ics.empty())
        Store<int32_t>(bytes, at + l.icSlotOffset, icSlot);
    if (def.result.mayBranch)
        Store<int32_t>(bytes, at + l.targetOffset, 0);
}

uint32_t BytecodeBuilder::Emit(uint32_t kind, std::span<const OperandValue> ops)
{
    uint32_t variant = m_reg.SelectVariant(kind, ops);
    uint16_t opcode = m_reg.OpcodeOf(kind, variant);
    uint32_t pos = GetCurLength();
    m_stream.bytes.resize(pos + m_reg.Layout(opcode).length);
    int32_t icSlot = -1;
    if (!m_reg.Def(kind).ics.empty())
        icSlot = static_cast<int32_t>(m_stream.numIcSlots++);
    Encode(opcode, ops, pos, icSlot);
    m_stream.offsets.push_back(pos);
    m_stream.icSlots.push_back(icSlot);
    return pos;
}

void BytecodeBuilder::SetBranchTarget(uint32_t bcPos, uint32_t destPos)
{
    TIERVM_ASSERT(m_stream.OrdinalAt(bcPos) >= 0, "branch source is not a bytecode start");
    const OpcodeLayout& l = m_reg.Layout(ReadOpcode(m_stream.bytes, bcPos));
    TIERVM_ASSERT(m_reg.Def(l.kind).result.mayBranch, "bytecode " + m_reg.Def(l.kind).name + " does not branch");
    Store<int32_t>(m_stream.bytes, bcPos + l.targetOffset, static_cast<int32_t>(int64_t(destPos) - int64_t(bcPos)));
}

void BytecodeBuilder::ReplaceBytecode(uint32_t bcPos, uint32_t kind, std::span<const OperandValue> ops)
{
    int64_t ord = m_stream.OrdinalAt(bcPos);
    TIERVM_ASSERT(ord >= 0, "replace at a position that is not a bytecode start");
    const OpcodeLayout& old = m_reg.Layout(ReadOpcode(m_stream.bytes, bcPos));
    int oldGroup = m_reg.Def(old.kind).sameLengthGroup;
    int newGroup = m_reg.Def(kind).sameLengthGroup;
    bool sameKind = old.kind == kind;
    TIERVM_ASSERT(sameKind || (oldGroup >= 0 && oldGroup == newGroup), "replacement must stay within a same-length group");
    uint32_t variant = m_reg.SelectVariant(kind, ops);
    uint16_t opcode = m_reg.OpcodeOf(kind, variant);
    TIERVM_ASSERT(m_reg.Layout(opcode).length == old.length, "replacement changes the encoded length");
    std::optional<int32_t> target;
    if (m_reg.Def(old.kind).result.mayBranch)
        target = Load<int32_t>(m_stream.bytes, bcPos + old.targetOffset);
    int32_t icSlot = m_stream.icSlots[ord];
    if (icSlot < 0 && !m_reg.Def(kind).ics.empty()) {
        icSlot = static_cast<int32_t>(m_stream.numIcSlots++);
        m_stream.icSlots[ord] = icSlot;
    }
    Encode(opcode, ops, bcPos, icSlot);
    if (target && m_reg.Def(kind).result.mayBranch)
        Store<int32_t>(m_stream.bytes, bcPos + m_reg.Layout(opcode).targetOffset, *target);
}

BytecodeStream BytecodeBuilder::Finish()
{
    TIERVM_ASSERT(CheckWellFormedness(m_reg, m_stream), "bytecode stream is not well formed");
    BytecodeStream out = std::move(m_stream);
    m_stream = {};
    m_constantIndex.clear();
    return out;
}

} // namespace tiervm
