#pragma once

#include "tiervm/boxed_value.h"
#include "tiervm/type_mask.h"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tiervm {

using CheckFn = bool (*)(BoxedValue);

// Unboxed payload produced by a checker's decoder. Heap entities unbox to
// their 32-bit handle.
using Unboxed = std::variant<std::monostate, double, bool, uint32_t>;
using DecodeFn = Unboxed (*)(BoxedValue);
using EncodeFn = BoxedValue (*)(const Unboxed&);

struct TypeCheckerDef {
    std::string name;
    TypeMask mask;
    uint32_t cost = 0;
    CheckFn check = nullptr;
    DecodeFn decode = nullptr;
    EncodeFn encode = nullptr;
};

// A cheaper check deciding membership in `target`, valid only for values whose
// type is already known to lie in `precondition`.
struct StrengthReductionRule {
    std::string name;
    TypeMask precondition;
    TypeMask target;
    uint32_t cost = 0;
    CheckFn check = nullptr;
};

struct CheckDecision {
    enum class Kind : uint8_t { AlwaysTrue, AlwaysFalse, Rule, Generic };
    Kind kind = Kind::Generic;
    // Index into BoxingScheme::Candidates() for Kind::Rule.
    uint32_t candidate = 0;
    bool negated = false;
    // The mask that was asked for; used by Kind::Generic.
    TypeMask toCheck;

    bool operator==(const CheckDecision&) const = default;
};

// Description of a guest language's boxing scheme: its base types, named
// masks, type checkers, and strength reduction rules. Built once, then
// immutable after Finalize().
class BoxingScheme {
public:
    using ClassifyFn = unsigned (*)(BoxedValue);
    using SampleFn = std::vector<BoxedValue> (*)(unsigned typeId);

    unsigned AddBaseType(std::string name);
    void DefineMask(std::string name, TypeMask mask);
    void AddChecker(TypeCheckerDef def);
    void AddRule(StrengthReductionRule rule);
    void SetClassifier(ClassifyFn fn) { m_classify = fn; }
    void SetSampler(SampleFn fn) { m_sample = fn; }
    // Validates invariants and freezes the scheme. Throws BuildError.
    void Finalize();

    bool IsFinalized() const { return m_finalized; }
    unsigned NumBaseTypes() const { return static_cast<unsigned>(m_baseTypes.size()); }
    const std::string& BaseTypeName(unsigned id) const { return m_baseTypes.at(id); }
    TypeMask Top() const { return TypeMask::Top(NumBaseTypes()); }
    TypeMask Mask(std::string_view name) const;
    std::string MaskName(TypeMask mask) const;

    unsigned TypeOf(BoxedValue v) const { return m_classify(v); }
    std::vector<BoxedValue> Samples(unsigned typeId) const { return m_sample(typeId); }

    // Candidates for check selection: declared rules in order, followed by
    // every checker viewed as the rule <top, S, c>.
    struct Candidate {
        std::string name;
        TypeMask precondition;
        TypeMask target;
        uint32_t cost;
        CheckFn check;
    };
    const std::vector<Candidate>& Candidates() const { return m_candidates; }
    const std::vector<TypeCheckerDef>& Checkers() const { return m_checkers; }
    const std::vector<StrengthReductionRule>& Rules() const { return m_rules; }
    const TypeCheckerDef* CheckerFor(TypeMask mask) const;

    CheckDecision SelectChecker(TypeMask known, TypeMask toCheck) const;
    bool Evaluate(const CheckDecision& decision, BoxedValue v) const;
    uint32_t DecisionCost(const CheckDecision& decision) const;
    std::string DescribeDecision(const CheckDecision& decision) const;

    bool Is(TypeMask mask, BoxedValue v) const;
    BoxedValue Create(TypeMask mask, const Unboxed& payload) const;
    Unboxed As(TypeMask mask, BoxedValue v) const;

private:
    std::vector<std::string> m_baseTypes;
    std::vector<std::pair<std::string, TypeMask>> m_masks;
    std::vector<TypeCheckerDef> m_checkers;
    std::vector<StrengthReductionRule> m_rules;
    std::vector<Candidate> m_candidates;
    ClassifyFn m_classify = nullptr;
    SampleFn m_sample = nullptr;
    bool m_finalized = false;
};

enum class MaskOp : uint8_t { Union, Intersect, Complement, Subset };

// Mask algebra over a declared lattice. Complement is relative to `top`;
// Subset returns its answer in the bool member.
struct MaskAlgebraResult {
    TypeMask mask;
    bool flag = false;
};
MaskAlgebraResult MaskAlgebra(TypeMask a, TypeMask b, MaskOp op, TypeMask top);

} // namespace tiervm
