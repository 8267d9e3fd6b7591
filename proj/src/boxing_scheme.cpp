#include "tiervm/boxing_scheme.h"

#include "tiervm/common.h"

#include <algorithm>

namespace tiervm {

unsigned BoxingScheme::AddBaseType(std::string name)
{
    TIERVM_ASSERT(!m_finalized, "scheme already finalized");
    if (m_baseTypes.size() >= 64)
        throw BuildError("a boxing scheme supports at most 64 base types");
    for (const auto& n : m_baseTypes) {
        if (n == name)
            throw BuildError("duplicate base type " + name);
    }
    m_baseTypes.push_back(std::move(name));
    unsigned id = static_cast<unsigned>(m_baseTypes.size() - 1);
    m_masks.emplace_back(m_baseTypes.back(), TypeMask::Single(id));
    return id;
}

void BoxingScheme::DefineMask(std::string name, TypeMask mask)
{
    TIERVM_ASSERT(!m_finalized, "scheme already finalized");
    for (const auto& [n, m] : m_masks) {
        if (n == name)
            throw BuildError("duplicate mask name " + name);
    }
    m_masks.emplace_back(std::move(name), mask);
}

void BoxingScheme::AddChecker(TypeCheckerDef def)
{
    TIERVM_ASSERT(!m_finalized, "scheme already finalized");
    m_checkers.push_back(std::move(def));
}

void BoxingScheme::AddRule(StrengthReductionRule rule)
{
    TIERVM_ASSERT(!m_finalized, "scheme already finalized");
    m_rules.push_back(std::move(rule));
}

void BoxingScheme::Finalize()
{
    if (m_finalized)
        return;
    if (m_baseTypes.empty())
        throw BuildError("boxing scheme has no base types");
    if (!m_classify)
        throw BuildError("boxing scheme has no classifier");
    TypeMask top = Top();
    for (const auto& [n, m] : m_masks) {
        if (!m.SubsetOf(top))
            throw BuildError("mask " + n + " uses undeclared base types");
    }
    for (const auto& c : m_checkers) {
        if (c.mask.IsBottom() || !c.mask.SubsetOf(top))
            throw BuildError("checker " + c.name + " has an invalid mask");
        if (!c.check)
            throw BuildError("checker " + c.name + " has no predicate");
    }
    for (const auto& r : m_rules) {
        if (!r.target.SubsetOf(r.precondition) || r.target == r.precondition || !r.precondition.SubsetOf(top))
            throw BuildError("rule " + r.name + " must satisfy target strictly inside precondition");
        if (!r.check)
            throw BuildError("rule " + r.name + " has no predicate");
    }
    m_candidates.clear();
    for (const auto& r : m_rules)
        m_candidates.push_back(Candidate { r.name, r.precondition, r.target, r.cost, r.check });
    for (const auto& c : m_checkers)
        m_candidates.push_back(Candidate { c.name, top, c.mask, c.cost, c.check });
    m_finalized = true;
}

TypeMask BoxingScheme::Mask(std::string_view name) const
{
    for (const auto& [n, m] : m_masks) {
        if (n == name)
            return m;
    }
    if (name == "top")
        return Top();
    if (name == "bottom")
        return TypeMask::Bottom();
    throw BuildError("unknown type mask " + std::string(name));
}

std::string BoxingScheme::MaskName(TypeMask mask) const
{
    if (mask.IsBottom())
        return "bottom";
    if (mask == Top())
        return "top";
    for (const auto& [n, m] : m_masks) {
        if (m == mask)
            return n;
    }
    std::string out = "{";
    bool first = true;
    mask.ForEach([&](unsigned id) {
        if (!first)
            out += ",";
        first = false;
        out += id < m_baseTypes.size() ? m_baseTypes[id] : std::to_string(id);
    });
    return out + "}";
}

const TypeCheckerDef* BoxingScheme::CheckerFor(TypeMask mask) const
{
    for (const auto& c : m_checkers) {
        if (c.mask == mask)
            return &c;
    }
    return nullptr;
}

CheckDecision BoxingScheme::SelectChecker(TypeMask known, TypeMask toCheck) const
{
    TIERVM_ASSERT(m_finalized, "scheme not finalized");
    TIERVM_ASSERT(!known.IsBottom(), "select_checker requires a non-bottom known mask");
    CheckDecision d;
    d.toCheck = toCheck;
    if (known.SubsetOf(toCheck)) {
        d.kind = CheckDecision::Kind::AlwaysTrue;
        return d;
    }
    if (known.Disjoint(toCheck)) {
        d.kind = CheckDecision::Kind::AlwaysFalse;
        return d;
    }
    const TypeMask wantTrue = toCheck.Intersect(known);
    const TypeMask wantFalse = known.Minus(toCheck);
    bool found = false;
    for (uint32_t i = 0; i < m_candidates.size(); i++) {
        const auto& c = m_candidates[i];
        if (!known.SubsetOf(c.precondition))
            continue;
        const TypeMask decided = c.target.Intersect(known);
        for (bool negated : { false, true }) {
            if (decided != (negated ? wantFalse : wantTrue))
                continue;
            // Strict comparison keeps the earliest-declared candidate on ties.
            if (!found || c.cost < m_candidates[d.candidate].cost) {
                d.kind = CheckDecision::Kind::Rule;
                d.candidate = i;
                d.negated = negated;
                found = true;
            }
        }
    }
    if (!found)
        d.kind = CheckDecision::Kind::Generic;
    return d;
}

bool BoxingScheme::Evaluate(const CheckDecision& decision, BoxedValue v) const
{
    switch (decision.kind) {
    case CheckDecision::Kind::AlwaysTrue: return true;
    case CheckDecision::Kind::AlwaysFalse: return false;
    case CheckDecision::Kind::Rule: return m_candidates[decision.candidate].check(v) != decision.negated;
    case CheckDecision::Kind::Generic: return decision.toCheck.Contains(TypeOf(v));
    }
    return false;
}

uint32_t BoxingScheme::DecisionCost(const CheckDecision& decision) const
{
    switch (decision.kind) {
    case CheckDecision::Kind::AlwaysTrue:
    case CheckDecision::Kind::AlwaysFalse: return 0;
    case CheckDecision::Kind::Rule: return m_candidates[decision.candidate].cost;
    case CheckDecision::Kind::Generic: return 1000;
    }
    return 0;
}

std::string BoxingScheme::DescribeDecision(const CheckDecision& decision) const
{
    switch (decision.kind) {
    case CheckDecision::Kind::AlwaysTrue: return "alwaysTrue";
    case CheckDecision::Kind::AlwaysFalse: return "alwaysFalse";
    case CheckDecision::Kind::Rule:
        return std::string(decision.negated ? "not " : "") + "rule(" + m_candidates[decision.candidate].name + ")";
    case CheckDecision::Kind::Generic: return "generic(" + MaskName(decision.toCheck) + ")";
    }
    return "?";
}

bool BoxingScheme::Is(TypeMask mask, BoxedValue v) const
{
    if (const TypeCheckerDef* c = CheckerFor(mask))
        return c->check(v);
    return mask.Contains(TypeOf(v));
}

BoxedValue BoxingScheme::Create(TypeMask mask, const Unboxed& payload) const
{
    const TypeCheckerDef* c = CheckerFor(mask);
    TIERVM_ASSERT(c && c->encode, "mask " + MaskName(mask) + " declares no encoder");
    return c->encode(payload);
}

Unboxed BoxingScheme::As(TypeMask mask, BoxedValue v) const
{
    const TypeCheckerDef* c = CheckerFor(mask);
    TIERVM_ASSERT(c && c->decode, "mask " + MaskName(mask) + " declares no decoder");
    TIERVM_DEBUG_ASSERT(mask.Contains(TypeOf(v)), "As<" + MaskName(mask) + "> on a value of type " + BaseTypeName(TypeOf(v)));
    return c->decode(v);
}

MaskAlgebraResult MaskAlgebra(TypeMask a, TypeMask b, MaskOp op, TypeMask top)
{
    switch (op) {
    case MaskOp::Union: return { a.Union(b), false };
    case MaskOp::Intersect: return { a.Intersect(b), false };
    case MaskOp::Complement: return { a.Complement(top), false };
    case MaskOp::Subset: return { TypeMask(), a.SubsetOf(b) };
    }
    return {};
}

} // namespace tiervm
