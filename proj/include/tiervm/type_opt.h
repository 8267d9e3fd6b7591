#pragma once

#include "tiervm/boxing_scheme.h"
#include "tiervm/sem_ir.h"

#include <array>
#include <optional>
#include <set>
#include <vector>

namespace tiervm::sem {

inline constexpr unsigned kMaxPredicateArity = 4;

using TypeTuple = std::array<uint8_t, kMaxPredicateArity>;

// A type predicate over n operands, materialized as the explicit set of type
// tuples it accepts. Literal (non-boxed) operands are fixed to type 0 and
// never inspected.
class TypePredicate {
public:
    TypePredicate() = default;

    // t_i in masks[i] for every i.
    static TypePredicate Conjunctive(std::span<const TypeMask> masks);
    // base with the extra requirement t_i not in mask.
    static TypePredicate AndNot(const TypePredicate& base, unsigned operand, TypeMask mask);
    static TypePredicate Conjunction(const TypePredicate& a, const TypePredicate& b);
    static TypePredicate Difference(const TypePredicate& a, const TypePredicate& b);
    static TypePredicate Single(std::span<const uint8_t> tuple);

    unsigned Arity() const { return m_arity; }
    bool Empty() const { return m_tuples.empty(); }
    size_t Size() const { return m_tuples.size(); }
    bool Contains(const TypeTuple& t) const { return m_tuples.count(t) != 0; }
    const std::set<TypeTuple>& Tuples() const { return m_tuples; }

private:
    unsigned m_arity = 0;
    std::set<TypeTuple> m_tuples;
};

// M : <block, operand> -> mask, indexed by block position in the function.
class TypeMap {
public:
    TypeMap() = default;
    TypeMap(const SemFunction& f);

    TypeMask Get(BlockId b, unsigned operand) const;
    void Add(BlockId b, unsigned operand, unsigned typeId);
    std::string Dump(const SemFunction& f, const BoxingScheme& scheme) const;
    bool operator==(const TypeMap&) const = default;

private:
    std::vector<BlockId> m_ids;
    unsigned m_arity = 0;
    std::vector<TypeMask> m_masks;
};

// Blocks reachable from entry once every type check is folded under the given
// per-operand type assignment. `f` is not modified.
std::set<BlockId> SccpReachable(const SemFunction& f, std::span<const uint8_t> assignment);

TypeMap ComputeTypeMap(const SemFunction& f, const TypePredicate& p);

struct OptimizeStats {
    unsigned checksFolded = 0;
    unsigned checksReduced = 0;
    unsigned checksKept = 0;
    unsigned blocksRemoved = 0;
};

// Removes or strength-reduces type checks proven redundant under p, then folds
// constant branches, drops dead blocks, and merges straight-line chains that
// folding created.
SemFunction OptimizeChecks(const SemFunction& f, const TypePredicate& p, const BoxingScheme& scheme, OptimizeStats* stats = nullptr);

struct Guard {
    unsigned operand = 0;
    TypeMask mask;
    CheckDecision decision;
};

struct SplitResult {
    std::vector<Guard> guards;
    SemFunction fast;
    SemFunction slow;
    bool slowEmpty = false;
};

// Speculation-based code splitting. `known[i]` is the statically known mask of
// operand i (top when unknown); `speculation[i]` the speculated mask if any.
SplitResult SplitFastSlow(const SemFunction& f, std::span<const TypeMask> known,
    std::span<const std::optional<TypeMask>> speculation, const BoxingScheme& scheme);

} // namespace tiervm::sem
