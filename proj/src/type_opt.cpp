#include "tiervm/type_opt.h"

#include "tiervm/common.h"

#include <algorithm>
#include <map>
#include <sstream>

namespace tiervm::sem {

TypePredicate TypePredicate::Conjunctive(std::span<const TypeMask> masks)
{
    if (masks.size() > kMaxPredicateArity)
        throw BuildError("type predicates support at most 4 operands");
    TypePredicate p;
    p.m_arity = static_cast<unsigned>(masks.size());
    TypeTuple cur {};
    // Enumerate the Cartesian product of the per-operand masks.
    auto rec = [&](auto&& self, unsigned i) -> void {
        if (i == p.m_arity) {
            p.m_tuples.insert(cur);
            return;
        }
        masks[i].ForEach([&](unsigned id) {
            cur[i] = static_cast<uint8_t>(id);
            self(self, i + 1);
        });
    };
    rec(rec, 0);
    return p;
}

TypePredicate TypePredicate::AndNot(const TypePredicate& base, unsigned operand, TypeMask mask)
{
    TIERVM_ASSERT(operand < base.m_arity, "operand out of range");
    TypePredicate p;
    p.m_arity = base.m_arity;
    for (const auto& t : base.m_tuples) {
        if (!mask.Contains(t[operand]))
            p.m_tuples.insert(t);
    }
    return p;
}

TypePredicate TypePredicate::Conjunction(const TypePredicate& a, const TypePredicate& b)
{
    TIERVM_ASSERT(a.m_arity == b.m_arity, "arity mismatch");
    TypePredicate p;
    p.m_arity = a.m_arity;
    std::set_intersection(a.m_tuples.begin(), a.m_tuples.end(), b.m_tuples.begin(), b.m_tuples.end(),
        std::inserter(p.m_tuples, p.m_tuples.end()));
    return p;
}

TypePredicate TypePredicate::Difference(const TypePredicate& a, const TypePredicate& b)
{
    TIERVM_ASSERT(a.m_arity == b.m_arity, "arity mismatch");
    TypePredicate p;
    p.m_arity = a.m_arity;
    std::set_difference(a.m_tuples.begin(), a.m_tuples.end(), b.m_tuples.begin(), b.m_tuples.end(),
        std::inserter(p.m_tuples, p.m_tuples.end()));
    return p;
}

TypePredicate TypePredicate::Single(std::span<const uint8_t> tuple)
{
    TIERVM_ASSERT(tuple.size() <= kMaxPredicateArity, "arity too large");
    TypePredicate p;
    p.m_arity = static_cast<unsigned>(tuple.size());
    TypeTuple t {};
    std::copy(tuple.begin(), tuple.end(), t.begin());
    p.m_tuples.insert(t);
    return p;
}

TypeMap::TypeMap(const SemFunction& f)
    : m_arity(f.ParamCount())
{
    for (const auto& b : f.blocks)
        m_ids.push_back(b.id);
    m_masks.assign(m_ids.size() * m_arity, TypeMask::Bottom());
}

TypeMask TypeMap::Get(BlockId b, unsigned operand) const
{
    auto it = std::find(m_ids.begin(), m_ids.end(), b);
    TIERVM_ASSERT(it != m_ids.end() && operand < m_arity, "type map lookup out of range");
    return m_masks[size_t(it - m_ids.begin()) * m_arity + operand];
}

void TypeMap::Add(BlockId b, unsigned operand, unsigned typeId)
{
    auto it = std::find(m_ids.begin(), m_ids.end(), b);
    TIERVM_ASSERT(it != m_ids.end() && operand < m_arity, "type map update out of range");
    auto& m = m_masks[size_t(it - m_ids.begin()) * m_arity + operand];
    m = m.Union(TypeMask::Single(typeId));
}

std::string TypeMap::Dump(const SemFunction& f, const BoxingScheme& scheme) const
{
    std::ostringstream os;
    for (const auto& b : f.blocks) {
        os << b.name << ":";
        for (unsigned i = 0; i < m_arity; i++) {
            if (f.params[i] != ParamKind::Boxed)
                continue;
            os << " v" << i << "=" << scheme.MaskName(Get(b.id, i));
        }
        os << "\n";
    }
    return os.str();
}

std::set<BlockId> SccpReachable(const SemFunction& f, std::span<const uint8_t> assignment)
{
    TIERVM_ASSERT(assignment.size() == f.ParamCount(), "assignment arity mismatch");
    std::set<BlockId> reached;
    std::vector<BlockId> work { f.entry };
    while (!work.empty()) {
        BlockId id = work.back();
        work.pop_back();
        if (!reached.insert(id).second)
            continue;
        const Block* b = f.Find(id);
        TIERVM_ASSERT(b != nullptr, "dangling block reference");
        const Terminator& t = b->term;
        if (t.kind == Terminator::Kind::Br) {
            work.push_back(t.thenBlock);
        } else if (t.kind == Terminator::Kind::CondBr) {
            const Instr& c = b->instrs[t.cond];
            if (c.kind == Instr::Kind::TypeCheck) {
                // Folded to a constant under the assignment.
                work.push_back(c.mask.Contains(assignment[c.param]) ? t.thenBlock : t.elseBlock);
            } else {
                // Value-dependent branches are overdefined.
                work.push_back(t.thenBlock);
                work.push_back(t.elseBlock);
            }
        }
    }
    return reached;
}

namespace {

// Runs the per-tuple analysis once, producing both M and the union of
// reachable blocks.
std::pair<TypeMap, std::set<BlockId>> Analyze(const SemFunction& f, const TypePredicate& p)
{
    TIERVM_ASSERT(p.Empty() || p.Arity() == f.ParamCount(), "predicate arity does not match the function");
    TypeMap m(f);
    std::set<BlockId> any;
    for (const auto& tuple : p.Tuples()) {
        auto reach = SccpReachable(f, std::span<const uint8_t>(tuple.data(), f.ParamCount()));
        for (BlockId b : reach) {
            any.insert(b);
            for (unsigned i = 0; i < f.ParamCount(); i++)
                m.Add(b, i, tuple[i]);
        }
    }
    return { std::move(m), std::move(any) };
}

void RemoveInstrs(Block& b, const std::vector<bool>& dead)
{
    std::vector<uint32_t> remap(b.instrs.size(), ~0u);
    std::vector<Instr> kept;
    for (size_t i = 0; i < b.instrs.size(); i++) {
        if (dead[i])
            continue;
        remap[i] = static_cast<uint32_t>(kept.size());
        kept.push_back(b.instrs[i]);
    }
    for (auto& in : kept) {
        if (in.kind == Instr::Kind::PrimOp || in.kind == Instr::Kind::Box)
            in.lhs = remap[in.lhs];
        if (in.kind == Instr::Kind::PrimOp)
            in.rhs = remap[in.rhs];
    }
    if (b.term.kind == Terminator::Kind::CondBr)
        b.term.cond = remap[b.term.cond];
    if (b.term.kind == Terminator::Kind::ReturnValue && !b.term.value.isParam)
        b.term.value.index = remap[b.term.value.index];
    b.instrs = std::move(kept);
}

void AppendBlock(Block& into, const Block& from)
{
    uint32_t base = static_cast<uint32_t>(into.instrs.size());
    for (Instr in : from.instrs) {
        if (in.kind == Instr::Kind::PrimOp || in.kind == Instr::Kind::Box)
            in.lhs += base;
        if (in.kind == Instr::Kind::PrimOp)
            in.rhs += base;
        into.instrs.push_back(in);
    }
    into.term = from.term;
    if (into.term.kind == Terminator::Kind::CondBr)
        into.term.cond += base;
    if (into.term.kind == Terminator::Kind::ReturnValue && !into.term.value.isParam)
        into.term.value.index += base;
}

std::vector<BlockId> Successors(const Block& b)
{
    switch (b.term.kind) {
    case Terminator::Kind::CondBr: return { b.term.thenBlock, b.term.elseBlock };
    case Terminator::Kind::Br: return { b.term.thenBlock };
    default: return {};
    }
}

SemFunction TrapFunction(const SemFunction& f, const char* suffix)
{
    SemFunction g;
    g.name = f.name + suffix;
    g.params = f.params;
    g.blocks.push_back(Block { 0, "trap", {}, Terminator {} });
    g.entry = 0;
    return g;
}

} // namespace

TypeMap ComputeTypeMap(const SemFunction& f, const TypePredicate& p)
{
    return Analyze(f, p).first;
}

SemFunction OptimizeChecks(const SemFunction& f, const TypePredicate& p, const BoxingScheme& scheme, OptimizeStats* stats)
{
    OptimizeStats local;
    OptimizeStats& st = stats ? *stats : local;
    st = {};
    auto [m, reachable] = Analyze(f, p);
    if (reachable.empty())
        return TrapFunction(f, ".unreachable");

    SemFunction g = f;
    std::set<BlockId> foldedBr;
    for (auto& b : g.blocks) {
        if (!reachable.count(b.id))
            continue;
        std::vector<bool> dead(b.instrs.size(), false);
        std::optional<bool> condConst;
        for (size_t i = 0; i < b.instrs.size(); i++) {
            Instr& in = b.instrs[i];
            if (in.kind != Instr::Kind::TypeCheck)
                continue;
            TypeMask known = m.Get(b.id, in.param);
            CheckDecision d = scheme.SelectChecker(known, in.mask);
            switch (d.kind) {
            case CheckDecision::Kind::AlwaysTrue:
            case CheckDecision::Kind::AlwaysFalse:
                dead[i] = true;
                st.checksFolded++;
                if (b.term.kind == Terminator::Kind::CondBr && b.term.cond == i)
                    condConst = d.kind == CheckDecision::Kind::AlwaysTrue;
                break;
            case CheckDecision::Kind::Rule: {
                const auto& c = scheme.Candidates()[d.candidate];
                bool plain = !d.negated && c.target == in.mask && c.precondition == scheme.Top();
                if (plain) {
                    st.checksKept++;
                } else {
                    in.lowered = d;
                    st.checksReduced++;
                }
                break;
            }
            case CheckDecision::Kind::Generic:
                st.checksKept++;
                break;
            }
        }
        if (condConst) {
            BlockId target = *condConst ? b.term.thenBlock : b.term.elseBlock;
            b.term = Terminator { Terminator::Kind::Br, 0, target, kNoBlock, {}, 0 };
            foldedBr.insert(b.id);
        }
        RemoveInstrs(b, dead);
    }

    // Drop blocks that are no longer reachable from entry.
    std::set<BlockId> live;
    std::vector<BlockId> work { g.entry };
    while (!work.empty()) {
        BlockId id = work.back();
        work.pop_back();
        if (!live.insert(id).second)
            continue;
        for (BlockId s : Successors(*g.Find(id)))
            work.push_back(s);
    }
    size_t before = g.blocks.size();
    std::erase_if(g.blocks, [&](const Block& b) { return !live.count(b.id); });
    st.blocksRemoved = static_cast<unsigned>(before - g.blocks.size());

    // Merge chains created by folding: A --folded br--> B with B's only
    // predecessor being A.
    for (bool changed = true; changed;) {
        changed = false;
        std::map<BlockId, unsigned> preds;
        for (const auto& b : g.blocks) {
            for (BlockId s : Successors(b))
                preds[s]++;
        }
        for (auto& a : g.blocks) {
            if (!foldedBr.count(a.id) || a.term.kind != Terminator::Kind::Br)
                continue;
            BlockId bid = a.term.thenBlock;
            if (bid == a.id || bid == g.entry || preds[bid] != 1)
                continue;
            Block victim = *g.Find(bid);
            AppendBlock(a, victim);
            if (!foldedBr.count(bid))
                foldedBr.erase(a.id);
            std::erase_if(g.blocks, [&](const Block& x) { return x.id == bid; });
            st.blocksRemoved++;
            changed = true;
            break;
        }
    }
    return g;
}

SplitResult SplitFastSlow(const SemFunction& f, std::span<const TypeMask> known,
    std::span<const std::optional<TypeMask>> speculation, const BoxingScheme& scheme)
{
    const unsigned n = f.ParamCount();
    TIERVM_ASSERT(known.size() == n && speculation.size() == n, "split: operand count mismatch");
    std::vector<TypeMask> knownMasks(n), fastMasks(n);
    SplitResult r;
    for (unsigned i = 0; i < n; i++) {
        if (f.params[i] == ParamKind::Literal) {
            if (speculation[i])
                throw BuildError("cannot speculate on the type of literal operand " + std::to_string(i) + " of " + f.name);
            knownMasks[i] = fastMasks[i] = TypeMask::Single(0);
            continue;
        }
        knownMasks[i] = known[i];
        fastMasks[i] = known[i];
        if (speculation[i]) {
            if (speculation[i]->IsBottom())
                throw BuildError("empty speculation mask for operand " + std::to_string(i) + " of " + f.name);
            fastMasks[i] = known[i].Intersect(*speculation[i]);
            r.guards.push_back(Guard { i, *speculation[i], scheme.SelectChecker(known[i], *speculation[i]) });
        }
    }
    TypePredicate pKnown = TypePredicate::Conjunctive(knownMasks);
    TypePredicate p1 = TypePredicate::Conjunctive(fastMasks);
    TypePredicate p2 = TypePredicate::Difference(pKnown, p1);
    r.fast = OptimizeChecks(f, p1, scheme);
    r.fast.name = f.name + ".fast";
    r.slowEmpty = p2.Empty();
    if (r.slowEmpty) {
        r.slow = TrapFunction(f, ".slow");
    } else {
        r.slow = OptimizeChecks(f, p2, scheme);
        r.slow.name = f.name + ".slow";
    }
    return r;
}

} // namespace tiervm::sem
