#pragma once

#include "tiervm/guest_types.h"
#include "tiervm/sem_ir.h"
#include "tiervm/type_opt.h"

#include <random>
#include <set>
#include <vector>

namespace tiervm::testing {

inline TypeMask RandomMask(std::mt19937_64& rng)
{
    using namespace tmask;
    static const TypeMask named[] = { tNil, tBool, tDoubleNaN, tDoubleNotNaN, tString, tFunction, tTable, tDouble, tHeapEntity };
    if (rng() % 2)
        return named[rng() % std::size(named)];
    TypeMask m;
    while (m.IsBottom())
        m = TypeMask(rng() & tTop.Bits());
    return m;
}

// Random acyclic SemFunction. Unbox instructions are only placed where every
// path from entry has already established the unboxed mask, so that
// interpretation never violates an As<> contract.
inline sem::SemFunction RandomSemFunction(std::mt19937_64& rng, unsigned numParams, unsigned numBlocks)
{
    using namespace tmask;
    sem::SemBuilder b("rand", numParams);
    std::vector<sem::BlockId> ids;
    for (unsigned i = 0; i < numBlocks; i++)
        ids.push_back(b.NewBlock("b" + std::to_string(i)));
    // facts[k][i]: union of the masks param i may have on entry to block k.
    std::vector<std::vector<TypeMask>> facts(numBlocks, std::vector<TypeMask>(numParams, TypeMask::Bottom()));
    facts[0].assign(numParams, tTop);
    auto addEdge = [&](unsigned to, const std::vector<TypeMask>& m) {
        for (unsigned i = 0; i < numParams; i++)
            facts[to][i] = facts[to][i] | m[i];
    };
    for (unsigned k = 0; k < numBlocks; k++) {
        b.SetInsertPoint(ids[k]);
        std::vector<TypeMask> known = facts[k];
        bool reachable = !known.empty() && !known[0].IsBottom();
        std::vector<uint32_t> doubles;
        std::vector<uint32_t> bools;
        std::vector<uint32_t> boxes;
        for (unsigned i = 0; i < numParams && reachable; i++) {
            if (known[i].SubsetOf(tDouble) && rng() % 3) {
                doubles.push_back(b.Unbox(i, tDouble));
            } else if (known[i] == tBool && rng() % 2) {
                bools.push_back(b.Unbox(i, tBool));
            }
        }
        // Unused type checks exercise folding outside of branch conditions.
        if (rng() % 4 == 0)
            b.TypeCheck(unsigned(rng() % numParams), RandomMask(rng));
        for (unsigned j = 0, n = unsigned(rng() % 3); j < n && !doubles.empty(); j++) {
            auto l = doubles[rng() % doubles.size()];
            auto r = doubles[rng() % doubles.size()];
            static const sem::PrimKind arith[] = { sem::PrimKind::Add, sem::PrimKind::Sub, sem::PrimKind::Mul, sem::PrimKind::Div };
            static const sem::PrimKind cmps[] = { sem::PrimKind::CmpLt, sem::PrimKind::CmpLe, sem::PrimKind::CmpEq };
            if (rng() % 3)
                doubles.push_back(b.Prim(arith[rng() % 4], l, r));
            else
                bools.push_back(b.Prim(cmps[rng() % 3], l, r));
        }
        if (!doubles.empty() && rng() % 2)
            boxes.push_back(b.Box(tDouble, doubles[rng() % doubles.size()]));
        if (!bools.empty() && rng() % 2)
            boxes.push_back(b.Box(tBool, bools[rng() % bools.size()]));

        unsigned remaining = numBlocks - k - 1;
        unsigned choice = remaining == 0 ? 9 : unsigned(rng() % 10);
        auto later = [&] { return k + 1 + unsigned(rng() % remaining); };
        if (choice < 5) {
            unsigned param = unsigned(rng() % numParams);
            TypeMask m = RandomMask(rng);
            unsigned t = later();
            unsigned e = later();
            auto thenKnown = known;
            auto elseKnown = known;
            thenKnown[param] = known[param] & m;
            elseKnown[param] = known[param].Minus(m);
            b.CondBr(b.TypeCheck(param, m), ids[t], ids[e]);
            addEdge(t, thenKnown);
            addEdge(e, elseKnown);
        } else if (choice == 5 && !bools.empty()) {
            unsigned t = later();
            unsigned e = later();
            b.CondBr(bools[rng() % bools.size()], ids[t], ids[e]);
            addEdge(t, known);
            addEdge(e, known);
        } else if (choice < 8 && remaining > 0) {
            unsigned t = later();
            b.Br(ids[t]);
            addEdge(t, known);
        } else {
            switch (rng() % 5) {
            case 0:
                if (!boxes.empty())
                    b.ReturnValue(sem::ValueRef { false, boxes[rng() % boxes.size()] });
                else
                    b.ReturnValue(sem::ValueRef { true, unsigned(rng() % numParams) });
                break;
            case 1: b.EnterSlowPath(unsigned(rng() % 4)); break;
            case 2: b.Dispatch(); break;
            case 3: b.MakeCallMarker(unsigned(rng() % 4)); break;
            default: b.Trap(); break;
            }
        }
    }
    return b.Finish();
}

// Reachable blocks for one type tuple, by direct recursive exploration.
inline void OracleVisit(const sem::SemFunction& f, sem::BlockId id, std::span<const uint8_t> tuple, std::set<sem::BlockId>& seen)
{
    if (!seen.insert(id).second)
        return;
    const sem::Block& b = *f.Find(id);
    switch (b.term.kind) {
    case sem::Terminator::Kind::Br: OracleVisit(f, b.term.thenBlock, tuple, seen); break;
    case sem::Terminator::Kind::CondBr: {
        const sem::Instr& c = b.instrs[b.term.cond];
        if (c.kind == sem::Instr::Kind::TypeCheck) {
            OracleVisit(f, (c.mask.Bits() >> tuple[c.param]) & 1 ? b.term.thenBlock : b.term.elseBlock, tuple, seen);
        } else {
            OracleVisit(f, b.term.thenBlock, tuple, seen);
            OracleVisit(f, b.term.elseBlock, tuple, seen);
        }
        break;
    }
    default: break;
    }
}

// Value tuples drawn from the representative samples of each type tuple.
inline std::vector<std::vector<BoxedValue>> SampleArgs(const sem::TypeTuple& tuple, unsigned n, unsigned perType)
{
    std::vector<std::vector<BoxedValue>> samples(n);
    for (unsigned i = 0; i < n; i++)
        samples[i] = GuestSamples(tuple[i]);
    std::vector<std::vector<BoxedValue>> out;
    for (unsigned k = 0; k < perType; k++) {
        std::vector<BoxedValue> args(n);
        for (unsigned i = 0; i < n; i++)
            args[i] = samples[i][(k * 5 + i) % samples[i].size()];
        out.push_back(args);
    }
    return out;
}

} // namespace tiervm::testing
