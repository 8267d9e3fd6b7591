#include "tiervm/guest_semantics.h"

#include "tiervm/guest_types.h"

namespace tiervm {

sem::SemFunction ArithSemantics(sem::PrimKind prim, const std::string& name)
{
    using namespace tmask;
    sem::SemBuilder b(name, 2);
    auto entry = b.NewBlock("entry");
    auto critEdge = b.NewBlock("crit_edge");
    auto fast = b.NewBlock("double_" + std::string(sem::PrimKindName(prim)));
    auto slow = b.NewBlock("non_double_" + std::string(sem::PrimKindName(prim)));

    b.SetInsertPoint(entry);
    b.CondBr(b.TypeCheck(0, tDouble), critEdge, slow);

    b.SetInsertPoint(critEdge);
    b.CondBr(b.TypeCheck(1, tDouble), fast, slow);

    b.SetInsertPoint(fast);
    auto lhs = b.Unbox(0, tDouble);
    auto rhs = b.Unbox(1, tDouble);
    auto sum = b.Prim(prim, lhs, rhs);
    b.ReturnValue(sem::ValueRef { false, b.Box(tDouble, sum) });

    b.SetInsertPoint(slow);
    b.EnterSlowPath(kArithSlowPathTag);
    return b.Finish();
}

} // namespace tiervm
