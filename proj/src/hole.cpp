#include "tiervm/template_tier.h"

#include "tiervm/common.h"

#include <utility>

namespace tiervm {

const char* HoleRootName(HoleRoot r)
{
    switch (r) {
    case HoleRoot::OperandSlot: return "operand_slot";
    case HoleRoot::LiteralOperand: return "literal";
    case HoleRoot::ConstantValue: return "constant";
    case HoleRoot::RangeLength: return "range_length";
    case HoleRoot::OutputSlot: return "output_slot";
    case HoleRoot::FallthroughAddr: return "fallthrough_addr";
    case HoleRoot::BranchTargetAddr: return "branch_target_addr";
    case HoleRoot::SlowPathDataOffset: return "slow_path_data_offset";
    case HoleRoot::IcStateField: return "ic_state";
    }
    return "?";
}

int64_t HoleExpr::Eval(int64_t rootValue) const
{
    uint64_t v = uint64_t(rootValue);
    for (const AffineStep& s : chain)
        v = s.op == AffineStep::Op::Mul ? v * uint64_t(s.k) : v + uint64_t(s.k);
    return int64_t(v);
}

std::string HoleExpr::Describe() const
{
    std::string out = HoleRootName(root);
    switch (root) {
    case HoleRoot::OperandSlot:
    case HoleRoot::LiteralOperand:
    case HoleRoot::ConstantValue:
    case HoleRoot::RangeLength:
        out += "(" + std::to_string(index) + ")";
        break;
    case HoleRoot::IcStateField:
        out += "(" + std::to_string(index) + "." + std::to_string(field) + ")";
        break;
    default:
        break;
    }
    for (const AffineStep& s : chain) {
        if (s.op == AffineStep::Op::Mul)
            out += "*" + std::to_string(s.k);
        else
            out += (s.k < 0 ? "" : "+") + std::to_string(s.k);
    }
    return out;
}

std::string HoleDecision::Describe() const
{
    switch (mode) {
    case HoleMode::Direct:
        return "direct";
    case HoleMode::Adjusted:
        return std::string("adjusted(") + (adjust < 0 ? "" : "+") + std::to_string(adjust) + ")";
    case HoleMode::RuntimeEvaluated:
        return "runtime";
    }
    return "?";
}

HoleDecision ProveRange(const HoleExpr& expr, RootRange root, int64_t targetLo, int64_t targetHi)
{
    HoleDecision d;
    if (root.unbounded)
        return d;
    __int128 lo = root.lo;
    __int128 hi = root.hi;
    const __int128 limit = __int128(1) << 62;
    for (const AffineStep& s : expr.chain) {
        if (s.op == AffineStep::Op::Mul) {
            lo *= s.k;
            hi *= s.k;
            if (lo > hi)
                std::swap(lo, hi);
        } else {
            lo += s.k;
            hi += s.k;
        }
        if (lo < -limit || hi > limit)
            return d;
    }
    d.lo = int64_t(lo);
    d.hi = int64_t(hi);
    if (lo >= targetLo && hi < targetHi) {
        d.mode = HoleMode::Direct;
        return d;
    }
    if (hi - lo < __int128(targetHi) - targetLo) {
        d.mode = HoleMode::Adjusted;
        d.adjust = int64_t(targetLo - lo);
        return d;
    }
    return d;
}

uint64_t PatchHole(const HoleExpr& expr, const HoleDecision& d, int64_t rootValue)
{
    if (d.mode == HoleMode::RuntimeEvaluated)
        return uint64_t(rootValue);
    int64_t v = expr.Eval(rootValue);
    TIERVM_ASSERT(v >= d.lo && v <= d.hi, "hole value outside its proven range");
    return uint64_t(d.mode == HoleMode::Adjusted ? v + d.adjust : v);
}

int64_t ReadHole(const HoleExpr& expr, const HoleDecision& d, uint64_t burned)
{
    switch (d.mode) {
    case HoleMode::Direct:
        return int64_t(burned);
    case HoleMode::Adjusted:
        return int64_t(burned) - d.adjust;
    case HoleMode::RuntimeEvaluated:
        return expr.Eval(int64_t(burned));
    }
    return 0;
}

} // namespace tiervm
