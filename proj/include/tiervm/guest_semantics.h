#pragma once

#include "tiervm/sem_ir.h"

namespace tiervm {

// Semantic function of a binary arithmetic bytecode: two tDouble checks
// guarding the double fast path, and a slow path for everything else.
sem::SemFunction ArithSemantics(sem::PrimKind prim, const std::string& name);

// Slow-path tag used by ArithSemantics.
inline constexpr uint32_t kArithSlowPathTag = 0;

} // namespace tiervm
