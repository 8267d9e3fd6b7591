#pragma once

#include "tiervm/template_tier.h"

namespace tiervm::jit {

// Cell handler reconstructing operands and running the shared semantic.
JitHandler GenericHandler(uint32_t kind);
JitHandler ArithHandler();
JitHandler SlowBridgeHandler();
JitHandler CallIcHandler();

} // namespace tiervm::jit
