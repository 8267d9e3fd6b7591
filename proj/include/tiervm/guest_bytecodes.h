#pragma once

#include "tiervm/bytecode.h"
#include "tiervm/ic.h"

#include <vector>

namespace tiervm {

// Bytecode kind ids of the demo guest.
struct GuestKinds {
    uint32_t Nop, Mov, LoadConstant;
    uint32_t Add, Sub, Mul, Div, Mod;
    uint32_t Unm, Not, Len, Concat;
    uint32_t JmpIfLt, JmpIfNotLt, JmpIfLe, JmpIfNotLe, JmpIfEq, JmpIfNotEq;
    uint32_t BrTruthy, BrFalsy, Jump, ForPrep, ForLoop;
    uint32_t NewTable, GetById, SetById, GetByVal, SetByVal, GetGlobal, SetGlobal;
    uint32_t CreateClosure, UpvalueGet, UpvaluePut, UpvalueClose;
    uint32_t Call, TailCall, Return, ReturnVarRes, VarArgs, TableSetVarRes;
    uint32_t Probe;
};

enum GuestIc : uint32_t { kIcGetById = 0, kIcSetById = 1, kIcGetGlobal = 2, kIcSetGlobal = 3 };

// Effect definition indices of the property-access descriptors.
inline constexpr uint32_t kGetEffectFound = 0;
inline constexpr uint32_t kGetEffectNotFound = 1;
inline constexpr uint32_t kSetEffectReplace = 0;
inline constexpr uint32_t kSetEffectTransition = 1;

// Annotated range of property slot numbers.
inline constexpr int64_t kMaxPropertySlot = int64_t(1) << 20;

const BytecodeRegistry& GuestRegistry();
const GuestKinds& Kinds();
const std::vector<IcKind>& GuestIcKinds();

ICDescriptor GetByIdDescriptor(const std::string& name, bool fused = true);
ICDescriptor SetByIdDescriptor(const std::string& name, bool fused = true);

// Prim kind of an arithmetic bytecode kind, or -1.
int ArithPrimOf(uint32_t kind);

} // namespace tiervm
