#pragma once

#include "tiervm/vm.h"

namespace tiervm::exec {

using ExecFn = Flow (*)(Engine&, PinnedState&, const ExecSite&);

#define TIERVM_FOR_EACH_EXEC(X) \
    X(Nop) X(Mov) X(LoadConstant) X(Add) X(Sub) X(Mul) X(Div) X(Mod) X(Unm) X(Not) X(Len) X(Concat) \
    X(JmpIfLt) X(JmpIfNotLt) X(JmpIfLe) X(JmpIfNotLe) X(JmpIfEq) X(JmpIfNotEq) X(BrTruthy) X(BrFalsy) \
    X(Jump) X(ForPrep) X(ForLoop) X(NewTable) X(GetById) X(SetById) X(GetByVal) X(SetByVal) X(GetGlobal) \
    X(SetGlobal) X(CreateClosure) X(UpvalueGet) X(UpvaluePut) X(UpvalueClose) X(Call) X(TailCall) X(Return) \
    X(ReturnVarRes) X(VarArgs) X(TableSetVarRes) X(Probe)

#define TIERVM_DECLARE_EXEC(name) Flow name(Engine&, PinnedState&, const ExecSite&);
TIERVM_FOR_EACH_EXEC(TIERVM_DECLARE_EXEC)
#undef TIERVM_DECLARE_EXEC

// Shared semantic of a bytecode kind.
ExecFn ForKind(uint32_t kind);

} // namespace tiervm::exec
