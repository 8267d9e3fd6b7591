#include "exec_internal.h"

#include "tiervm/guest_bytecodes.h"

#include <vector>

namespace tiervm {

namespace {

using InterpHandler = void (*)(Engine&, PinnedState&);

template<exec::ExecFn F, bool OsrCheck>
void Handler(Engine& e, PinnedState& st)
{
    DecodedBytecode d = e.DecodeAt(*st.cb, st.pos);
    uint32_t ord = st.cb->OrdinalOf(st.pos);
    ExecSite site { &d, ord, 0, st.pos, -1 };
    switch (F(e, st, site)) {
    case Flow::Next:
        st.pos += d.length;
        break;
    case Flow::Branch: {
        uint32_t to = st.cb->OrdinalOf(d.target);
        e.TakeBranch(st, ord, to);
        st.pos = d.target;
        if constexpr (OsrCheck)
            e.MaybeOsr(st, to);
        break;
    }
    case Flow::Transferred:
        if (e.HasPendingReturn() && st.mode == ExecMode::Interp)
            e.FinishReturnInterp(st);
        break;
    }
}

const std::vector<InterpHandler>& HandlerTable()
{
    static const std::vector<InterpHandler> table = [] {
        const BytecodeRegistry& reg = GuestRegistry();
        const GuestKinds& k = Kinds();
        std::vector<InterpHandler> plain(reg.NumKinds(), nullptr);
        std::vector<InterpHandler> osr(reg.NumKinds(), nullptr);
#define TIERVM_INTERP_ENTRY(name) \
    plain[k.name] = &Handler<&exec::name, false>; \
    osr[k.name] = &Handler<&exec::name, true>;
        TIERVM_FOR_EACH_EXEC(TIERVM_INTERP_ENTRY)
#undef TIERVM_INTERP_ENTRY
        std::vector<InterpHandler> t(reg.NumOpcodes(), nullptr);
        for (uint16_t op = 0; op < reg.NumOpcodes(); op++) {
            const OpcodeLayout& l = reg.Layout(op);
            bool check = reg.Def(l.kind).variants[l.variant].osrCheck;
            t[op] = check ? osr[l.kind] : plain[l.kind];
        }
        return t;
    }();
    return table;
}

} // namespace

void Engine::RunInterp(PinnedState& st)
{
    if (m_pendingReturn)
        FinishReturnInterp(st);
    const std::vector<InterpHandler>& table = HandlerTable();
    const bool naive = m_cfg.naiveCounting;
    while (st.mode == ExecMode::Interp) {
        if (naive)
            m_counters.naiveBytecodes++;
        table[ReadOpcode(st.cb->stream.bytes, st.pos)](*this, st);
    }
}

} // namespace tiervm
