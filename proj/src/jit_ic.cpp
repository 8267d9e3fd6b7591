#include "tiervm/template_tier.h"

#include "tiervm/common.h"

namespace tiervm {

Tier2IcSite::Tier2IcSite(const IcKind* kind, const IcSiteDesc* desc, uint32_t maxStubs)
    : m_kind(kind)
    , m_desc(desc)
    , m_maxStubs(maxStubs)
{
}

std::vector<uint64_t> Tier2IcSite::ChainKeys() const
{
    std::vector<uint64_t> keys;
    for (int32_t i = m_head; i >= 0; i = m_stubs[i].next)
        keys.push_back(m_stubs[i].key);
    return keys;
}

IcState Tier2IcSite::StubState(const Stub& s) const
{
    IcState st {};
    const std::vector<HoleSlot>& holes = m_desc->stateHoles[s.effect];
    for (const HoleSlot& h : holes)
        st.f[h.expr.field] = ReadHole(h.expr, h.decision, s.payload[h.slot]);
    return st;
}

BoxedValue Tier2IcSite::Execute(IcEnv env, const IcInput& input, Counters& counters)
{
    if (m_mode != Mode::Megamorphic) {
        if (m_slabUsed && m_slab.key == input.key) {
            counters.icHits++;
            return m_kind->Apply(m_slab.effect, env, input, m_slab.state);
        }
        for (int32_t i = m_head; i >= 0; i = m_stubs[i].next) {
            if (m_stubs[i].key == input.key) {
                counters.icHits++;
                return m_kind->Apply(m_stubs[i].effect, env, input, StubState(m_stubs[i]));
            }
        }
    }
    counters.icMisses++;
    counters.icBodyRuns++;
    std::optional<ICEntry> entry;
    IcStats stats;
    BoxedValue v = m_kind->RunBody(env, input, entry, stats);
    if (m_mode == Mode::Megamorphic || !entry)
        return v;
    uint32_t payloadFields = m_kind->Effects()[entry->effect].payloadFields;
    if (!m_slabUsed && payloadFields <= m_desc->slabCapacity) {
        m_slab = *entry;
        m_slabUsed = true;
        if (m_mode == Mode::MissOnly)
            m_mode = Mode::InlineSlab;
        return v;
    }
    if (m_stubs.size() >= m_maxStubs) {
        m_mode = Mode::Megamorphic;
        return v;
    }
    Stub s;
    s.key = entry->key;
    s.effect = entry->effect;
    const std::vector<HoleSlot>& holes = m_desc->stateHoles[entry->effect];
    s.payload.resize(holes.size());
    for (const HoleSlot& h : holes)
        s.payload[h.slot] = PatchHole(h.expr, h.decision, entry->state.f[h.expr.field]);
    s.next = m_head;
    m_stubs.push_back(std::move(s));
    m_head = int32_t(m_stubs.size() - 1);
    m_mode = Mode::Chained;
    counters.icStubsCreated++;
    return v;
}

} // namespace tiervm
