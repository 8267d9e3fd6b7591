#include "tiervm/ic.h"

#include "tiervm/common.h"

#include <algorithm>

namespace tiervm {

std::vector<ConcreteEffect> ExpandSpecializations(const ICDescriptor& desc)
{
    std::vector<ConcreteEffect> out;
    for (uint32_t d = 0; d < desc.effects.size(); d++) {
        const EffectDef& e = desc.effects[d];
        std::vector<std::optional<int64_t>> fixed(e.fields.size());
        // Odometer over the axes; the fallback choice is encoded as index
        // values.size().
        std::vector<size_t> choice(e.axes.size(), 0);
        while (true) {
            ConcreteEffect c;
            c.def = d;
            c.fixed.assign(e.fields.size(), std::nullopt);
            c.name = e.name;
            std::string suffix;
            for (size_t a = 0; a < e.axes.size(); a++) {
                const IcAxis& ax = e.axes[a];
                const std::string& fname = e.fields[ax.field].name;
                if (choice[a] < ax.values.size()) {
                    c.fixed[ax.field] = ax.values[choice[a]];
                    suffix += (suffix.empty() ? "" : ",") + fname + "=" + std::to_string(ax.values[choice[a]]);
                } else {
                    suffix += (suffix.empty() ? "" : ",") + fname + "=*";
                }
            }
            if (!suffix.empty())
                c.name += "[" + suffix + "]";
            c.payloadFields = static_cast<uint32_t>(std::count(c.fixed.begin(), c.fixed.end(), std::nullopt));
            out.push_back(std::move(c));
            size_t a = 0;
            for (; a < e.axes.size(); a++) {
                size_t limit = e.axes[a].values.size() + (e.axes[a].withFallback ? 1 : 0);
                if (++choice[a] < limit)
                    break;
                choice[a] = 0;
            }
            if (a == e.axes.size())
                break;
        }
    }
    return out;
}

BoxedValue IcEffectSink::Fire(uint32_t def, const IcState& state)
{
    TIERVM_ASSERT(!m_fired, "inline cache " + m_desc.name + ": an effect fired twice in one body run");
    TIERVM_ASSERT(def < m_desc.effects.size(), "inline cache " + m_desc.name + ": unknown effect");
    const EffectDef& e = m_desc.effects[def];
    for (size_t i = 0; i < e.fields.size(); i++) {
        const auto& r = e.fields[i].range;
        TIERVM_DEBUG_ASSERT(!r || (state.f[i] >= r->first && state.f[i] <= r->second),
            "inline cache " + m_desc.name + ": state field " + e.fields[i].name + " outside its annotated range");
    }
    m_fired = true;
    m_def = def;
    m_state = state;
    return e.apply(m_env, m_input, state);
}

void IcEffectSink::SetUncacheable()
{
    TIERVM_ASSERT(m_desc.uncacheableSupported, "inline cache " + m_desc.name + " does not support uncacheable results");
    m_cacheable = false;
}

IcKind::IcKind(ICDescriptor desc)
    : m_desc(std::move(desc))
{
    auto fail = [&](const std::string& msg) { throw BuildError("inline cache " + m_desc.name + ": " + msg); };
    if (!m_desc.body)
        fail("no body");
    if (m_desc.effects.empty())
        fail("no effects");
    for (const auto& e : m_desc.effects) {
        if (!e.apply)
            fail("effect " + e.name + " has no apply function");
        if (e.fields.size() > kMaxIcStateFields)
            fail("effect " + e.name + " has more than 8 state fields");
        std::vector<bool> seen(e.fields.size(), false);
        for (const auto& ax : e.axes) {
            if (ax.field >= e.fields.size())
                fail("axis on an unknown field of effect " + e.name);
            if (seen[ax.field])
                fail("field specialized twice in effect " + e.name);
            seen[ax.field] = true;
            if (e.fields[ax.field].kind == IcFieldKind::Value)
                fail("value fields cannot be specialized");
            if (ax.values.empty())
                fail("empty specialization axis in effect " + e.name);
        }
        for (const auto& f : e.fields) {
            if (f.range && f.range->first > f.range->second)
                fail("empty range on field " + f.name);
        }
    }
    m_effects = ExpandSpecializations(m_desc);
}

uint32_t IcKind::MatchEffect(uint32_t def, const IcState& state) const
{
    int best = -1;
    uint32_t bestFixed = 0;
    for (uint32_t i = 0; i < m_effects.size(); i++) {
        const ConcreteEffect& c = m_effects[i];
        if (c.def != def)
            continue;
        bool ok = true;
        uint32_t fixedCount = 0;
        for (size_t f = 0; f < c.fixed.size(); f++) {
            if (!c.fixed[f])
                continue;
            if (*c.fixed[f] != state.f[f]) {
                ok = false;
                break;
            }
            fixedCount++;
        }
        if (ok && (best < 0 || fixedCount > bestFixed)) {
            best = static_cast<int>(i);
            bestFixed = fixedCount;
        }
    }
    TIERVM_DEBUG_ASSERT(best >= 0, "inline cache " + m_desc.name + ": state value not covered by a fully specialized axis");
    return best < 0 ? 0 : static_cast<uint32_t>(best);
}

uint32_t IcKind::SmallestPayload() const
{
    uint32_t m = ~0u;
    for (const auto& c : m_effects)
        m = std::min(m, c.payloadFields);
    return m;
}

BoxedValue IcKind::RunBody(IcEnv env, const IcInput& input, std::optional<ICEntry>& entry, IcStats& stats) const
{
    stats.bodyRuns++;
    IcEffectSink sink(m_desc, env, input);
    BoxedValue out = m_desc.body(env, input, sink);
    entry.reset();
    if (sink.Fired() && sink.Cacheable())
        entry = ICEntry { input.key, MatchEffect(sink.EffectDefIndex(), sink.State()), sink.State() };
    return out;
}

BoxedValue IcKind::Apply(uint32_t effect, IcEnv env, const IcInput& input, const IcState& state) const
{
    const ConcreteEffect& c = m_effects[effect];
    IcState s = state;
    for (size_t f = 0; f < c.fixed.size(); f++) {
        if (c.fixed[f])
            s.f[f] = *c.fixed[f];
    }
    return m_desc.effects[c.def].apply(env, input, s);
}

void IcKind::InitSlot(InterpreterICSlot& slot) const
{
    slot.hasEntry = false;
    slot.effect = 0;
    slot.state = {};
    slot.cachedKey = m_desc.impossibleKey.value_or(0);
}

BoxedValue IcKind::InterpExecute(InterpreterICSlot& slot, IcEnv env, const IcInput& input, IcStats& stats, bool* updated) const
{
    if (updated)
        *updated = false;
    bool hit;
    if (m_desc.impossibleKey) {
        TIERVM_DEBUG_ASSERT(input.key != *m_desc.impossibleKey, "inline cache " + m_desc.name + ": runtime key equals the impossible key");
        hit = slot.cachedKey == input.key;
    } else {
        stats.existenceChecks++;
        hit = slot.hasEntry && slot.cachedKey == input.key;
    }
    if (hit) {
        stats.hits++;
        stats.effectSwitches++;
        return Apply(slot.effect, env, input, slot.state);
    }
    stats.misses++;
    std::optional<ICEntry> entry;
    BoxedValue out = RunBody(env, input, entry, stats);
    if (entry) {
        slot.cachedKey = entry->key;
        slot.effect = entry->effect;
        slot.state = entry->state;
        slot.hasEntry = true;
        if (updated)
            *updated = true;
    }
    return out;
}

} // namespace tiervm
