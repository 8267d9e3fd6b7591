#pragma once

#include "tiervm/boxed_value.h"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tiervm {

inline constexpr size_t kMaxIcStateFields = 8;

enum class IcFieldKind : uint8_t { Int, Bool, Value };

struct IcStateField {
    std::string name;
    IcFieldKind kind = IcFieldKind::Int;
    // Annotated range of an Int field; absent means unknown.
    std::optional<std::pair<int64_t, int64_t>> range;
};

// IcSpecializeVal: field takes one of `values`, or any value when the axis
// has a fallback.
struct IcAxis {
    uint32_t field = 0;
    std::vector<int64_t> values;
    bool withFallback = false;
};

struct IcState {
    std::array<int64_t, kMaxIcStateFields> f {};
    bool operator==(const IcState&) const = default;
};

struct IcInput {
    uint64_t key = 0;
    BoxedValue base;
    BoxedValue name;
    BoxedValue value;
};

// Services available to the idempotent body and to effects.
using IcEnv = void*;
using IcApplyFn = BoxedValue (*)(IcEnv, const IcInput&, const IcState&);

struct EffectDef {
    std::string name;
    std::vector<IcStateField> fields;
    std::vector<IcAxis> axes;
    IcApplyFn apply = nullptr;
};

class IcEffectSink;
using IcBodyFn = BoxedValue (*)(IcEnv, const IcInput&, IcEffectSink&);

struct ICDescriptor {
    std::string name;
    IcBodyFn body = nullptr;
    std::vector<EffectDef> effects;
    std::optional<uint64_t> impossibleKey;
    bool fuseIntoOpcode = false;
    bool uncacheableSupported = false;
};

// One effect after specialization expansion: fixed[i] holds the specialized
// value of field i, or nothing when the field stays in the state payload.
struct ConcreteEffect {
    uint32_t def = 0;
    std::string name;
    std::vector<std::optional<int64_t>> fixed;
    uint32_t payloadFields = 0;
};

std::vector<ConcreteEffect> ExpandSpecializations(const ICDescriptor& desc);

// Records the single effect fired by a body run.
class IcEffectSink {
public:
    IcEffectSink(const ICDescriptor& desc, IcEnv env, const IcInput& input) : m_desc(desc), m_env(env), m_input(input) { }

    // Applies effect `def` with `state` and remembers it for caching.
    BoxedValue Fire(uint32_t def, const IcState& state);
    void SetUncacheable();

    bool Fired() const { return m_fired; }
    bool Cacheable() const { return m_cacheable; }
    uint32_t EffectDefIndex() const { return m_def; }
    const IcState& State() const { return m_state; }

private:
    const ICDescriptor& m_desc;
    IcEnv m_env;
    const IcInput& m_input;
    bool m_fired = false;
    bool m_cacheable = true;
    uint32_t m_def = 0;
    IcState m_state {};
};

struct ICEntry {
    uint64_t key = 0;
    uint32_t effect = 0;
    IcState state {};
    bool operator==(const ICEntry&) const = default;
};

// Monomorphic interpreter cache slot.
struct InterpreterICSlot {
    uint64_t cachedKey = 0;
    bool hasEntry = false;
    uint32_t effect = 0;
    IcState state {};
};

struct IcStats {
    uint64_t hits = 0;
    uint64_t misses = 0;
    uint64_t existenceChecks = 0;
    uint64_t effectSwitches = 0;
    uint64_t bodyRuns = 0;
};

// A registered descriptor together with its expanded effect table.
class IcKind {
public:
    explicit IcKind(ICDescriptor desc);

    const ICDescriptor& Desc() const { return m_desc; }
    const std::vector<ConcreteEffect>& Effects() const { return m_effects; }
    // Concrete effect matching a fired effect and its state.
    uint32_t MatchEffect(uint32_t def, const IcState& state) const;
    // Smallest payload among the concrete effects.
    uint32_t SmallestPayload() const;

    // Runs the body; on return `entry` describes the fired effect when it is
    // cacheable.
    BoxedValue RunBody(IcEnv env, const IcInput& input, std::optional<ICEntry>& entry, IcStats& stats) const;
    BoxedValue Apply(uint32_t effect, IcEnv env, const IcInput& input, const IcState& state) const;

    void InitSlot(InterpreterICSlot& slot) const;
    // Interpreter execution through a monomorphic slot. Sets `updated` when
    // the slot was (re)populated.
    BoxedValue InterpExecute(InterpreterICSlot& slot, IcEnv env, const IcInput& input, IcStats& stats, bool* updated = nullptr) const;

private:
    ICDescriptor m_desc;
    std::vector<ConcreteEffect> m_effects;
};

} // namespace tiervm
