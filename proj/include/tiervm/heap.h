#pragma once

#include "tiervm/boxed_value.h"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tiervm {

class Engine;
struct FunctionProto;

struct HeapEntity {
    explicit HeapEntity(HeapKind k) : kind(k) { }
    virtual ~HeapEntity() = default;
    HeapKind kind;
};

struct StringObject : HeapEntity {
    explicit StringObject(std::string s) : HeapEntity(HeapKind::String), str(std::move(s)) { }
    std::string str;
};

// Shape of a table: the ordered list of string-keyed properties. Objects
// created by the same insertion order share a hidden class.
struct HiddenClass {
    uint32_t id = 0;
    HiddenClass* parent = nullptr;
    // Property name handles in slot order.
    std::vector<uint32_t> properties;
    std::unordered_map<uint32_t, uint32_t> slotOf;
    std::unordered_map<uint32_t, HiddenClass*> transitions;

    int64_t Lookup(uint32_t name) const
    {
        auto it = slotOf.find(name);
        return it == slotOf.end() ? -1 : int64_t(it->second);
    }
};

inline constexpr uint32_t kInlineSlots = 4;

struct TableObject : HeapEntity {
    TableObject() : HeapEntity(HeapKind::Table) { }
    HiddenClass* hiddenClass = nullptr;
    std::array<BoxedValue, kInlineSlots> inlineSlots {};
    std::vector<BoxedValue> overflow;
    // Entries with non-string keys, keyed by the normalized key word.
    std::unordered_map<uint64_t, BoxedValue> other;
    mutable double lengthHint = 0;

    BoxedValue GetSlot(uint32_t slot) const { return slot < kInlineSlots ? inlineSlots[slot] : overflow[slot - kInlineSlots]; }
    void SetSlot(uint32_t slot, BoxedValue v)
    {
        if (slot < kInlineSlots)
            inlineSlots[slot] = v;
        else
            overflow[slot - kInlineSlots] = v;
    }
};

struct Upvalue {
    bool open = true;
    uint32_t slot = 0;
    BoxedValue closed;
};

struct LibCall;
struct LibAction;
using LibFn = LibAction (*)(Engine&, LibCall&);

struct FunctionObject : HeapEntity {
    FunctionObject() : HeapEntity(HeapKind::Function) { }
    FunctionProto* proto = nullptr;
    // Index of the library function when proto is null.
    int32_t libId = -1;
    std::vector<Upvalue*> upvalues;
};

class Heap {
public:
    Heap();

    BoxedValue Intern(std::string_view s);
    BoxedValue NewTable();
    BoxedValue NewClosure(FunctionProto* proto);
    BoxedValue NewLibFunction(int32_t libId);
    Upvalue* NewUpvalue();

    const std::string& Str(BoxedValue v) const;
    TableObject* Table(BoxedValue v) const;
    FunctionObject* Function(BoxedValue v) const;
    size_t NumEntities() const { return m_entities.size(); }

    HiddenClass* EmptyClass() const { return m_classes.front().get(); }
    HiddenClass* ClassById(uint32_t id) const { return m_classes.at(id - 1).get(); }
    HiddenClass* Transition(HiddenClass* from, uint32_t name);
    size_t NumHiddenClasses() const { return m_classes.size(); }

    // String-keyed property access through the hidden class.
    BoxedValue GetProperty(TableObject* t, uint32_t name) const;
    void PutProperty(TableObject* t, uint32_t name, BoxedValue v);

    // Generic keyed access. Returns false for an invalid key (nil or NaN).
    BoxedValue GetByVal(TableObject* t, BoxedValue key) const;
    bool SetByVal(TableObject* t, BoxedValue key, BoxedValue v);
    // Border of the array part: the largest n with t[1..n] all non-nil.
    double Length(TableObject* t) const;

private:
    uint32_t Allocate(std::unique_ptr<HeapEntity> e);

    std::vector<std::unique_ptr<HeapEntity>> m_entities;
    std::unordered_map<std::string, uint32_t> m_interned;
    std::vector<std::unique_ptr<HiddenClass>> m_classes;
    std::vector<std::unique_ptr<Upvalue>> m_upvalues;
};

} // namespace tiervm
