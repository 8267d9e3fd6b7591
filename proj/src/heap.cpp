#include "tiervm/heap.h"

#include "tiervm/common.h"

#include <cmath>

namespace tiervm {

namespace {

// Numeric keys are normalized so that 0 and -0 address the same entry.
uint64_t KeyWord(BoxedValue key)
{
    if (key.IsDouble() && key.AsDouble() == 0)
        return BoxedValue::Double(0).word;
    return key.word;
}

} // namespace

Heap::Heap()
{
    auto root = std::make_unique<HiddenClass>();
    root->id = 1;
    m_classes.push_back(std::move(root));
}

uint32_t Heap::Allocate(std::unique_ptr<HeapEntity> e)
{
    m_entities.push_back(std::move(e));
    return static_cast<uint32_t>(m_entities.size() - 1);
}

BoxedValue Heap::Intern(std::string_view s)
{
    auto it = m_interned.find(std::string(s));
    if (it != m_interned.end())
        return BoxedValue::Heap(HeapKind::String, it->second);
    uint32_t h = Allocate(std::make_unique<StringObject>(std::string(s)));
    m_interned.emplace(std::string(s), h);
    return BoxedValue::Heap(HeapKind::String, h);
}

BoxedValue Heap::NewTable()
{
    auto t = std::make_unique<TableObject>();
    t->hiddenClass = EmptyClass();
    return BoxedValue::Heap(HeapKind::Table, Allocate(std::move(t)));
}

BoxedValue Heap::NewClosure(FunctionProto* proto)
{
    auto f = std::make_unique<FunctionObject>();
    f->proto = proto;
    return BoxedValue::Heap(HeapKind::Function, Allocate(std::move(f)));
}

BoxedValue Heap::NewLibFunction(int32_t libId)
{
    auto f = std::make_unique<FunctionObject>();
    f->libId = libId;
    return BoxedValue::Heap(HeapKind::Function, Allocate(std::move(f)));
}

Upvalue* Heap::NewUpvalue()
{
    m_upvalues.push_back(std::make_unique<Upvalue>());
    return m_upvalues.back().get();
}

const std::string& Heap::Str(BoxedValue v) const
{
    TIERVM_DEBUG_ASSERT(v.IsString(), "not a string");
    return static_cast<StringObject*>(m_entities[v.HeapHandle()].get())->str;
}

TableObject* Heap::Table(BoxedValue v) const
{
    TIERVM_DEBUG_ASSERT(v.IsTable(), "not a table");
    return static_cast<TableObject*>(m_entities[v.HeapHandle()].get());
}

FunctionObject* Heap::Function(BoxedValue v) const
{
    TIERVM_DEBUG_ASSERT(v.IsFunction(), "not a function");
    return static_cast<FunctionObject*>(m_entities[v.HeapHandle()].get());
}

HiddenClass* Heap::Transition(HiddenClass* from, uint32_t name)
{
    auto it = from->transitions.find(name);
    if (it != from->transitions.end())
        return it->second;
    auto hc = std::make_unique<HiddenClass>();
    hc->id = static_cast<uint32_t>(m_classes.size() + 1);
    hc->parent = from;
    hc->properties = from->properties;
    hc->slotOf = from->slotOf;
    hc->slotOf.emplace(name, static_cast<uint32_t>(hc->properties.size()));
    hc->properties.push_back(name);
    HiddenClass* raw = hc.get();
    m_classes.push_back(std::move(hc));
    from->transitions.emplace(name, raw);
    return raw;
}

BoxedValue Heap::GetProperty(TableObject* t, uint32_t name) const
{
    int64_t slot = t->hiddenClass->Lookup(name);
    return slot < 0 ? BoxedValue::Nil() : t->GetSlot(uint32_t(slot));
}

void Heap::PutProperty(TableObject* t, uint32_t name, BoxedValue v)
{
    int64_t slot = t->hiddenClass->Lookup(name);
    if (slot >= 0) {
        t->SetSlot(uint32_t(slot), v);
        return;
    }
    t->hiddenClass = Transition(t->hiddenClass, name);
    uint32_t s = static_cast<uint32_t>(t->hiddenClass->properties.size() - 1);
    if (s >= kInlineSlots)
        t->overflow.push_back(v);
    else
        t->inlineSlots[s] = v;
}

BoxedValue Heap::GetByVal(TableObject* t, BoxedValue key) const
{
    if (key.IsString())
        return GetProperty(t, key.HeapHandle());
    auto it = t->other.find(KeyWord(key));
    return it == t->other.end() ? BoxedValue::Nil() : it->second;
}

bool Heap::SetByVal(TableObject* t, BoxedValue key, BoxedValue v)
{
    if (key.IsNil() || (key.IsDouble() && std::isnan(key.AsDouble())))
        return false;
    if (key.IsString()) {
        PutProperty(t, key.HeapHandle(), v);
        return true;
    }
    if (v.IsNil())
        t->other.erase(KeyWord(key));
    else
        t->other[KeyWord(key)] = v;
    return true;
}

double Heap::Length(TableObject* t) const
{
    auto present = [&](double i) { return i < 1 || t->other.count(BoxedValue::Double(i).word) != 0; };
    double n = t->lengthHint;
    while (n > 0 && !present(n))
        n -= 1;
    while (present(n + 1))
        n += 1;
    t->lengthHint = n;
    return n;
}

} // namespace tiervm
