#include "tiervm/guest_types.h"

#include <cstring>
#include <limits>

namespace tiervm {

namespace {

unsigned ClassifyGuest(BoxedValue v) { return unsigned(v.Type()); }

Unboxed DecodeDouble(BoxedValue v) { return v.AsDouble(); }
BoxedValue EncodeDouble(const Unboxed& u) { return BoxedValue::Double(std::get<double>(u)); }
// tDoubleNotNaN keeps the raw bit pattern: the value is known not to be NaN.
BoxedValue EncodeDoubleRaw(const Unboxed& u) { return BoxedValue::FromWord(std::bit_cast<uint64_t>(std::get<double>(u))); }
Unboxed DecodeBool(BoxedValue v) { return v.AsBool(); }
BoxedValue EncodeBool(const Unboxed& u) { return BoxedValue::Bool(std::get<bool>(u)); }
Unboxed DecodeNil(BoxedValue) { return std::monostate {}; }
BoxedValue EncodeNil(const Unboxed&) { return BoxedValue::Nil(); }
BoxedValue EncodePureNaN(const Unboxed&) { return BoxedValue::FromWord(BoxedValue::kPureNaN); }
Unboxed DecodeHandle(BoxedValue v) { return v.HeapHandle(); }
BoxedValue EncodeString(const Unboxed& u) { return BoxedValue::Heap(HeapKind::String, std::get<uint32_t>(u)); }
BoxedValue EncodeFunction(const Unboxed& u) { return BoxedValue::Heap(HeapKind::Function, std::get<uint32_t>(u)); }
BoxedValue EncodeTable(const Unboxed& u) { return BoxedValue::Heap(HeapKind::Table, std::get<uint32_t>(u)); }

bool CheckNil(BoxedValue v) { return v.IsNil(); }
bool CheckBool(BoxedValue v) { return v.IsBool(); }
bool CheckDoubleNaN(BoxedValue v) { return v.IsDouble() && !v.IsDoubleNotNaN(); }
bool CheckDoubleNotNaN(BoxedValue v) { return v.IsDoubleNotNaN(); }
bool CheckDouble(BoxedValue v) { return v.IsDouble(); }
bool CheckString(BoxedValue v) { return v.IsString(); }
bool CheckFunction(BoxedValue v) { return v.IsFunction(); }
bool CheckTable(BoxedValue v) { return v.IsTable(); }
bool CheckHeapEntity(BoxedValue v) { return v.IsHeapEntity(); }

// Valid only when the value is already known to be a heap entity: skips the
// range compare and inspects the kind bits directly.
bool HeapHeaderIsTable(BoxedValue v) { return (v.word & 2) != 0; }
bool HeapHeaderIsString(BoxedValue v) { return (v.word & 3) == 0; }
// Valid only for doubles: a double is NaN iff it compares unordered.
bool DoubleIsNaN(BoxedValue v) { return std::isnan(v.AsDouble()); }

BoxingScheme BuildGuestScheme()
{
    using namespace tmask;
    BoxingScheme s;
    s.AddBaseType("tNil");
    s.AddBaseType("tBool");
    s.AddBaseType("tDoubleNaN");
    s.AddBaseType("tDoubleNotNaN");
    s.AddBaseType("tString");
    s.AddBaseType("tFunction");
    s.AddBaseType("tTable");
    s.DefineMask("tDouble", tDouble);
    s.DefineMask("tHeapEntity", tHeapEntity);
    s.SetClassifier(&ClassifyGuest);
    s.SetSampler(&GuestSamples);

    s.AddChecker({ "tNil", tNil, 15, &CheckNil, &DecodeNil, &EncodeNil });
    s.AddChecker({ "tBool", tBool, 15, &CheckBool, &DecodeBool, &EncodeBool });
    s.AddChecker({ "tDoubleNaN", tDoubleNaN, 30, &CheckDoubleNaN, &DecodeDouble, &EncodePureNaN });
    s.AddChecker({ "tDoubleNotNaN", tDoubleNotNaN, 10, &CheckDoubleNotNaN, &DecodeDouble, &EncodeDoubleRaw });
    s.AddChecker({ "tDouble", tDouble, 20, &CheckDouble, &DecodeDouble, &EncodeDouble });
    s.AddChecker({ "tString", tString, 25, &CheckString, &DecodeHandle, &EncodeString });
    s.AddChecker({ "tFunction", tFunction, 25, &CheckFunction, &DecodeHandle, &EncodeFunction });
    s.AddChecker({ "tTable", tTable, 25, &CheckTable, &DecodeHandle, &EncodeTable });
    s.AddChecker({ "tHeapEntity", tHeapEntity, 10, &CheckHeapEntity, &DecodeHandle, nullptr });

    s.AddRule({ "heap-entity-header-compare", tHeapEntity, tTable, 5, &HeapHeaderIsTable });
    s.AddRule({ "heap-entity-string-compare", tHeapEntity, tString, 5, &HeapHeaderIsString });
    s.AddRule({ "double-nan-self-compare", tDouble, tDoubleNaN, 8, &DoubleIsNaN });
    s.Finalize();
    return s;
}

void AddDistinct(std::vector<BoxedValue>& out, uint64_t w)
{
    for (auto v : out) {
        if (v.word == w)
            return;
    }
    out.push_back(BoxedValue::FromWord(w));
}

} // namespace

const BoxingScheme& GuestScheme()
{
    static const BoxingScheme scheme = BuildGuestScheme();
    return scheme;
}

std::vector<BoxedValue> GuestSamples(unsigned typeId)
{
    std::vector<BoxedValue> out;
    auto heapSamples = [&](HeapKind kind) {
        for (uint32_t h : { 0u, 1u, 2u, 3u, 7u, 100u, 4095u, 65535u, 1000000u, 0x7fffffffu, 0xfffffffeu, 0xffffffffu })
            AddDistinct(out, BoxedValue::Heap(kind, h).word);
        if (kind == HeapKind::Table) {
            // Both encodings of the table kind bits.
            for (uint32_t h : { 0u, 5u, 99u, 0xffffffffu })
                AddDistinct(out, BoxedValue::Heap(HeapKind::Table, h).word | 3);
        } else {
            for (uint32_t h : { 11u, 12345u, 0x10000000u, 0x80000000u })
                AddDistinct(out, BoxedValue::Heap(kind, h).word);
        }
    };
    switch (GuestType(typeId)) {
    case GuestType::Nil:
        for (uint64_t w = BoxedValue::kNilWord; w < BoxedValue::kNilWord + 8; w++)
            AddDistinct(out, w);
        for (uint64_t w = BoxedValue::kBoolBase - 8; w < BoxedValue::kBoolBase; w++)
            AddDistinct(out, w);
        break;
    case GuestType::Bool:
        for (uint64_t w = BoxedValue::kBoolBase; w < BoxedValue::kBoolBase + 8; w++)
            AddDistinct(out, w);
        for (uint64_t w = BoxedValue::kHeapBase - 8; w < BoxedValue::kHeapBase; w++)
            AddDistinct(out, w);
        break;
    case GuestType::DoubleNaN:
        AddDistinct(out, BoxedValue::kPureNaN);
        AddDistinct(out, BoxedValue::kDoubleLimit - 1);
        AddDistinct(out, 0x7ff0000000000001ULL);
        AddDistinct(out, 0x7fffffffffffffffULL);
        AddDistinct(out, 0xfff8000000000000ULL);
        AddDistinct(out, 0xfff0000000000001ULL);
        AddDistinct(out, 0xfffbfffeffffffffULL);
        AddDistinct(out, 0xfffb000000000000ULL);
        AddDistinct(out, 0x7ff4000000000000ULL);
        AddDistinct(out, 0xfff4000000000000ULL);
        for (uint64_t i = 1; out.size() < 16; i++)
            AddDistinct(out, 0x7ff8000000000000ULL + i);
        break;
    case GuestType::DoubleNotNaN:
        for (double d : { 0.0, -0.0, 1.0, -1.0, 1.5, 123.4, 1e300, -1e-300, 3.141592653589793, 6765.0 })
            AddDistinct(out, std::bit_cast<uint64_t>(d));
        AddDistinct(out, std::bit_cast<uint64_t>(std::numeric_limits<double>::infinity()));
        AddDistinct(out, std::bit_cast<uint64_t>(-std::numeric_limits<double>::infinity()));
        AddDistinct(out, std::bit_cast<uint64_t>(std::numeric_limits<double>::denorm_min()));
        AddDistinct(out, std::bit_cast<uint64_t>(std::numeric_limits<double>::max()));
        AddDistinct(out, std::bit_cast<uint64_t>(std::numeric_limits<double>::lowest()));
        AddDistinct(out, 0xffefffffffffffffULL);
        AddDistinct(out, 0x8000000000000001ULL);
        break;
    case GuestType::String: heapSamples(HeapKind::String); break;
    case GuestType::Function: heapSamples(HeapKind::Function); break;
    case GuestType::Table: heapSamples(HeapKind::Table); break;
    }
    return out;
}

} // namespace tiervm
