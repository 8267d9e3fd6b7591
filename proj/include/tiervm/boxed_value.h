#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace tiervm {

// Base type ids of the guest lattice. Dense, declaration order.
enum class GuestType : uint8_t {
    Nil = 0,
    Bool = 1,
    DoubleNaN = 2,
    DoubleNotNaN = 3,
    String = 4,
    Function = 5,
    Table = 6,
};
inline constexpr unsigned kNumGuestTypes = 7;

// Kind tag stored in the low two bits of a heap-entity word.
enum class HeapKind : uint8_t { String = 0, Function = 1, Table = 2 };

// 64-bit NaN-boxed guest value.
//
// Word layout:
//   [0, 0xFFFBFFFF00000000)                     IEEE-754 double (NaNs canonical)
//   [0xFFFBFFFF00000000, 0xFFFC000000000000)    nil
//   [0xFFFC000000000000, 0xFFFD000000000000)    boolean, bit 0 is the value
//   [0xFFFD000000000000, 2^64)                  heap entity: bits 2..33 handle,
//                                                bits 0..1 kind (1x = table)
// Every word outside the double range is a NaN when viewed as a double.
struct BoxedValue {
    uint64_t word = kNilWord;

    static constexpr uint64_t kDoubleLimit = 0xFFFBFFFF00000000ULL;
    static constexpr uint64_t kNilWord = 0xFFFBFFFF00000000ULL;
    static constexpr uint64_t kBoolBase = 0xFFFC000000000000ULL;
    static constexpr uint64_t kHeapBase = 0xFFFD000000000000ULL;
    static constexpr uint64_t kPureNaN = 0x7ff8000000000000ULL;

    constexpr bool operator==(const BoxedValue&) const = default;

    static constexpr BoxedValue FromWord(uint64_t w) { return BoxedValue { w }; }
    static constexpr BoxedValue Nil() { return BoxedValue { kNilWord }; }
    static constexpr BoxedValue Bool(bool b) { return BoxedValue { kBoolBase | (b ? 1u : 0u) }; }
    static BoxedValue Double(double d)
    {
        if (std::isnan(d))
            return BoxedValue { kPureNaN };
        return BoxedValue { std::bit_cast<uint64_t>(d) };
    }
    static constexpr BoxedValue Heap(HeapKind kind, uint32_t handle)
    {
        return BoxedValue { kHeapBase | (uint64_t(handle) << 2) | uint64_t(kind) };
    }

    constexpr bool IsDouble() const { return word < kDoubleLimit; }
    bool IsDoubleNotNaN() const { return !std::isnan(std::bit_cast<double>(word)); }
    constexpr bool IsNil() const { return word >= kNilWord && word < kBoolBase; }
    constexpr bool IsBool() const { return word >= kBoolBase && word < kHeapBase; }
    constexpr bool IsHeapEntity() const { return word >= kHeapBase; }
    constexpr bool IsString() const { return IsHeapEntity() && (word & 3) == 0; }
    constexpr bool IsFunction() const { return IsHeapEntity() && (word & 3) == 1; }
    constexpr bool IsTable() const { return IsHeapEntity() && (word & 2) != 0; }

    double AsDouble() const { return std::bit_cast<double>(word); }
    constexpr bool AsBool() const { return (word & 1) != 0; }
    constexpr uint32_t HeapHandle() const { return static_cast<uint32_t>(word >> 2); }
    constexpr HeapKind GetHeapKind() const
    {
        return (word & 2) ? HeapKind::Table : static_cast<HeapKind>(word & 1);
    }

    // Lua truthiness: only nil and false are falsy.
    constexpr bool IsTruthy() const { return !IsNil() && word != kBoolBase; }

    GuestType Type() const
    {
        if (word < kDoubleLimit)
            return std::isnan(AsDouble()) ? GuestType::DoubleNaN : GuestType::DoubleNotNaN;
        if (word < kBoolBase)
            return GuestType::Nil;
        if (word < kHeapBase)
            return GuestType::Bool;
        switch (GetHeapKind()) {
        case HeapKind::String: return GuestType::String;
        case HeapKind::Function: return GuestType::Function;
        case HeapKind::Table: return GuestType::Table;
        }
        return GuestType::Table;
    }
};

static_assert(sizeof(BoxedValue) == 8);

} // namespace tiervm
