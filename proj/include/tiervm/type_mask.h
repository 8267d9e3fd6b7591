#pragma once

#include <bit>
#include <cstdint>

namespace tiervm {

// A set of base types, one bit per base type id. Complement is taken relative
// to a lattice top that the caller supplies (the set of declared base types).
class TypeMask {
public:
    constexpr TypeMask() = default;
    constexpr explicit TypeMask(uint64_t bits) : m_bits(bits) { }

    static constexpr TypeMask Bottom() { return TypeMask(0); }
    static constexpr TypeMask Single(unsigned id) { return TypeMask(uint64_t(1) << id); }
    // Top of a lattice with `numTypes` dense base types.
    static constexpr TypeMask Top(unsigned numTypes)
    {
        return TypeMask(numTypes >= 64 ? ~uint64_t(0) : (uint64_t(1) << numTypes) - 1);
    }

    constexpr uint64_t Bits() const { return m_bits; }
    constexpr bool IsBottom() const { return m_bits == 0; }
    constexpr bool Contains(unsigned id) const { return (m_bits >> id) & 1; }
    constexpr unsigned Count() const { return static_cast<unsigned>(std::popcount(m_bits)); }

    constexpr TypeMask Union(TypeMask o) const { return TypeMask(m_bits | o.m_bits); }
    constexpr TypeMask Intersect(TypeMask o) const { return TypeMask(m_bits & o.m_bits); }
    constexpr TypeMask Minus(TypeMask o) const { return TypeMask(m_bits & ~o.m_bits); }
    constexpr TypeMask Complement(TypeMask top) const { return TypeMask(top.m_bits & ~m_bits); }
    constexpr bool SubsetOf(TypeMask o) const { return (m_bits & ~o.m_bits) == 0; }
    constexpr bool Disjoint(TypeMask o) const { return (m_bits & o.m_bits) == 0; }

    constexpr TypeMask operator|(TypeMask o) const { return Union(o); }
    constexpr TypeMask operator&(TypeMask o) const { return Intersect(o); }
    constexpr bool operator==(const TypeMask&) const = default;

    // Iterate the ids of the base types in the mask, lowest first.
    template<typename Fn>
    constexpr void ForEach(Fn&& fn) const
    {
        uint64_t b = m_bits;
        while (b) {
            unsigned id = static_cast<unsigned>(std::countr_zero(b));
            fn(id);
            b &= b - 1;
        }
    }

private:
    uint64_t m_bits = 0;
};

} // namespace tiervm
