#pragma once

#include "tiervm/boxed_value.h"
#include "tiervm/boxing_scheme.h"
#include "tiervm/type_mask.h"

namespace tiervm {

// Masks of the demo guest lattice.
namespace tmask {
inline constexpr TypeMask tNil = TypeMask::Single(unsigned(GuestType::Nil));
inline constexpr TypeMask tBool = TypeMask::Single(unsigned(GuestType::Bool));
inline constexpr TypeMask tDoubleNaN = TypeMask::Single(unsigned(GuestType::DoubleNaN));
inline constexpr TypeMask tDoubleNotNaN = TypeMask::Single(unsigned(GuestType::DoubleNotNaN));
inline constexpr TypeMask tString = TypeMask::Single(unsigned(GuestType::String));
inline constexpr TypeMask tFunction = TypeMask::Single(unsigned(GuestType::Function));
inline constexpr TypeMask tTable = TypeMask::Single(unsigned(GuestType::Table));
inline constexpr TypeMask tDouble = tDoubleNaN | tDoubleNotNaN;
inline constexpr TypeMask tHeapEntity = tString | tFunction | tTable;
inline constexpr TypeMask tTop = TypeMask::Top(kNumGuestTypes);
inline constexpr TypeMask tBottom = TypeMask::Bottom();
} // namespace tmask

// The finalized boxing scheme of the demo guest (NaN-boxing, seven base
// types, one heap-entity strength reduction rule plus a NaN-test rule).
const BoxingScheme& GuestScheme();

// Canonical encoder outputs plus boundary bit patterns for a base type;
// always at least 16 distinct words.
std::vector<BoxedValue> GuestSamples(unsigned typeId);

} // namespace tiervm
