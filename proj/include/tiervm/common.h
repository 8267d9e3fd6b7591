#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tiervm {

#ifdef TIERVM_DEBUG_CHECKS
inline constexpr bool kDebugChecks = true;
#else
inline constexpr bool kDebugChecks = false;
#endif

// Raised when an internal contract is violated. Thrown rather than aborting so
// that tests can observe contract checks.
class AssertionFailure : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Raised for malformed declarative definitions (bytecodes, IC descriptors,
// boxing schemes).
class BuildError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[noreturn]] void FailAssertion(const char* expr, const char* file, int line, const std::string& msg);

} // namespace tiervm

#define TIERVM_ASSERT(cond, msg)                                          \
    do {                                                                  \
        if (!(cond)) [[unlikely]]                                         \
            ::tiervm::FailAssertion(#cond, __FILE__, __LINE__, (msg));    \
    } while (0)

#ifdef TIERVM_DEBUG_CHECKS
#define TIERVM_DEBUG_ASSERT(cond, msg) TIERVM_ASSERT(cond, msg)
#else
#define TIERVM_DEBUG_ASSERT(cond, msg) do { } while (0)
#endif
