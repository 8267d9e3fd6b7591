#include "tiervm/common.h"

namespace tiervm {

void FailAssertion(const char* expr, const char* file, int line, const std::string& msg)
{
    throw AssertionFailure(std::string(file) + ":" + std::to_string(line) + ": assertion `" + expr + "` failed: " + msg);
}

} // namespace tiervm
