#pragma once

#include "tiervm/vm.h"

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tiervm {

// Lexical, syntax, or code generation error in guest source.
class SourceError : public std::runtime_error {
public:
    SourceError(int l, const std::string& msg) : SourceError(l, 0, msg) { }
    // A column of 0 means the position within the line is unknown.
    SourceError(int l, int c, const std::string& msg)
        : std::runtime_error("line " + std::to_string(l) + (c > 0 ? ":" + std::to_string(c) : std::string()) + ": " + msg)
        , line(l)
        , column(c)
    {
    }
    int line;
    int column;
};

// Compiles a chunk into protos owned by the engine and returns the main proto.
FunctionProto* CompileChunk(Engine& e, std::string_view source, const std::string& chunkName = "main");

// Registers print, clock, math, pcall, error, tostring, tonumber, type, select.
// Calling it again is a no-op.
void InstallStdlib(Engine& e);

// Compiles and runs a chunk with the stdlib installed. Throws SourceError or
// GuestError.
std::vector<BoxedValue> RunSource(Engine& e, std::string_view source);

// The main proto followed by every nested proto, depth first.
std::vector<const FunctionProto*> AllProtos(const FunctionProto* main);
std::string DumpProgramBytecode(Engine& e, const FunctionProto* main);
// Stencils of every (kind, variant) the program uses, in first-use order.
std::string DumpProgramTemplates(const FunctionProto* main);
std::vector<std::pair<uint32_t, uint32_t>> UsedVariants(const FunctionProto* main);

} // namespace tiervm
