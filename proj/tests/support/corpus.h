#pragma once

#include "tiervm/bytecode.h"
#include "tiervm/guest_bytecodes.h"
#include "tiervm/guest_lang.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace tiervm::testing {

struct CorpusFile {
    std::string name;
    std::string source;
};

inline std::vector<CorpusFile> LoadCorpus(const std::string& dir = TIERVM_CORPUS_DIR)
{
    std::vector<CorpusFile> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".lua")
            continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        out.push_back({ entry.path().filename().string(), ss.str() });
    }
    std::sort(out.begin(), out.end(), [](const CorpusFile& a, const CorpusFile& b) { return a.name < b.name; });
    return out;
}

inline std::string LoadCorpusFile(const std::string& name)
{
    std::ifstream in(std::string(TIERVM_CORPUS_DIR) + "/" + name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Re-emits every bytecode of s from its decoded operand record and reports
// whether the rebuilt stream is byte-identical, with the same constants.
inline bool RoundTripsThroughBuilder(const BytecodeRegistry& reg, const BytecodeStream& s, std::string* why = nullptr)
{
    BytecodeBuilder b(reg);
    std::vector<DecodedBytecode> decoded;
    for (uint32_t pos : s.offsets) {
        DecodedBytecode d = Decode(reg, s, pos);
        if (GetBytecodeKind(reg, s, pos) != d.kind) {
            if (why)
                *why = "GetBytecodeKind disagrees at " + std::to_string(pos);
            return false;
        }
        std::vector<OperandValue> ops = d.EmitOperands();
        uint32_t at = b.Emit(d.kind, std::span<const OperandValue>(ops));
        if (at != pos) {
            if (why)
                *why = "position moved at " + std::to_string(pos);
            return false;
        }
        DecodedBytecode again = Decode(reg, b.Peek(), at);
        if (again.variant != d.variant || again.EmitOperands() != ops) {
            if (why)
                *why = "operand record differs at " + std::to_string(pos);
            return false;
        }
        decoded.push_back(d);
    }
    for (const DecodedBytecode& d : decoded) {
        if (d.hasTarget)
            b.SetBranchTarget(d.pos, d.target);
    }
    BytecodeStream rebuilt = b.Finish();
    bool same = rebuilt.bytes == s.bytes && rebuilt.constants.size() == s.constants.size();
    for (size_t i = 0; same && i < s.constants.size(); i++)
        same = rebuilt.constants[i].word == s.constants[i].word;
    if (!same && why)
        *why = "rebuilt bytes or constants differ";
    return same;
}

} // namespace tiervm::testing
