#include <doctest.h>

#include "../support/corpus.h"
#include "tiervm/common.h"
#include "tiervm/guest_bytecodes.h"
#include "tiervm/guest_lang.h"
#include "tiervm/template_tier.h"

#include <algorithm>
#include <random>
#include <sstream>

using namespace tiervm;

namespace {

HoleExpr SlotTimes8(std::vector<AffineStep> extra = {})
{
    HoleExpr e;
    e.root = HoleRoot::OperandSlot;
    e.chain = { { AffineStep::Op::Mul, 8 } };
    e.chain.insert(e.chain.end(), extra.begin(), extra.end());
    return e;
}

constexpr RootRange kSlots { 0, kMaxSlotRoot, false };

Config Tier2Now()
{
    Config c;
    c.tierUpThreshold = 0;
    return c;
}

std::string RunWith(Engine& e, const std::string& src)
{
    std::ostringstream out;
    e.SetOutput(&out);
    RunSource(e, src);
    return out.str();
}

std::unique_ptr<CodeObject> CompileStream(BytecodeStream s, Counters& counters)
{
    CodeBlock cb;
    cb.Init(std::move(s));
    return Compile(cb, Config {}, counters);
}

BoxedValue ReturnX(IcEnv, const IcInput&, const IcState& s) { return BoxedValue::Double(double(s.f[0])); }

// Fires effect 0 with x = key.
BoxedValue KeyBody(IcEnv, const IcInput& in, IcEffectSink& sink)
{
    IcState s {};
    s.f[0] = int64_t(in.key);
    return sink.Fire(0, s);
}

// x in [0, 1000]; when `smallKeys` the values 0..3 are specialized away.
ICDescriptor KeyDescriptor(bool smallKeys)
{
    ICDescriptor d;
    d.name = smallKeys ? "keyed_small" : "keyed";
    d.body = &KeyBody;
    EffectDef e { "v", { { "x", IcFieldKind::Int, std::make_pair(int64_t(0), int64_t(1000)) } }, {}, &ReturnX };
    if (smallKeys)
        e.axes.push_back({ 0, { 0, 1, 2, 3 }, true });
    d.effects.push_back(e);
    return d;
}

IcSiteDesc SiteDescFor(const IcKind& kind)
{
    IcSiteDesc site;
    site.slabCapacity = kind.SmallestPayload();
    for (uint32_t e = 0; e < kind.Effects().size(); e++) {
        const ConcreteEffect& ce = kind.Effects()[e];
        const EffectDef& ed = kind.Desc().effects[ce.def];
        std::vector<HoleSlot> holes;
        for (uint32_t f = 0; f < ce.fixed.size(); f++) {
            if (ce.fixed[f])
                continue;
            HoleSlot h;
            h.expr.root = HoleRoot::IcStateField;
            h.expr.index = e;
            h.expr.field = f;
            h.decision = ProveRange(h.expr, { ed.fields[f].range->first, ed.fields[f].range->second, false });
            h.slot = uint32_t(holes.size());
            holes.push_back(h);
        }
        site.stateHoles.push_back(holes);
    }
    return site;
}

double Lookup(Tier2IcSite& site, uint64_t key, Counters& c)
{
    IcInput in;
    in.key = key;
    return site.Execute(nullptr, in, c).AsDouble();
}

} // namespace

TEST_CASE("range proofs of slot holes")
{
    HoleDecision times8 = ProveRange(SlotTimes8(), kSlots);
    CHECK(times8.mode == HoleMode::Adjusted);
    CHECK(times8.adjust == 1);
    CHECK(times8.lo == 0);
    CHECK(times8.hi == 8 * kMaxSlotRoot);

    HoleDecision plusOne = ProveRange(SlotTimes8({ { AffineStep::Op::Add, 1 } }), kSlots);
    CHECK(plusOne.mode == HoleMode::Direct);
    CHECK(plusOne.lo == 1);
    CHECK(plusOne.hi == 8 * kMaxSlotRoot + 1);

    HoleExpr wide;
    wide.root = HoleRoot::OperandSlot;
    wide.chain = { { AffineStep::Op::Mul, int64_t(1) << 12 } };
    CHECK(ProveRange(wide, kSlots).mode == HoleMode::RuntimeEvaluated);

    HoleExpr offset;
    offset.root = HoleRoot::SlowPathDataOffset;
    CHECK(ProveRange(offset, { 1, kMaxSlowPathDataOffset, false }).mode == HoleMode::Direct);

    HoleExpr word;
    word.root = HoleRoot::ConstantValue;
    CHECK(ProveRange(word, { 0, 0, true }).mode == HoleMode::RuntimeEvaluated);
}

TEST_CASE("hole soundness on random affine chains")
{
    std::mt19937_64 rng(17);
    int decided = 0;
    for (int i = 0; i < 1000; i++) {
        HoleExpr e;
        e.root = HoleRoot::OperandSlot;
        size_t steps = rng() % 4;
        for (size_t s = 0; s < steps; s++) {
            if (rng() % 2)
                e.chain.push_back({ AffineStep::Op::Mul, int64_t(rng() % 33) - 16 });
            else
                e.chain.push_back({ AffineStep::Op::Add, int64_t(rng() % 20001) - 10000 });
        }
        int64_t lo = int64_t(rng() % 1000);
        int64_t hi = lo + int64_t(rng() % 2000000);
        RootRange root { lo, hi, false };
        HoleDecision d = ProveRange(e, root);
        if (d.mode != HoleMode::RuntimeEvaluated)
            decided++;
        std::uniform_int_distribution<int64_t> pick(lo, hi);
        for (int k = 0; k < 100; k++) {
            int64_t r = pick(rng);
            uint64_t burned = PatchHole(e, d, r);
            if (d.mode != HoleMode::RuntimeEvaluated) {
                CHECK(int64_t(burned) >= kHoleTargetLo);
                CHECK(int64_t(burned) < kHoleTargetHi);
            }
            CHECK(ReadHole(e, d, burned) == e.Eval(r));
        }
    }
    CHECK(decided > 0);
}

TEST_CASE("Add LL stencil structure")
{
    Counters c;
    BytecodeBuilder b(GuestRegistry());
    b.Emit(Kinds().Add, { OperandValue::Local(1), OperandValue::Local(3), OperandValue::Local(2) });
    b.Emit(Kinds().Return, { OperandValue::Range(2, 1) });
    std::unique_ptr<CodeObject> co = CompileStream(b.Finish(), c);
    const Cell& cell = co->fastCells[0];
    const StencilTemplate& st = *cell.stencil;
    CHECK(st.name == "Add_LL");
    CHECK(st.fast.kind == CellHandlerKind::ArithGuarded);
    REQUIRE(st.fast.holes.size() == 3);
    CHECK(st.fast.holes[0].name == "lhs");
    CHECK(st.fast.holes[1].name == "rhs");
    CHECK(st.fast.holes[2].name == "output");
    for (const HoleSlot& h : st.fast.holes) {
        CHECK(h.decision.mode == HoleMode::Adjusted);
        CHECK(h.decision.adjust == 1);
    }
    REQUIRE(st.slow.has_value());
    CHECK(st.slow->kind == CellHandlerKind::SlowBridge);
    REQUIRE(st.slow->holes.size() == 1);
    CHECK(st.slow->holes[0].expr.root == HoleRoot::SlowPathDataOffset);
    CHECK(st.fallthroughEliminable);

    const uint64_t* payload = co->Payload(cell);
    CHECK(payload[0] == 9);
    CHECK(payload[1] == 25);
    CHECK(payload[2] == 17);

    DecodedBytecode d = OperandsFromPayload(*co, cell);
    CHECK(d.ops[0].ord == 1);
    CHECK(d.ops[1].ord == 3);
    CHECK(d.output == 2);

    REQUIRE(cell.slowCell >= 0);
    uint64_t offset = co->slowPayload[co->slowCells[cell.slowCell].payload];
    SlowPathRecord rec = co->Record(uint32_t(offset));
    CHECK(rec.ord == 0);
    CHECK(rec.bc.kind == Kinds().Add);
    CHECK(rec.fallthroughAddr == co->bcToCell[1] + 1);
}

TEST_CASE("jump and GetById stencils")
{
    const BytecodeRegistry& reg = GuestRegistry();
    const GuestKinds& k = Kinds();
    const StencilTemplate& jump = GetStencil(k.Jump, 0);
    CHECK_FALSE(jump.fallthroughEliminable);
    CHECK(jump.FindHole(HoleRoot::BranchTargetAddr) >= 0);

    bool sawGetById = false;
    for (uint32_t v = 0; v < reg.Def(k.GetById).variants.size(); v++) {
        const StencilTemplate& st = GetStencil(k.GetById, v);
        if (!st.supported)
            continue;
        sawGetById = true;
        REQUIRE(st.icSite.has_value());
        const IcKind& ic = GuestIcKinds()[st.icSite->descriptor];
        CHECK(st.icSite->slabCapacity == ic.SmallestPayload());
        CHECK(st.icSite->stateHoles.size() == ic.Effects().size());
        for (uint32_t e = 0; e < ic.Effects().size(); e++)
            CHECK(st.icSite->stateHoles[e].size() == ic.Effects()[e].payloadFields);
    }
    CHECK(sawGetById);

    CHECK_FALSE(GetStencil(k.Probe, 0).supported);
}

TEST_CASE("every payload slot is a patched hole or a branch slot")
{
    const BytecodeRegistry& reg = GuestRegistry();
    for (uint32_t kind = 0; kind < reg.NumKinds(); kind++) {
        for (uint32_t v = 0; v < reg.Def(kind).variants.size(); v++) {
            const StencilTemplate& st = GetStencil(kind, v);
            if (!st.supported)
                continue;
            std::vector<int> uses(st.fast.payloadSlots, 0);
            for (const HoleSlot& h : st.fast.holes)
                uses.at(h.slot)++;
            for (int u : uses)
                CHECK(u == 1);
            int branches = 0;
            for (const HoleSlot& h : st.fast.holes)
                branches += h.expr.root == HoleRoot::BranchTargetAddr;
            CHECK(branches == (reg.Def(kind).result.mayBranch ? 1 : 0));
        }
    }
}

TEST_CASE("compile pipeline exactness")
{
    Counters c;
    BytecodeBuilder b(GuestRegistry());
    b.Emit(Kinds().Add, { OperandValue::Local(0), OperandValue::Local(1), OperandValue::Local(2) });
    b.Emit(Kinds().Mul, { OperandValue::Local(2), OperandValue::Local(2), OperandValue::Local(2) });
    b.Emit(Kinds().Return, { OperandValue::Range(2, 1) });
    std::unique_ptr<CodeObject> co = CompileStream(b.Finish(), c);
    CHECK(co->report.predicted == co->report.emitted);
    CHECK(co->report.numBytecodes == 3);
    CHECK(co->report.pass3Visits == 3);
    CHECK(co->report.unresolvedBranchSlots == 0);
    CHECK(c.compileDecodes == 3);
    CHECK(co->bcToCell.size() == 3);

    Engine e;
    size_t compiled = 0;
    for (const testing::CorpusFile& p : testing::LoadCorpus()) {
        FunctionProto* main = CompileChunk(e, p.source, p.name);
        for (const FunctionProto* proto : AllProtos(main)) {
            Counters pc;
            std::unique_ptr<CodeObject> obj = Compile(proto->cb, Config {}, pc);
            const CompileReport& r = obj->report;
            CHECK(r.predicted == r.emitted);
            CHECK(r.pass3Visits == proto->cb.stream.NumBytecodes());
            CHECK(pc.compileDecodes == r.numBytecodes);
            CHECK(r.unresolvedBranchSlots == 0);
            for (uint32_t cell : obj->bcToCell)
                CHECK(cell < obj->fastCells.size());
            compiled++;
        }
    }
    CHECK(compiled > 25);
}

TEST_CASE("backward branches are patched in pass 4")
{
    Engine e;
    FunctionProto* main = CompileChunk(e, "local s = 0 for i = 1, 10 do s = s + i end return s");
    Counters c;
    std::unique_ptr<CodeObject> co = Compile(main->cb, Config {}, c);
    CHECK(co->report.branchSlotsPatched > 0);
    for (const Cell& cell : co->fastCells) {
        int h = cell.stencil->FindHole(HoleRoot::BranchTargetAddr);
        if (h < 0)
            continue;
        const HoleSlot& hole = cell.stencil->fast.holes[h];
        int64_t addr = ReadHole(hole.expr, hole.decision, co->Payload(cell)[hole.slot]);
        CHECK(addr >= 1);
        CHECK(addr <= int64_t(co->fastCells.size()));
    }
}

TEST_CASE("tier 2 executes without decoding")
{
    Engine e(Tier2Now());
    CHECK(RunWith(e, "local s = 0 for i = 1, 1000 do s = s + i * 2 end print(s)") == "1001000\n");
    CHECK(e.Stats().decodesPerformed == 0);
    CHECK(e.Stats().bytecodesExecuted > 3000);
    CHECK(e.Stats().tier2Bytecodes == e.Stats().bytecodesExecuted);
    CHECK(e.Stats().compiledBytecodes > 0);
    CHECK(e.Stats().emittedCellBytes > 0);
}

TEST_CASE("a NaN operand leaves the guarded add through the slow bridge")
{
    Engine e(Tier2Now());
    CHECK(RunWith(e, "local x = 0 / 0 local y = x + 1 print(y, y + 1 == y + 1)") == "nan\tfalse\n");
    CHECK(e.Stats().slowPathsTaken >= 2);
    CHECK(e.Stats().decodesPerformed == 0);

    Engine clean(Tier2Now());
    RunWith(clean, "local x = 1 local y = x + 1 print(y)");
    CHECK(clean.Stats().slowPathsTaken == 0);
}

TEST_CASE("inline slab then prepended stubs")
{
    IcKind kind(KeyDescriptor(false));
    IcSiteDesc desc = SiteDescFor(kind);
    CHECK(desc.slabCapacity == 1);
    Tier2IcSite site(&kind, &desc, 8);
    Counters c;
    CHECK(site.GetMode() == Tier2IcSite::Mode::MissOnly);
    CHECK(Lookup(site, 1, c) == 1);
    CHECK(Lookup(site, 1, c) == 1);
    CHECK(site.GetMode() == Tier2IcSite::Mode::InlineSlab);
    CHECK(Lookup(site, 2, c) == 2);
    CHECK(Lookup(site, 3, c) == 3);
    CHECK(site.GetMode() == Tier2IcSite::Mode::Chained);
    CHECK(site.SlabKey() == 1);
    CHECK(site.ChainKeys() == std::vector<uint64_t> { 3, 2 });
    CHECK(c.icMisses == 3);
    CHECK(c.icHits == 1);
    CHECK(c.icStubsCreated == 2);
    CHECK(Lookup(site, 2, c) == 2);
    CHECK(c.icHits == 2);
    CHECK(c.icMisses == 3);
}

TEST_CASE("monomorphic sites are served by the slab")
{
    IcKind kind(KeyDescriptor(false));
    IcSiteDesc desc = SiteDescFor(kind);
    Tier2IcSite site(&kind, &desc, 8);
    Counters c;
    for (int i = 0; i < 100; i++)
        CHECK(Lookup(site, 42, c) == 42);
    CHECK(site.ChainKeys().empty());
    CHECK(site.NumStubs() == 0);
    CHECK(c.icHits == 99);
}

TEST_CASE("only slab-eligible entries take the slab")
{
    IcKind kind(KeyDescriptor(true));
    IcSiteDesc desc = SiteDescFor(kind);
    CHECK(desc.slabCapacity == 0);
    Tier2IcSite site(&kind, &desc, 8);
    Counters c;
    CHECK(Lookup(site, 10, c) == 10);
    CHECK_FALSE(site.SlabOccupied());
    CHECK(Lookup(site, 2, c) == 2);
    CHECK(site.SlabOccupied());
    CHECK(site.SlabKey() == 2);
    CHECK(Lookup(site, 11, c) == 11);
    CHECK(site.ChainKeys() == std::vector<uint64_t> { 11, 10 });
    CHECK(Lookup(site, 10, c) == 10);
    CHECK(Lookup(site, 2, c) == 2);
    CHECK(c.icHits == 2);
}

TEST_CASE("megamorphic cap")
{
    IcKind kind(KeyDescriptor(false));
    IcSiteDesc desc = SiteDescFor(kind);
    Tier2IcSite site(&kind, &desc, 8);
    Counters c;
    for (uint64_t key = 1; key <= 30; key++)
        CHECK(Lookup(site, key, c) == double(key));
    CHECK(site.NumStubs() == 8);
    CHECK(site.GetMode() == Tier2IcSite::Mode::Megamorphic);
    uint64_t misses = c.icMisses;
    for (uint64_t key = 1; key <= 30; key++)
        CHECK(Lookup(site, key, c) == double(key));
    CHECK(c.icMisses == misses + 30);
    CHECK(site.NumStubs() == 8);
    CHECK(c.icStubsCreated == 8);
}

TEST_CASE("chain discipline on random miss sequences")
{
    std::mt19937_64 rng(23);
    for (int round = 0; round < 200; round++) {
        bool small = rng() % 2;
        IcKind kind(KeyDescriptor(small));
        IcSiteDesc desc = SiteDescFor(kind);
        Tier2IcSite site(&kind, &desc, 8);
        Counters c;
        std::vector<uint64_t> created;
        std::optional<uint64_t> slab;
        std::vector<uint64_t> seen;
        int n = 1 + int(rng() % 12);
        for (int i = 0; i < n; i++) {
            uint64_t key = rng() % 16;
            CHECK(Lookup(site, key, c) == double(key));
            bool known = std::find(seen.begin(), seen.end(), key) != seen.end();
            if (known || created.size() >= 8)
                continue;
            seen.push_back(key);
            bool eligible = !small || key <= 3;
            if (!slab && eligible)
                slab = key;
            else
                created.push_back(key);
        }
        std::vector<uint64_t> expected(created.rbegin(), created.rend());
        if (site.GetMode() != Tier2IcSite::Mode::Megamorphic)
            CHECK(site.ChainKeys() == expected);
        CHECK(site.SlabOccupied() == slab.has_value());
        if (slab)
            CHECK(site.SlabKey() == *slab);
    }
}

TEST_CASE("call IC modes")
{
    Engine direct(Tier2Now());
    CHECK(RunWith(direct, "local function f(x) return x end local s = 0 for i = 1, 100 do s = s + f(i) end print(s)") == "5050\n");
    CHECK(direct.Stats().callIcHits >= 99);

    Engine one(Tier2Now());
    RunWith(one, "local function f(x) return x end local s = 0 for i = 1, 100 do s = s + f(i) end");
    CHECK(one.Stats().callIcFunctionChecks == 1);
    CHECK(one.Stats().callIcTransitions == 0);

    Engine two(Tier2Now());
    std::string src = "local function mk() return function(x) return x end end\n"
                      "local a = mk() local b = mk() local s = 0\n"
                      "for i = 1, 100 do local g if i % 2 == 0 then g = a else g = b end s = s + g(i) end\n"
                      "return s";
    std::vector<BoxedValue> r = RunSource(two, src);
    REQUIRE(r.size() == 1);
    CHECK(r[0].AsDouble() == 5050);
    CHECK(two.Stats().callIcTransitions == 1);
    CHECK(two.Stats().callIcHits >= 98);

    Engine table(Tier2Now());
    try {
        RunSource(table, "local t = {} t()");
        FAIL("expected a guest error");
    } catch (const GuestError& ex) {
        CHECK(std::string(ex.what()) == "attempt to call a table value");
    }
}

TEST_CASE("OSR enters compiled code mid-invocation")
{
    Config cfg;
    cfg.tierUpThreshold = 1000;
    Engine e(cfg);
    uint64_t decodesInTier2 = 0;
    uint64_t atEnter = 0;
    bool inTier2 = false;
    e.SetTierObserver([&](TierEvent ev, const Counters& c) {
        if (ev == TierEvent::EnterTier2) {
            atEnter = c.decodesPerformed;
            inTier2 = true;
        } else if (inTier2) {
            decodesInTier2 += c.decodesPerformed - atEnter;
            inTier2 = false;
        }
    });
    CHECK(RunWith(e, "local s = 0 for i = 1, 100000 do s = s + i end print(s)") == "5000050000\n");
    CHECK(e.Stats().osrEntries == 1);
    CHECK(decodesInTier2 == 0);
    CHECK(e.Stats().tier2Bytecodes > 0);
    CHECK(e.Stats().decodesPerformed <= cfg.tierUpThreshold + 16);
}
