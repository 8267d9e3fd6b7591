#include "../support/corpus.h"
#include "../support/random_sem.h"
#include "tiervm/common.h"
#include "tiervm/guest_bytecodes.h"
#include "tiervm/guest_lang.h"
#include "tiervm/guest_semantics.h"
#include "tiervm/guest_types.h"
#include "tiervm/harness.h"
#include "tiervm/template_tier.h"
#include "tiervm/type_opt.h"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>

using namespace tiervm;
using namespace tiervm::tmask;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void Require(bool ok, const std::string& what)
    {
        if (ok || !pass)
            return;
        pass = false;
        detail = what;
    }
};

std::string Run(Engine& e, const std::string& src)
{
    std::ostringstream out;
    e.SetOutput(&out);
    RunSource(e, src);
    return out.str();
}

Outcome DifferentialEquivalence()
{
    Outcome o;
    size_t programs = 0;
    for (const testing::CorpusFile& f : testing::LoadCorpus()) {
        programs++;
        RunConfig interp;
        interp.interpreterOnly = true;
        RunResult base = RunProgram(f.source, interp);
        for (uint64_t t : { uint64_t(0), uint64_t(1), uint64_t(100) }) {
            RunConfig rc;
            rc.tierUpThreshold = t;
            RunResult tiered = RunProgram(f.source, rc);
            o.Require(tiered.output == base.output, f.name + " differs at threshold " + std::to_string(t));
        }
    }
    o.Require(programs >= 20, "only " + std::to_string(programs) + " corpus programs");
    if (o.pass)
        o.detail = std::to_string(programs) + " programs x thresholds {0, 1, 100}";
    return o;
}

Outcome CheckOptimizerOracle()
{
    Outcome o;
    const BoxingScheme& s = GuestScheme();
    std::mt19937_64 rng(4242);
    size_t functions = 0;
    size_t comparisons = 0;
    while (functions < 200) {
        unsigned n = 1 + unsigned(rng() % 3);
        sem::SemFunction f = testing::RandomSemFunction(rng, n, 1 + unsigned(rng() % 8));
        std::vector<TypeMask> masks;
        for (unsigned i = 0; i < n; i++)
            masks.push_back(testing::RandomMask(rng));
        sem::TypePredicate p = sem::TypePredicate::Conjunctive(masks);
        if (rng() % 3 == 0)
            p = sem::TypePredicate::AndNot(p, unsigned(rng() % n), testing::RandomMask(rng));
        if (p.Empty())
            continue;
        functions++;
        sem::SemFunction g = sem::OptimizeChecks(f, p, s);
        o.Require(sem::Verify(g).empty(), "optimized function fails verification");
        for (const sem::TypeTuple& tuple : p.Tuples()) {
            for (const std::vector<BoxedValue>& args : testing::SampleArgs(tuple, n, 3)) {
                comparisons++;
                o.Require(sem::Interpret(g, args, s) == sem::Interpret(f, args, s), "optimized output differs on function " + std::to_string(functions));
            }
        }
    }

    sem::SemFunction add = ArithSemantics(sem::PrimKind::Add, "Add");
    std::vector<TypeMask> dd { tDouble, tDouble };
    sem::OptimizeStats st;
    sem::SemFunction fast = sem::OptimizeChecks(add, sem::TypePredicate::Conjunctive(dd), s, &st);
    const char* golden = "function Add(v0, v1) entry=entry\n"
                         "entry: %0 = unbox v0 tDouble; %1 = unbox v1 tDouble; %2 = add %0 %1; %3 = box tDouble %2; return %3\n";
    o.Require(sem::Dump(fast, s) == golden, "Add fast path differs from the golden dump");
    o.Require(st.checksFolded == 2, "Add fast path folded " + std::to_string(st.checksFolded) + " checks");
    if (o.pass)
        o.detail = "200 functions, " + std::to_string(comparisons) + " comparisons, Add golden";
    return o;
}

Outcome CheckStrengthReduction()
{
    Outcome o;
    const BoxingScheme& s = GuestScheme();
    sem::SemBuilder b("tableTest", 1);
    sem::BlockId entry = b.NewBlock("entry");
    sem::BlockId yes = b.NewBlock("is_table");
    sem::BlockId no = b.NewBlock("other");
    b.SetInsertPoint(entry);
    b.CondBr(b.TypeCheck(0, tTable), yes, no);
    b.SetInsertPoint(yes);
    b.ReturnValue(sem::ValueRef { true, 0 });
    b.SetInsertPoint(no);
    b.EnterSlowPath(1);
    sem::SemFunction f = b.Finish();

    std::vector<TypeMask> heap { tHeapEntity };
    sem::OptimizeStats st;
    sem::SemFunction g = sem::OptimizeChecks(f, sem::TypePredicate::Conjunctive(heap), s, &st);
    o.Require(st.checksReduced == 1, "expected one reduced check, got " + std::to_string(st.checksReduced));
    const sem::Block* e = g.Find(entry);
    o.Require(e && !e->instrs.empty() && e->instrs[0].lowered.has_value(), "entry check was not lowered");
    if (o.pass)
        o.Require(s.Candidates()[e->instrs[0].lowered->candidate].name == "heap-entity-header-compare", "lowered to the wrong checker");
    size_t samples = 0;
    for (unsigned t : { unsigned(GuestType::String), unsigned(GuestType::Function), unsigned(GuestType::Table) }) {
        for (BoxedValue v : s.Samples(t)) {
            BoxedValue args[] = { v };
            samples++;
            o.Require(sem::Interpret(g, args, s) == sem::Interpret(f, args, s), "reduced check disagrees on a heap entity");
        }
    }
    if (o.pass)
        o.detail = "header-compare rule substituted, " + std::to_string(samples) + " heap-entity samples";
    return o;
}

// Random property traffic at the IC level, against a body-only oracle, and
// the same traffic as a guest program with and without caching.
Outcome CheckGenericIc()
{
    Outcome o;
    constexpr int kOps = 10000;
    constexpr int kObjects = 12;
    constexpr int kSites = 16;
    static const char* const kNames[] = { "a", "b", "c", "d", "e", "f" };
    const IcKind& get = GuestIcKinds()[kIcGetById];
    const IcKind& set = GuestIcKinds()[kIcSetById];

    Engine cached;
    Engine oracle;
    std::vector<BoxedValue> cachedObjs;
    std::vector<BoxedValue> oracleObjs;
    for (int i = 0; i < kObjects; i++) {
        cachedObjs.push_back(cached.GetHeap().NewTable());
        oracleObjs.push_back(oracle.GetHeap().NewTable());
    }
    std::vector<InterpreterICSlot> getSlots(kSites);
    std::vector<InterpreterICSlot> setSlots(kSites);
    for (InterpreterICSlot& s : getSlots)
        get.InitSlot(s);
    for (InterpreterICSlot& s : setSlots)
        set.InitSlot(s);
    IcStats cachedStats;
    IcStats oracleStats;
    std::mt19937_64 rng(99);
    std::ostringstream program;
    program << "local p = print\nlocal o = {}\nfor i = 1, " << kObjects << " do o[i] = {} end\n";
    for (int op = 0; op < kOps && o.pass; op++) {
        int obj = int(rng() % kObjects);
        int site = int(rng() % kSites);
        // The property name is a constant of the site; only the shape varies.
        const char* name = kNames[site % 6];
        bool isSet = rng() % 3 == 0;
        bool fresh = rng() % 200 == 0;
        if (fresh) {
            cachedObjs[obj] = cached.GetHeap().NewTable();
            oracleObjs[obj] = oracle.GetHeap().NewTable();
            program << "o[" << obj + 1 << "] = {}\n";
        }
        BoxedValue cb = cachedObjs[obj];
        BoxedValue ob = oracleObjs[obj];
        IcInput ci { cached.GetHeap().Table(cb)->hiddenClass->id, cb, cached.Str(name), BoxedValue::Double(op) };
        IcInput oi { oracle.GetHeap().Table(ob)->hiddenClass->id, ob, oracle.Str(name), BoxedValue::Double(op) };
        const IcKind& kind = isSet ? set : get;
        InterpreterICSlot& slot = isSet ? setSlots[site] : getSlots[site];
        std::optional<ICEntry> expected;
        BoxedValue want = kind.RunBody(&oracle, oi, expected, oracleStats);
        InterpreterICSlot before = slot;
        BoxedValue got = kind.InterpExecute(slot, &cached, ci, cachedStats);
        o.Require(got.word == want.word, "cached result differs at op " + std::to_string(op));
        if (expected) {
            o.Require(slot.hasEntry && slot.cachedKey == expected->key && slot.effect == expected->effect && slot.state == expected->state,
                "slot does not hold the latest entry at op " + std::to_string(op));
        } else {
            o.Require(slot.cachedKey == before.cachedKey && slot.hasEntry == before.hasEntry, "uncacheable op changed the slot");
        }
        if (isSet)
            program << "o[" << obj + 1 << "]." << name << " = " << op << "\n";
        else
            program << "p(o[" << obj + 1 << "]." << name << ")\n";
    }
    o.Require(cachedStats.hits > 0, "no IC hits");

    // Guest level: a loop re-runs the same sites so quickened opcodes get hits.
    std::ostringstream loop;
    loop << "local p = print\nlocal o = {}\nfor i = 1, 8 do o[i] = {} end\nlocal s = 0\n"
         << "for r = 1, 1250 do\n"
         << "  local x = o[r % 8 + 1]\n"
         << "  local y = o[(r * 3) % 8 + 1]\n"
         << "  if r % 5 == 0 then x.a = r end\n"
         << "  if r % 7 == 0 then y.b = r end\n"
         << "  if r % 11 == 0 then x.c = r end\n"
         << "  if r % 13 == 0 then y.e = r end\n"
         << "  if r % 97 == 0 then o[r % 8 + 1] = {} end\n"
         << "  local v = x.a\n"
         << "  if v then s = s + v end\n"
         << "  v = y.b\n"
         << "  if v then s = s + v end\n"
         << "end\np(s)\n";
    // Straight-line sites run once each, so only the loop must hit.
    const std::pair<std::string, bool> programs[] = { { program.str(), false }, { loop.str(), true } };
    for (const auto& [src, mustHit] : programs) {
        Config on;
        on.tiered = false;
        Config off = on;
        off.icCaching = false;
        Engine a(on);
        Engine b(off);
        std::string outA = Run(a, src);
        std::string outB = Run(b, src);
        o.Require(outA == outB, "guest output differs with caching disabled");
        if (mustHit)
            o.Require(a.Stats().icHits > 0, "guest program had no IC hits");
        o.Require(a.Stats().effectSwitches == 0, "quickened dispatch took " + std::to_string(a.Stats().effectSwitches) + " effect switches");
    }
    if (o.pass)
        o.detail = std::to_string(kOps) + " ops, " + std::to_string(cachedStats.hits) + " hits, 0 effect switches";
    return o;
}

// Shapes for the polymorphic site: shape k puts x after k filler properties;
// the last shape lacks x.
struct ShapeSet {
    Engine* e;
    std::vector<BoxedValue> objs;
    std::vector<bool> slabEligible;
    std::vector<double> values;
};

ShapeSet MakeShapes(Engine& e, int count)
{
    ShapeSet s { &e, {}, {}, {} };
    Heap& h = e.GetHeap();
    uint32_t x = e.Str("x").HeapHandle();
    for (int k = 0; k < count; k++) {
        BoxedValue t = h.NewTable();
        bool hasX = k != count - 1 || count < 3;
        int fillers = hasX ? k : 2;
        // Distinct filler names keep every shape distinct.
        for (int i = 0; i < fillers; i++)
            h.PutProperty(h.Table(t), e.Str("f" + std::to_string(k) + "_" + std::to_string(i)).HeapHandle(), BoxedValue::Double(-1));
        if (hasX)
            h.PutProperty(h.Table(t), x, BoxedValue::Double(100 + k));
        s.objs.push_back(t);
        s.slabEligible.push_back(!hasX || fillers < 4);
        s.values.push_back(hasX ? 100 + k : -1);
    }
    return s;
}

struct SimSite {
    std::optional<uint64_t> slab;
    std::vector<uint64_t> chain;
    bool megamorphic = false;
};

void Simulate(SimSite& sim, uint64_t key, bool eligible)
{
    if (sim.megamorphic)
        return;
    if (sim.slab == key || std::find(sim.chain.begin(), sim.chain.end(), key) != sim.chain.end())
        return;
    if (!sim.slab && eligible) {
        sim.slab = key;
        return;
    }
    if (sim.chain.size() >= 8) {
        sim.megamorphic = true;
        return;
    }
    sim.chain.insert(sim.chain.begin(), key);
}

Outcome CheckPolymorphicIc()
{
    Outcome o;
    const StencilTemplate* stencil = nullptr;
    for (uint32_t v = 0; v < GuestRegistry().Def(Kinds().GetById).variants.size() && !stencil; v++) {
        const StencilTemplate& st = GetStencil(Kinds().GetById, v);
        if (st.supported && st.icSite)
            stencil = &st;
    }
    o.Require(stencil != nullptr, "no compiled GetById stencil");
    if (!o.pass)
        return o;
    const IcKind& kind = GuestIcKinds()[stencil->icSite->descriptor];
    std::mt19937_64 rng(7);
    size_t lookups = 0;
    for (int round = 0; round < 400 && o.pass; round++) {
        int numShapes = round < 300 ? 1 + round % 5 : 9 + round % 6;
        Engine e;
        ShapeSet shapes = MakeShapes(e, numShapes);
        BoxedValue x = e.Str("x");
        Tier2IcSite site(&kind, &*stencil->icSite, 8);
        SimSite sim;
        Counters c;
        int length = 1 + int(rng() % 40);
        for (int i = 0; i < length && o.pass; i++) {
            int k = int(rng() % numShapes);
            BoxedValue obj = shapes.objs[k];
            uint64_t key = e.GetHeap().Table(obj)->hiddenClass->id;
            BoxedValue v = site.Execute(&e, { key, obj, x, {} }, c);
            lookups++;
            double want = shapes.values[k];
            o.Require(want < 0 ? v.IsNil() : v.AsDouble() == want, "wrong value from the site");
            Simulate(sim, key, shapes.slabEligible[k]);
            o.Require(site.SlabOccupied() == sim.slab.has_value(), "slab occupancy differs from the simulation");
            if (sim.slab)
                o.Require(site.SlabKey() == *sim.slab, "slab key differs from the simulation");
            o.Require(site.ChainKeys() == sim.chain, "chain differs from the simulation");
            o.Require((site.GetMode() == Tier2IcSite::Mode::Megamorphic) == sim.megamorphic, "megamorphic state differs");
            o.Require(site.NumStubs() <= 8, "stub count above the cap");
        }
    }
    if (o.pass)
        o.detail = "400 sequences, " + std::to_string(lookups) + " lookups";
    return o;
}

Outcome CheckHoleProver()
{
    Outcome o;
    std::mt19937_64 rng(31337);
    size_t decided = 0;
    for (int i = 0; i < 1000; i++) {
        HoleExpr e;
        e.root = HoleRoot::OperandSlot;
        size_t steps = rng() % 5;
        for (size_t s = 0; s < steps; s++) {
            if (rng() % 2)
                e.chain.push_back({ AffineStep::Op::Mul, int64_t(rng() % 65) - 32 });
            else
                e.chain.push_back({ AffineStep::Op::Add, int64_t(rng() % 2000001) - 1000000 });
        }
        int64_t lo = int64_t(rng() % 100000) - 50000;
        int64_t hi = lo + int64_t(rng() % (int64_t(1) << (rng() % 40)));
        HoleDecision d = ProveRange(e, { lo, hi, false });
        if (d.mode != HoleMode::RuntimeEvaluated)
            decided++;
        std::uniform_int_distribution<int64_t> pick(lo, hi);
        for (int k = 0; k < 100; k++) {
            int64_t r = pick(rng);
            uint64_t burned = PatchHole(e, d, r);
            if (d.mode != HoleMode::RuntimeEvaluated)
                o.Require(int64_t(burned) >= kHoleTargetLo && int64_t(burned) < kHoleTargetHi, "patched value outside the target range");
            o.Require(ReadHole(e, d, burned) == e.Eval(r), "recovered value differs from direct evaluation");
        }
    }
    HoleExpr slot8;
    slot8.root = HoleRoot::OperandSlot;
    slot8.chain = { { AffineStep::Op::Mul, 8 } };
    HoleDecision a = ProveRange(slot8, { 0, kMaxSlotRoot, false });
    o.Require(a.mode == HoleMode::Adjusted && a.adjust == 1, "slot*8 is not adjusted(+1)");
    slot8.chain.push_back({ AffineStep::Op::Add, 1 });
    HoleDecision b = ProveRange(slot8, { 0, kMaxSlotRoot, false });
    o.Require(b.mode == HoleMode::Direct, "slot*8+1 is not direct");
    o.Require(decided > 0 && decided < 1000, "fuzzing did not cover both decided and runtime holes");
    if (o.pass)
        o.detail = "1000 expressions, " + std::to_string(decided) + " proven";
    return o;
}

Outcome CheckCompilePipeline()
{
    Outcome o;
    size_t blocks = 0;
    uint64_t bytecodes = 0;
    for (const testing::CorpusFile& f : testing::LoadCorpus()) {
        Engine e;
        FunctionProto* main = CompileChunk(e, f.source, f.name);
        for (const FunctionProto* p : AllProtos(main)) {
            Counters c;
            std::unique_ptr<CodeObject> co = Compile(p->cb, Config {}, c);
            const CompileReport& r = co->report;
            std::string where = f.name + "/" + p->name;
            o.Require(r.predicted == r.emitted, "pass 1 and pass 3 sizes differ in " + where);
            o.Require(r.pass3Visits == p->cb.stream.NumBytecodes(), "pass 3 visit count differs in " + where);
            o.Require(c.compileDecodes == r.numBytecodes, "pass 3 decoded a bytecode twice in " + where);
            o.Require(r.unresolvedBranchSlots == 0, "unresolved branch slot in " + where);
            for (const Cell& cell : co->fastCells) {
                for (const HoleSlot& h : cell.stencil->fast.holes)
                    o.Require(co->payload[cell.payload + h.slot] != kUnpatchedBranch, "sentinel left in " + where);
            }
            blocks++;
            bytecodes += r.numBytecodes;
        }
    }
    if (o.pass)
        o.detail = std::to_string(blocks) + " code blocks, " + std::to_string(bytecodes) + " bytecodes";
    return o;
}

struct Tier2Window {
    uint64_t decodes = 0;
    uint64_t windows = 0;
    uint64_t atEnter = 0;
    bool inside = false;

    void Attach(Engine& e)
    {
        e.SetTierObserver([this](TierEvent ev, const Counters& c) {
            if (ev == TierEvent::EnterTier2) {
                atEnter = c.decodesPerformed;
                inside = true;
            } else if (inside) {
                decodes += c.decodesPerformed - atEnter;
                windows++;
                inside = false;
            }
        });
    }
};

Outcome CheckTiering()
{
    Outcome o;
    Config cfg;
    cfg.tierUpThreshold = 1000;
    Engine loop(cfg);
    Tier2Window w;
    w.Attach(loop);
    std::string out = Run(loop, "local s = 0 for i = 1, 1000000 do s = s + i end print(s)");
    o.Require(out == "500000500000\n", "loop printed " + out);
    o.Require(loop.Stats().osrEntries >= 1, "no OSR entry");
    o.Require(w.windows >= 1, "no tier 2 window observed");
    o.Require(w.decodes == 0, "tier 2 window decoded " + std::to_string(w.decodes) + " bytecodes");

    const char* twoCalls = "local function f(a)\n"
                           "  local x = a + 1 local y = x * 2 local z = y - a local w = z / 2\n"
                           "  x = x + y y = y + z z = z + w w = w + x\n"
                           "  return x + y + z + w\n"
                           "end\n"
                           "local r1 = f(1)\nlocal r2 = f(2)\nprint(r1, r2)";
    Config interp;
    interp.tiered = false;
    Engine probe(interp);
    std::string expected = Run(probe, twoCalls);
    uint64_t cost = 0;
    for (const auto& p : probe.Protos()) {
        if (p->name == "f")
            cost = p->cb.bytecodesExecuted / 2;
    }
    o.Require(cost > 2, "could not measure the cost of one call");
    Config between;
    between.tierUpThreshold = cost / 2 + 1;
    Engine e(between);
    Tier2Window w2;
    w2.Attach(e);
    o.Require(Run(e, twoCalls) == expected, "two-call output differs");
    o.Require(e.Stats().tierUps == 1, "tierUps=" + std::to_string(e.Stats().tierUps));
    o.Require(e.Stats().osrEntries == 0, "two-call scenario entered through OSR");
    o.Require(w2.windows >= 1 && w2.decodes == 0, "second call decoded in tier 2");
    if (o.pass)
        o.detail = "osrEntries=" + std::to_string(loop.Stats().osrEntries) + ", tier 2 decode delta 0, second call tiered (threshold " + std::to_string(between.tierUpThreshold) + ")";
    return o;
}

Outcome CheckTailCalls()
{
    Outcome o;
    const char* src = "local isEven, isOdd\n"
                      "function isEven(n) if n == 0 then return true end return isOdd(n - 1) end\n"
                      "function isOdd(n) if n == 0 then return false end return isEven(n - 1) end\n"
                      "return isEven";
    std::vector<uint64_t> peaks;
    for (double depth : { 1e3, 1e6 }) {
        Engine e;
        std::ostringstream sink;
        e.SetOutput(&sink);
        std::vector<BoxedValue> f = RunSource(e, src);
        e.Stats().peakFrames = 0;
        BoxedValue arg = BoxedValue::Double(depth);
        std::vector<BoxedValue> r = e.Run(f[0], std::span<const BoxedValue>(&arg, 1));
        o.Require(r.size() == 1 && r[0].IsBool() && r[0].AsBool(), "wrong parity result");
        peaks.push_back(e.Stats().peakFrames);
    }
    o.Require(peaks[0] == peaks[1], "peak frames " + std::to_string(peaks[0]) + " vs " + std::to_string(peaks[1]));
    if (o.pass)
        o.detail = "peak frames " + std::to_string(peaks[0]) + " at both depths";
    return o;
}

Outcome CheckBuilder()
{
    Outcome o;
    const BytecodeRegistry& reg = GuestRegistry();
    const GuestKinds& k = Kinds();
    std::map<uint32_t, uint32_t> swap { { k.Add, k.Sub }, { k.Sub, k.Add }, { k.Mul, k.Div }, { k.Div, k.Mul } };
    size_t streams = 0;
    size_t replaced = 0;
    for (const testing::CorpusFile& f : testing::LoadCorpus()) {
        Engine e;
        FunctionProto* main = CompileChunk(e, f.source, f.name);
        for (const FunctionProto* p : AllProtos(main)) {
            const BytecodeStream& s = p->cb.stream;
            std::string why;
            streams++;
            o.Require(testing::RoundTripsThroughBuilder(reg, s, &why), f.name + "/" + p->name + ": " + why);

            BytecodeBuilder b(reg);
            std::vector<DecodedBytecode> decoded;
            for (uint32_t pos : s.offsets) {
                DecodedBytecode d = Decode(reg, s, pos);
                std::vector<OperandValue> ops = d.EmitOperands();
                b.Emit(d.kind, std::span<const OperandValue>(ops));
                decoded.push_back(d);
            }
            for (const DecodedBytecode& d : decoded) {
                if (d.hasTarget)
                    b.SetBranchTarget(d.pos, d.target);
            }
            std::vector<uint32_t> offsets = b.Peek().offsets;
            size_t length = b.GetCurLength();
            for (const DecodedBytecode& d : decoded) {
                auto it = swap.find(d.kind);
                if (it == swap.end())
                    continue;
                std::vector<OperandValue> ops = d.EmitOperands();
                b.ReplaceBytecode(d.pos, it->second, std::span<const OperandValue>(ops));
                replaced++;
                o.Require(b.Peek().offsets == offsets && b.GetCurLength() == length, "replace moved offsets in " + f.name);
                o.Require(CheckWellFormedness(reg, b.Peek()), "replace broke well-formedness in " + f.name);
                o.Require(GetBytecodeKind(reg, b.Peek(), d.pos) == it->second, "replaced kind not decoded in " + f.name);
            }
            for (const DecodedBytecode& d : decoded) {
                if (d.hasTarget)
                    o.Require(Decode(reg, b.Peek(), d.pos).target == d.target, "branch target moved in " + f.name);
            }
        }
    }
    o.Require(replaced > 0, "no arithmetic bytecode replaced");
    if (o.pass)
        o.detail = std::to_string(streams) + " streams round-tripped, " + std::to_string(replaced) + " replacements";
    return o;
}

Outcome ReportBench()
{
    Outcome o;
    std::string src = testing::LoadCorpusFile("arith_loop.lua");
    double ms[2];
    int i = 0;
    for (bool interp : { true, false }) {
        RunConfig rc;
        rc.interpreterOnly = interp;
        RunResult r = RunProgram(src, rc);
        ms[i++] = r.stats.wallTimeMs;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "arith_loop interpreter %.2f ms, tiered %.2f ms, ratio %.2f", ms[0], ms[1], ms[1] > 0 ? ms[0] / ms[1] : 0.0);
    o.detail = buf;
    return o;
}

struct Criterion {
    int id;
    const char* title;
    std::function<Outcome()> run;
    bool gating;
};

} // namespace

int main()
{
    const Criterion criteria[] = {
        { 1, "differential tier equivalence", DifferentialEquivalence, true },
        { 2, "check optimizer oracle", CheckOptimizerOracle, true },
        { 3, "strength reduction", CheckStrengthReduction, true },
        { 4, "generic IC transparency", CheckGenericIc, true },
        { 5, "polymorphic IC discipline", CheckPolymorphicIc, true },
        { 6, "hole range prover", CheckHoleProver, true },
        { 7, "compile pipeline exactness", CheckCompilePipeline, true },
        { 8, "tiering behavior", CheckTiering, true },
        { 9, "tail-call bound", CheckTailCalls, true },
        { 10, "builder and decoder", CheckBuilder, true },
        { 11, "bench timing (informational)", ReportBench, false },
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& ex) {
            o.pass = false;
            o.detail = std::string("exception: ") + ex.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* status = !c.gating ? "INFO" : o.pass ? "PASS" : "FAIL";
        std::printf("criterion %2d: %s %s: %s (%.2fs)\n", c.id, status, c.title, o.detail.c_str(), secs);
        if (c.gating && !o.pass)
            failures++;
    }
    std::fflush(stdout);
    return failures ? 1 : 0;
}
