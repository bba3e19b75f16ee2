#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <deque>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sesscc/hvk/ast.hpp"
#include "sesscc/hvk/lang.hpp"
#include "sesscc/syntax.hpp"

using namespace sesscc;
using namespace sesscc::hvk;
using syn::SyntaxError;

namespace {

Term I(long long v) { return Term::integer(v); }
Term S(const std::string& n) { return Term::symbol(n); }

HProc P(const std::string& src) { return parse_hvk_text(src); }

bool same(const HProc& a, const HProc& b) { return struct_equal(a, b); }

// ---------------------------------------------------------------------------
// Structural-congruence oracle: a breadth-first closure of the congruence
// laws applied along the top spine (parallel components and restrictions).
// Independent of normal_form; used to check that normalization only ever
// rearranges a process into a congruent one.
// ---------------------------------------------------------------------------

void neighbors_at(const HProc& p, const std::vector<std::string>& alpha_pool,
                  std::vector<HProc>& out) {
    using Kind = HProcess::Kind;
    if (p->kind == Kind::Par) {
        const auto& kids = p->kids;
        for (size_t i = 0; i < kids.size(); ++i)
            for (size_t j = i + 1; j < kids.size(); ++j) {
                auto v = kids;
                std::swap(v[i], v[j]);
                out.push_back(HProcess::par(v));
            }
        for (size_t i = 0; i < kids.size(); ++i) {
            if (kids[i]->kind == Kind::Par) {
                std::vector<HProc> v(kids.begin(), kids.begin() + i);
                v.insert(v.end(), kids[i]->kids.begin(), kids[i]->kids.end());
                v.insert(v.end(), kids.begin() + i + 1, kids.end());
                out.push_back(HProcess::par(v));
            }
            if (kids[i]->kind == Kind::Inact) {
                auto v = kids;
                v.erase(v.begin() + i);
                out.push_back(HProcess::par(v));
            }
            if (kids[i]->kind == Kind::Hide) {
                bool capture = false;
                for (size_t j = 0; j < kids.size(); ++j)
                    if (j != i && free_names(kids[j]).count(kids[i]->name)) capture = true;
                if (!capture) {
                    auto v = kids;
                    v[i] = kids[i]->body();
                    out.push_back(HProcess::hide(kids[i]->name, HProcess::par(v)));
                }
            }
            std::vector<HProc> sub;
            neighbors_at(kids[i], alpha_pool, sub);
            for (auto& s : sub) {
                auto v = kids;
                v[i] = s;
                out.push_back(HProcess::par(v));
            }
        }
    } else if (p->kind == Kind::Hide) {
        const HProc& body = p->body();
        if (body->kind == Kind::Hide && body->name != p->name)
            out.push_back(HProcess::hide(body->name, HProcess::hide(p->name, body->body())));
        for (const std::string& c : alpha_pool) {
            if (c == p->name || all_names(body).count(c)) continue;
            FreshVarGen g;
            out.push_back(HProcess::hide(c, subst_names(body, {{p->name, c}}, g)));
        }
        std::vector<HProc> sub;
        neighbors_at(body, alpha_pool, sub);
        for (auto& s : sub) out.push_back(HProcess::hide(p->name, s));
    }
}

bool congr_reachable(const HProc& from, const HProc& to,
                     const std::vector<std::string>& alpha_pool, size_t state_budget = 60000) {
    const std::string goal = to_text(to);
    if (to_text(from) == goal) return true;
    std::set<std::string> seen{to_text(from)};
    std::deque<HProc> queue{from};
    while (!queue.empty() && seen.size() < state_budget) {
        HProc cur = queue.front();
        queue.pop_front();
        std::vector<HProc> nb;
        neighbors_at(cur, alpha_pool, nb);
        for (auto& n : nb) {
            std::string t = to_text(n);
            if (t == goal) return true;
            if (seen.insert(t).second) queue.push_back(n);
        }
    }
    return false;
}

// Random spine-structured processes used by the congruence property test.
struct SpineGen {
    std::mt19937 rng;
    explicit SpineGen(unsigned seed) : rng(seed) {}

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

    std::string chan() {
        static const std::vector<std::string> pool = {"k", "h", "u", "v"};
        return pool[pick(pool.size())];
    }

    HProc chain(int depth) {
        if (depth <= 0 || pick(4) == 0) return HProcess::inact();
        switch (pick(3)) {
            case 0:
                return HProcess::send(chan(), {I(pick(5))}, chain(depth - 1));
            case 1:
                return HProcess::receive(chan(), {"x" + std::to_string(pick(3))},
                                         chain(depth - 1));
            default:
                return HProcess::select(chan(), "go", chain(depth - 1));
        }
    }

    HProc spine(int depth) {
        if (depth <= 0) return chain(2);
        switch (pick(4)) {
            case 0:
                return HProcess::par({spine(depth - 1), spine(depth - 1)});
            case 1:
                return HProcess::hide(chan(), spine(depth - 1));
            case 2:
                return HProcess::par({chain(2), HProcess::inact()});
            default:
                return chain(2);
        }
    }
};

Term rnd_arith(std::mt19937& rng, const std::vector<std::string>& vars, int depth) {
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    if (depth <= 0 || pick(3) == 0) {
        if (!vars.empty() && pick(2) == 0) return Term::var(vars[pick(vars.size())]);
        return I(pick(9) - 4);
    }
    static const std::vector<std::string> ops = {"add", "sub", "mul"};
    return Term::op(ops[pick(ops.size())],
                    {rnd_arith(rng, vars, depth - 1), rnd_arith(rng, vars, depth - 1)});
}

Term rnd_cond(std::mt19937& rng, const std::vector<std::string>& vars) {
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    static const std::vector<std::string> cmps = {"lt", "le", "eq", "gt"};
    return Term::op(cmps[pick(cmps.size())],
                    {rnd_arith(rng, vars, 2), rnd_arith(rng, vars, 2)});
}

HProc rnd_receiver_body(std::mt19937& rng, const std::vector<std::string>& vars, int depth) {
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    if (depth <= 0) return HProcess::inact();
    switch (pick(3)) {
        case 0:
            return HProcess::send("h", {rnd_arith(rng, vars, 2)},
                                  rnd_receiver_body(rng, vars, depth - 1));
        case 1:
            return HProcess::if_(rnd_cond(rng, vars), rnd_receiver_body(rng, vars, depth - 1),
                                 rnd_receiver_body(rng, vars, depth - 1));
        default:
            return HProcess::inact();
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Reduction rules, one micro-case each, results derived by hand.
// ---------------------------------------------------------------------------

TEST_CASE("link connects request and accept on a fresh channel") {
    HProc p = P("(request a(k) in k![1] 0) | (accept a(j) in j?(x) in 0)");
    HProc r = reduce_step(p);
    HProc expected = HProcess::hide(
        "k#1", HProcess::par({HProcess::send("k#1", {I(1)}, HProcess::inact()),
                              HProcess::receive("k#1", {"x"}, HProcess::inact())}));
    CHECK(same(r, expected));
    CHECK(!all_names(p).count("k#1"));
}

TEST_CASE("com passes evaluated values into the receiver") {
    HProc p = P("k![2 + 3, true] 0 | k?(x, b) in (if b then k![x * 2] 0 else 0)");
    HProc r = reduce_step(p);
    CHECK(same(r, P("0 | (if true then k![5 * 2] 0 else 0)")));
}

TEST_CASE("label picks the selected branch") {
    HProc p = P("k <| go; k![1] 0 | k |> { go: k?(x) in 0 || stop: 0 }");
    HProc r = reduce_step(p);
    CHECK(same(r, P("k![1] 0 | (k?(x) in 0)")));
}

TEST_CASE("pass delegates a channel to the catcher") {
    HProc p = P("throw k![j] 0 | catch k?((m)) in m![7] 0");
    HProc r = reduce_step(p);
    CHECK(same(r, P("0 | j![7] 0")));
}

TEST_CASE("pass avoids capturing a restriction in the catcher") {
    HProc p = P("throw k![j] 0 | catch k?((m)) in (new j in m![1] j![2] 0)");
    HProc r = reduce_step(p);
    HProc expected = HProcess::par(
        {HProcess::inact(),
         HProcess::hide("j#1", HProcess::send("j", {I(1)},
                                              HProcess::send("j#1", {I(2)},
                                                             HProcess::inact())))});
    CHECK(same(r, expected));
}

TEST_CASE("conditional takes the then branch on true") {
    CHECK(same(reduce_step(P("if 1 < 2 then k![1] 0 else 0")), P("k![1] 0")));
}

TEST_CASE("conditional takes the else branch on false") {
    CHECK(same(reduce_step(P("if 2 < 1 then k![1] 0 else j![2] 0")), P("j![2] 0")));
}

TEST_CASE("definition call unfolds with evaluated and renamed arguments") {
    NormalForm nf = normal_form(P("def X(x k) = k![x] 0 in X[41 + 1, h]"));
    REQUIRE(nf.decls.size() == 1);
    CHECK(nf.decls[0].name == "X");
    REQUIRE(nf.decls[0].params.size() == 2);
    CHECK(nf.decls[0].params[0].name == "x");
    CHECK(!nf.decls[0].params[0].is_chan);
    CHECK(nf.decls[0].params[1].name == "k");
    CHECK(nf.decls[0].params[1].is_chan);
    REQUIRE(nf.threads.size() == 1);
    CHECK(same(nf.threads[0], P("h![42] 0")));
}

TEST_CASE("restriction hoists and renames around a clashing free name") {
    NormalForm nf = normal_form(P("(new u in (k![u] 0 | u?(x) in 0)) | u![9] 0"));
    REQUIRE(nf.nus == std::vector<std::string>{"u#1"});
    REQUIRE(nf.threads.size() == 3);
    CHECK(same(nf.threads[0], HProcess::send("k", {S("u#1")}, HProcess::inact())));
    CHECK(same(nf.threads[1], HProcess::receive("u#1", {"x"}, HProcess::inact())));
    CHECK(same(nf.threads[2], P("u![9] 0")));
}

TEST_CASE("normalization flattens parallels and drops inert components") {
    NormalForm nf = normal_form(P("(0 | k![1] 0) | (0 | 0)"));
    CHECK(nf.nus.empty());
    REQUIRE(nf.threads.size() == 1);
    CHECK(same(nf.to_process(), P("k![1] 0")));
}

TEST_CASE("canonical text identifies states up to renaming of restrictions") {
    NormalForm a = normal_form(P("new u in (new v in (u![1] 0 | v![2] 0))"));
    NormalForm b = normal_form(P("new w in (new z in (z![1] 0 | w![2] 0))"));
    CHECK(canonical_text(a) == canonical_text(b));
    NormalForm c = normal_form(P("new u in (new v in (u![1] 0 | v![3] 0))"));
    CHECK(canonical_text(a) != canonical_text(c));
}

// ---------------------------------------------------------------------------
// Timed sessions: grants, preconditions, expiry, kills.
// ---------------------------------------------------------------------------

TEST_CASE("timed link grants a session and records the duration") {
    HProc p = P("(request a(k, 2) in k![1] 0) | (accept a(j : dur_j <= 10) in j?(x) in 0)");
    HvkRun run = outermost_run(p, 1, {.force_pairing = false, .timed = true});
    REQUIRE(run.rounds.size() == 1);
    REQUIRE(run.rounds[0].events.size() == 1);
    const FiredEvent& ev = run.rounds[0].events[0];
    CHECK(ev.kind == FiredEvent::Kind::TimedLink);
    CHECK(ev.service == "a");
    CHECK(ev.chan == "k#1");
    REQUIRE(ev.values.size() == 1);
    CHECK(ev.values[0].compare(I(2)) == 0);
    CHECK(run.sessions.remaining.at("k#1") == 2);
    CHECK(run.rounds[0].state.threads.size() == 2);
}

TEST_CASE("acceptance precondition can reject the requested duration") {
    HProc p = P("(request a(k, 600) in 0) | (accept a(j : dur_j <= 500) in 0)");
    HvkRun run = outermost_run(p, 3, {.force_pairing = false, .timed = true});
    CHECK(run.rounds.empty());
    CHECK(run.stuck);
}

TEST_CASE("conjunctive preconditions decide both ways") {
    RedexScan ok = find_redexes(
        normal_form(P("(request a(k, 5) in 0) | (accept a(j : dur_j <= 10 /\\ dur_j > 1) in 0)"))
            .threads);
    REQUIRE(ok.redexes.size() == 1);
    CHECK(ok.redexes[0].rule == Redex::Rule::TimedLink);
    RedexScan no = find_redexes(
        normal_form(P("(request a(k, 1) in 0) | (accept a(j : dur_j <= 10 /\\ dur_j > 1) in 0)"))
            .threads);
    CHECK(no.redexes.empty());
}

TEST_CASE("a granted session admits redexes for its duration and then expires") {
    HProc p = P("(request a(k, 2) in k![1] k![2] k![3] 0)"
                " | (accept a(j : dur_j <= 5) in j?(x) in j?(y) in j?(z) in 0)");
    HvkRun run = outermost_run(p, 6, {.force_pairing = false, .timed = true});
    REQUIRE(run.rounds.size() == 3);
    CHECK(run.rounds[0].fired == std::vector<std::string>{"TimedLink(a, k#1, m=2)"});
    CHECK(run.rounds[1].fired == std::vector<std::string>{"Com(k#1: 1)"});
    CHECK(run.rounds[2].fired == std::vector<std::string>{"Com(k#1: 2)"});
    CHECK(run.stuck);
    CHECK(run.sessions.remaining.at("k#1") == 0);
    CHECK(run.rounds[2].state.threads.size() == 2);
}

TEST_CASE("kill silences its session starting the following round") {
    HProc p = P("(request a(k, 9) in k![1] k![2] 0)"
                " | (accept a(j : dur_j <= 9) in ((j?(x) in 0) | kill(j)))");
    HvkRun run = outermost_run(p, 5, {.force_pairing = false, .timed = true});
    REQUIRE(run.rounds.size() == 2);
    CHECK(run.rounds[1].fired == std::vector<std::string>{"Com(k#1: 1)", "Kill(k#1)"});
    CHECK(run.sessions.killed.count("k#1") == 1);
    CHECK(run.stuck);
    REQUIRE(run.rounds[1].state.threads.size() == 1);
    CHECK(same(run.rounds[1].state.threads[0],
               HProcess::send("k#1", {I(2)}, HProcess::inact())));
}

TEST_CASE("kills gate delegation as well as communication") {
    SessionTable t;
    t.killed.insert("k");
    RedexScan scan = find_redexes(
        normal_form(P("throw k![j] 0 | catch k?((m)) in 0")).threads, t);
    CHECK(scan.redexes.empty());
}

TEST_CASE("session durations must evaluate to non-negative integers") {
    std::vector<HProc> threads =
        normal_form(P("(request a(k, true) in 0) | (accept a(j : dur_j <= 5) in 0)")).threads;
    CHECK_THROWS_AS(find_redexes(threads), HvkError);
}

TEST_CASE("preconditions that stay undecided are an error") {
    std::vector<HProc> threads =
        normal_form(P("(request a(k, 3) in 0) | (accept a(j : w < dur_j) in 0)")).threads;
    CHECK_THROWS_AS(find_redexes(threads), HvkError);
}

TEST_CASE("plain and timed session openers do not pair with each other") {
    HProc p = P("(request a(k, 2) in 0) | (accept a(j) in 0)");
    CHECK(find_redexes(normal_form(p).threads).redexes.empty());
    HProc q = P("(request a(k) in 0) | (accept a(j : dur_j <= 5) in 0)");
    CHECK(find_redexes(normal_form(q).threads).redexes.empty());
}

TEST_CASE("kill threads stay inert in untimed runs") {
    HvkRun run = outermost_run(P("kill(k) | h![1] 0 | h?(x) in 0"), 3, {});
    REQUIRE(run.rounds.size() == 1);
    CHECK(run.rounds[0].fired == std::vector<std::string>{"Com(h: 1)"});
    CHECK(run.stuck);
    REQUIRE(run.rounds[0].state.threads.size() == 1);
    CHECK(run.rounds[0].state.threads[0]->kind == HProcess::Kind::Kill);
    CHECK(run.sessions.killed.empty());
}

TEST_CASE("clock bookkeeping decrements, floors and applies kills") {
    SessionTable t;
    t.remaining["k"] = 2;
    t.remaining["h"] = 0;
    session_clock_step(t, {}, {});
    CHECK(t.remaining["k"] == 1);
    CHECK(t.remaining["h"] == 0);
    session_clock_step(t, {"k"}, {"j"});
    CHECK(t.remaining["k"] == 1);
    CHECK(t.killed.count("j") == 1);
    CHECK(t.blocks("j"));
    CHECK(t.blocks("h"));
    CHECK(!t.blocks("k"));
}

// ---------------------------------------------------------------------------
// Rounds: determinism, ambiguity, forced pairing, session errors.
// ---------------------------------------------------------------------------

TEST_CASE("two senders for one receiver is reported as nondeterminism") {
    HProc p = P("k![1] 0 | k![2] 0 | k?(x) in 0");
    try {
        outermost_run(p, 1, {});
        FAIL("expected NonDeterminismError");
    } catch (const NonDeterminismError& e) {
        REQUIRE(e.conflicts.size() == 1);
        CHECK(e.conflicts[0].find("thread 2") != std::string::npos);
        CHECK(e.conflicts[0].find("Com(0,2)") != std::string::npos);
        CHECK(e.conflicts[0].find("Com(1,2)") != std::string::npos);
    }
}

TEST_CASE("forced pairing resolves ambiguity toward the lowest indices") {
    HProc p = P("k![1] 0 | k![2] 0 | k?(x) in 0");
    HvkRun run = outermost_run(p, 4, {.force_pairing = true, .timed = false});
    REQUIRE(run.rounds.size() == 1);
    REQUIRE(run.rounds[0].events.size() == 1);
    CHECK(run.rounds[0].events[0].values[0].compare(I(1)) == 0);
    REQUIRE(run.rounds[0].state.threads.size() == 1);
    CHECK(same(run.rounds[0].state.threads[0], P("k![2] 0")));
    CHECK(run.stuck);
}

TEST_CASE("rounds fire disjoint redexes simultaneously and deterministically") {
    std::vector<std::string> parts = {
        "(request a(k) in k![1] 0)",
        "(accept a(j) in j?(x) in 0)",
        "(request b(m) in m?(y) in 0)",
        "(accept b(n) in n![5] 0)",
    };
    auto run_canon = [](const std::string& src) {
        HvkRun run = outermost_run(parse_hvk_text(src), 8, {});
        std::vector<std::string> out;
        for (const RoundRecord& r : run.rounds) out.push_back(canonical_text(r.state));
        return out;
    };
    std::vector<std::string> base =
        run_canon(parts[0] + " | " + parts[1] + " | " + parts[2] + " | " + parts[3]);
    REQUIRE(base.size() == 2);
    std::vector<std::string> perm =
        run_canon(parts[3] + " | " + parts[0] + " | " + parts[1] + " | " + parts[2]);
    CHECK(base == perm);
    std::vector<std::string> perm2 =
        run_canon(parts[2] + " | " + parts[3] + " | " + parts[0] + " | " + parts[1]);
    CHECK(base == perm2);
}

TEST_CASE("minted link channels avoid every name in the program") {
    HProc p = HProcess::par({P("(request a(k) in k![1] 0) | (accept a(j) in j?(x) in 0)"),
                             HProcess::send("k#3", {I(9)}, HProcess::inact())});
    HvkRun run = outermost_run(p, 1, {});
    REQUIRE(run.rounds.size() == 1);
    CHECK(run.rounds[0].events[0].chan == "k#4");
    CHECK(!all_names(p).count("k#4"));
}

TEST_CASE("mismatched send and receive arities fail loudly") {
    CHECK_THROWS_AS(reduce_step(P("k![1, 2] 0 | k?(x) in 0")), HvkError);
}

TEST_CASE("a selection without a matching branch label is stuck") {
    CHECK_THROWS_AS(reduce_step(P("k <| bad; 0 | k |> { go: 0 }")), StuckError);
}

TEST_CASE("processes without redexes are stuck") {
    CHECK_THROWS_AS(reduce_step(P("0")), StuckError);
    CHECK_THROWS_AS(reduce_step(P("k![1] 0")), StuckError);
}

TEST_CASE("conditions must be closed and boolean") {
    CHECK_THROWS_AS(reduce_step(P("if w < 1 then 0 else 0")), EvalError);
    CHECK_THROWS_AS(reduce_step(P("if 1 + 2 then 0 else 0")), EvalError);
}

// ---------------------------------------------------------------------------
// Definitions: scope extrusion, merging, recursion, runaway unfolding.
// ---------------------------------------------------------------------------

TEST_CASE("definition scope extends over parallel components") {
    NormalForm nf = normal_form(P("(def X(k) = k![1] 0 in X[h]) | h?(x) in 0"));
    REQUIRE(nf.decls.size() == 1);
    REQUIRE(nf.threads.size() == 2);
    CHECK(same(nf.threads[0], P("h![1] 0")));
    HProc r = reduce_step(P("(def X(k) = k![1] 0 in X[h]) | h?(x) in 0"));
    NormalForm after = normal_form(r);
    CHECK(after.threads.empty());
}

TEST_CASE("clashing definition names are renamed apart when merged") {
    NormalForm nf =
        normal_form(P("(def X(k) = k![1] 0 in X[h]) | (def X(k) = k![2] 0 in X[g])"));
    REQUIRE(nf.decls.size() == 2);
    CHECK(nf.decls[0].name == "X");
    CHECK(nf.decls[1].name == "X#1");
    REQUIRE(nf.threads.size() == 2);
    CHECK(same(nf.threads[0], P("h![1] 0")));
    CHECK(same(nf.threads[1], P("g![2] 0")));
}

TEST_CASE("recursive definitions keep producing work each round") {
    HProc p = P("(def X(k) = k![1] X[k] in X[h]) | (def Y(k) = k?(x) in Y[k] in Y[h])");
    HvkRun run = outermost_run(p, 4, {});
    REQUIRE(run.rounds.size() == 4);
    for (const RoundRecord& r : run.rounds)
        CHECK(r.fired == std::vector<std::string>{"Com(h: 1)"});
    CHECK(!run.stuck);
}

TEST_CASE("unproductive unfolding hits the expansion budget") {
    CHECK_THROWS_AS(normal_form(P("def X(k) = X[k] in X[h]")), HvkError);
    CHECK_THROWS_AS(normal_form(P("def X(k) = X[k] | X[k] in X[h]")), HvkError);
}

// ---------------------------------------------------------------------------
// Normalization is congruence-sound and idempotent.
// ---------------------------------------------------------------------------

TEST_CASE("normalization stays within the congruence closure") {
    std::vector<std::string> fixed = {
        "(new u in (k![u] 0 | u?(x) in 0)) | u![9] 0",
        "(new u in u![1] 0) | (new u in u?(x) in 0)",
        "new k in ((0 | k![1] 0) | (new h in h![2] 0))",
        "(0 | 0) | new u in (new v in (u![v] 0 | 0))",
    };
    for (const std::string& src : fixed) {
        CAPTURE(src);
        HProc p = P(src);
        NormalForm nf = normal_form(p);
        CHECK(congr_reachable(p, nf.to_process(), nf.nus));
    }

    SpineGen gen(20260814);
    for (int i = 0; i < 40; ++i) {
        HProc p = gen.spine(3);
        CAPTURE(to_text(p));
        NormalForm nf = normal_form(p);
        CHECK(congr_reachable(p, nf.to_process(), nf.nus));
    }
}

TEST_CASE("normalization is idempotent") {
    std::vector<std::string> fixed = {
        "(new u in (k![u] 0 | u?(x) in 0)) | u![9] 0",
        "(def X(k) = k![1] 0 in X[h]) | (def X(k) = k![2] 0 in X[g])",
        "(0 | k![1] 0) | (0 | 0)",
    };
    for (const std::string& src : fixed) {
        CAPTURE(src);
        NormalForm once = normal_form(P(src));
        NormalForm twice = normal_form(once.to_process());
        CHECK(once.text() == twice.text());
    }
    SpineGen gen(7);
    for (int i = 0; i < 30; ++i) {
        HProc p = gen.spine(3);
        CAPTURE(to_text(p));
        NormalForm once = normal_form(p);
        NormalForm twice = normal_form(once.to_process());
        CHECK(once.text() == twice.text());
    }
}

// ---------------------------------------------------------------------------
// Substituting evaluated values agrees with substituting then evaluating.
// ---------------------------------------------------------------------------

TEST_CASE("communication substitutes exactly the evaluated payload") {
    std::mt19937 rng(99);
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    for (int i = 0; i < 50; ++i) {
        std::vector<std::string> binders = {"x", "y"};
        std::vector<Term> payload = {rnd_arith(rng, {}, 1 + pick(2)),
                                     rnd_arith(rng, {}, 1 + pick(2))};
        HProc body = rnd_receiver_body(rng, binders, 3);
        HProc p = HProcess::par({HProcess::send("k", payload, HProcess::inact()),
                                 HProcess::receive("k", binders, body)});
        CAPTURE(to_text(p));
        NormalForm after = normal_form(reduce_step(p));

        Substitution direct;
        direct["x"] = eval_expr(payload[0]);
        direct["y"] = eval_expr(payload[1]);
        NormalForm expect = normal_form(subst_values(body, direct));
        REQUIRE(after.threads.size() == expect.threads.size());
        for (size_t t = 0; t < after.threads.size(); ++t)
            CHECK(same(after.threads[t], expect.threads[t]));
    }
}

TEST_CASE("record fields flow through communication and conditionals") {
    HProc p = P("k![{price = 1200}] 0"
                " | k?(offer) in (if offer.price <= 1500 then h![1] 0 else 0)");
    HProc r1 = reduce_step(p);
    HProc r2 = reduce_step(r1);
    CHECK(same(r2, P("h![1] 0")));

    HProc q = P("k![{price = 2000}] 0"
                " | k?(offer) in (if offer.price <= 1500 then h![1] 0 else 0)");
    CHECK(same(reduce_step(reduce_step(q)), P("0")));
}

// ---------------------------------------------------------------------------
// Concrete syntax: round trips, shapes, rejected inputs, lint notes.
// ---------------------------------------------------------------------------

TEST_CASE("parsing and printing round-trip") {
    std::vector<std::string> sources = {
        "request a(k) in k![1, true] 0",
        "(request a(k) in k![1] 0) | (accept a(j) in j?(x, y) in 0)",
        "k <| go; k |> { a: 0 || b: h![1] 0 }",
        "throw k![j] catch k?((m)) in m![1] 0",
        "if not (x < 1) and y == 2 then 0 else k![x + 1] 0",
        "new u, v in u![v] 0",
        "def X(x, k) = k![x] 0 and Y(h) = h?(z) in Y[h] in X[1, c] | Y[c]",
        "request a(k, 10) in kill(k)",
        "accept a(k : dur_k <= 500 /\\ dur_k > 1) in 0",
        "k![{price = 1200, ref = sym}] 0",
        "k?(offer) in h![offer.price] 0",
        "k |> { one: 0 || two: (u![1] 0 | u?(x) in 0) }",
    };
    for (const std::string& src : sources) {
        CAPTURE(src);
        HProc p = P(src);
        HProc q = P(to_text(p));
        CHECK(same(p, q));
    }
}

TEST_CASE("printer output is stable on simple forms") {
    CHECK(to_text(P("k![1] 0")) == "k![1] 0");
    CHECK(to_text(P("k![1] 0 | (k?(x) in 0)")) == "(k![1] 0) | (k?(x) in 0)");
    CHECK(to_text(P("new u in u![1] 0")) == "new u in u![1] 0");
    CHECK(to_text(P("kill(k) | 0")) == "kill(k) | 0");
}

TEST_CASE("malformed sources are rejected with positions") {
    CHECK_THROWS_AS(P("request a(k) k![1] 0"), SyntaxError);
    CHECK_THROWS_AS(P("k![1"), SyntaxError);
    CHECK_THROWS_AS(P("k |> { }"), SyntaxError);
    CHECK_THROWS_AS(P("k |> { a: 0 || a: 0 }"), SyntaxError);
    CHECK_THROWS_AS(P("def X(x x) = 0 in 0"), SyntaxError);
    CHECK_THROWS_AS(P("def X(x) = 0 and X(y) = 0 in 0"), SyntaxError);
    CHECK_THROWS_AS(P("accept a(k : dur_j <= 5) in 0"), SyntaxError);
    CHECK_THROWS_AS(P("k![dur_x] 0"), SyntaxError);
    CHECK_THROWS_AS(P("request if(k) in 0"), SyntaxError);
    CHECK_THROWS_AS(P("0 0"), SyntaxError);
}

TEST_CASE("call validation happens after parsing") {
    CHECK_THROWS_AS(P("X[1]"), HvkError);
    CHECK_THROWS_AS(P("def X(k) = k![1] 0 in X[1]"), HvkError);
    CHECK_THROWS_AS(P("def X(k) = k![1] 0 in X[h, g]"), HvkError);
}

TEST_CASE("lint reports free names and doubly accepted services") {
    std::vector<std::string> notes = lint(P("k![1] 0"));
    REQUIRE(notes.size() == 1);
    CHECK(notes[0].find("free names") != std::string::npos);
    CHECK(notes[0].find("k") != std::string::npos);

    // Two notes here: the doubled acceptance and the free service name.
    std::vector<std::string> dup = lint(P("(accept a(k) in 0) | (accept a(j) in 0)"));
    REQUIRE(dup.size() == 2);
    CHECK((dup[0] + " " + dup[1]).find("'a'") != std::string::npos);

    CHECK(lint(P("new a in ((accept a(k) in 0) | (request a(j) in j![1] 0))")).empty());
}

TEST_CASE("expression evaluation folds arithmetic, comparisons and fields") {
    CHECK(eval_expr(Term::op("add", {I(1), Term::op("mul", {I(2), I(3)})})).compare(I(7)) == 0);
    Term rec = Term::record({{"price", I(1200)}});
    CHECK(eval_expr(Term::op("field", {Term::var("o"), S("price")}), {{"o", rec}})
              .compare(I(1200)) == 0);
    CHECK_THROWS_AS(eval_expr(Term::var("w")), EvalError);
    CHECK_THROWS_AS(eval_expr(Term::op("add", {I(1), Term::boolean(true)})), EvalError);
}

TEST_CASE("timed constructs are detectable for mode selection") {
    CHECK(uses_timed_constructs(P("request a(k, 2) in 0")));
    CHECK(uses_timed_constructs(P("accept a(k : dur_k <= 5) in 0")));
    CHECK(uses_timed_constructs(P("new u in kill(u)")));
    CHECK(!uses_timed_constructs(P("(request a(k) in k![1] 0) | (accept a(j) in 0)")));
}
