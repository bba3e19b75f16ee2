#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sesscc/store.hpp"
#include "sesscc/syntax.hpp"
#include "sesscc/utcc/engine.hpp"
#include "sesscc/utcc/process.hpp"

using namespace sesscc;
using namespace sesscc::utcc;
using sesscc::testing::SlowStore;
using syn::SyntaxError;
using syn::parse_constraint_text;

namespace {

Term V(const std::string& n) { return Term::var(n); }
Term I(long long v) { return Term::integer(v); }
Term S(const std::string& n) { return Term::symbol(n); }

Constraint A(const std::string& pred, std::vector<Term> args) {
    return Constraint::atom(pred, std::move(args));
}

Constraint PC(const std::string& src) { return parse_constraint_text(src, syn::TermScope{}); }
Proc PP(const std::string& src) { return parse_process_text(src); }

/// Store holding exactly the given constraints, for output comparisons.
Store just(const std::vector<Constraint>& cs) {
    Store s;
    FreshVarGen g;
    for (const auto& c : cs) s.tell(c, g);
    return s;
}

const Proc* find_kind(const std::vector<Proc>& threads, Process::Kind k) {
    for (const auto& t : threads)
        if (t->kind == k) return &t;
    return nullptr;
}

}  // namespace

TEST_CASE("parallel composition forgets units, nesting and order") {
    Proc a = Process::tell(A("a", {I(1)}));
    Proc b = Process::tell(A("b", {I(2)}));
    Proc c = Process::tell(A("c", {I(3)}));

    CHECK(struct_equal(congr_normalize(Process::par({Process::skip(), a})), a));
    CHECK(struct_equal(congr_normalize(Process::par({Process::skip(), Process::skip()})),
                       Process::skip()));

    Proc nested = Process::par({a, Process::par({b, c})});
    Proc flat = congr_normalize(nested);
    REQUIRE(flat->kind == Process::Kind::Par);
    CHECK(flat->kids.size() == 3);

    CHECK(struct_equal(congr_normalize(Process::par({a, b})),
                       congr_normalize(Process::par({b, a}))));
    CHECK(struct_equal(congr_normalize(Process::par({nested, a})),
                       congr_normalize(Process::par({a, c, Process::par({a, b})}))));
}

TEST_CASE("adjacent scopes merge unless that would capture a name") {
    Proc body = Process::tell(A("r", {V("x"), V("y")}));

    Proc merged = congr_normalize(Process::local({"x"}, Process::local({"y"}, body)));
    CHECK(struct_equal(merged, Process::local({"x", "y"}, body)));

    // Inner binder appears in the outer init: hoisting it would capture.
    Proc guarded = Process::local({"x"}, A("p", {V("y")}), Process::local({"y"}, body));
    Proc kept = congr_normalize(guarded);
    REQUIRE(kept->kind == Process::Kind::Local);
    CHECK(kept->vars == std::vector<std::string>{"x"});
    CHECK(kept->body()->kind == Process::Kind::Local);

    // Shadowed binder stays nested as well.
    Proc shadow = congr_normalize(
        Process::local({"x"}, Process::local({"x"}, Process::tell(A("p", {V("x")})))));
    REQUIRE(shadow->kind == Process::Kind::Local);
    CHECK(shadow->body()->kind == Process::Kind::Local);

    // Init constraints of merged scopes are conjoined.
    Proc both = congr_normalize(Process::local({"x"}, Constraint::eq(V("x"), I(1)),
                                               Process::local({"y"}, Constraint::eq(V("y"), I(2)), body)));
    REQUIRE(both->kind == Process::Kind::Local);
    CHECK(both->vars == std::vector<std::string>{"x", "y"});
    CHECK(both->c == Constraint::conj({Constraint::eq(V("x"), I(1)), Constraint::eq(V("y"), I(2))}));
}

TEST_CASE("normalization is idempotent and respects the unit law on random trees") {
    std::mt19937 rng(20260814);
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    auto fact = [&]() { return A(std::string(1, "pqr"[pick(3)]), {I(pick(3))}); };

    std::function<Proc(int)> gen = [&](int depth) -> Proc {
        if (depth == 0) {
            switch (pick(3)) {
                case 0: return Process::skip();
                case 1: return Process::tell(fact());
                default: return Process::ptell(fact());
            }
        }
        switch (pick(8)) {
            case 0: return Process::skip();
            case 1: return Process::tell(fact());
            case 2: {
                std::vector<Proc> kids;
                int n = pick(4);
                for (int i = 0; i < n; ++i) kids.push_back(gen(depth - 1));
                return Process::par(std::move(kids));
            }
            case 3: {
                static const char* names[] = {"u", "v", "w"};
                std::string var = names[pick(3)];
                Constraint init = pick(2) ? Constraint::eq(V(var), I(pick(3))) : Constraint::top();
                return Process::local({var}, init, gen(depth - 1));
            }
            case 4: return Process::next(gen(depth - 1));
            case 5: return Process::unless(fact(), gen(depth - 1));
            case 6: return Process::bang(gen(depth - 1));
            default: return Process::when(fact(), gen(depth - 1));
        }
    };

    for (int iter = 0; iter < 100; ++iter) {
        Proc p = gen(3);
        Proc q = congr_normalize(p);
        CAPTURE(to_text(p));
        CHECK(struct_equal(congr_normalize(q), q));
        CHECK(struct_equal(congr_normalize(Process::par({p, Process::skip()})), q));
        Proc r = gen(2);
        CHECK(struct_equal(congr_normalize(Process::par({p, r})),
                           congr_normalize(Process::par({r, p}))));
    }
}

TEST_CASE("telling writes the store and retires the agent") {
    Engine e;
    Engine::Config cfg = e.start(PP("tell(out(k, 5))"), Constraint::top());
    REQUIRE(cfg.threads.size() == 1);

    CHECK(e.step_internal(cfg));
    CHECK(cfg.store->entails(PC("out(k, 5)")));
    CHECK(cfg.threads.empty());
    CHECK(cfg.steps == 1);
    CHECK_FALSE(e.step_internal(cfg));
}

TEST_CASE("a firing abstraction instantiates its body and retires the substitution") {
    // Reference decision first: which substitutions are admissible here?
    SlowStore slow;
    slow.add(PC("out(k, 5)"));
    auto sols = slow.match({"x"}, A("out", {S("k"), V("x")}), {});
    REQUIRE(sols.size() == 1);
    REQUIRE(sols[0].at("x") == I(5));

    Engine e;
    Proc p = PP("(abs x; out(k, x)) tell(got(x))");
    Engine::Config cfg = e.start(p, PC("out(k, 5)"));

    CHECK(e.step_internal(cfg));
    REQUIRE(cfg.threads.size() == 2);
    const Proc* body = find_kind(cfg.threads, Process::Kind::Tell);
    const Proc* rearmed = find_kind(cfg.threads, Process::Kind::Abs);
    REQUIRE(body);
    REQUIRE(rearmed);
    CHECK((*body)->c == A("got", {I(5)}));
    REQUIRE((*rearmed)->exclusions.size() == 1);
    CHECK((*rearmed)->exclusions[0].at("x") == sols[0].at("x"));

    e.quiesce(cfg);
    CHECK(cfg.steps == 2);
    CHECK(cfg.store->entails(PC("got(5)")));
}

TEST_CASE("abstractions exhaust every admissible substitution exactly once") {
    SlowStore slow;
    slow.add(PC("out(k, 5)"));
    slow.add(PC("out(k, 7)"));
    auto sols = slow.match({"x"}, A("out", {S("k"), V("x")}), {});
    REQUIRE(sols.size() == 2);

    Engine e;
    Engine::Config cfg = e.start(PP("(abs x; out(k, x)) tell(got(x))"),
                                 PC("out(k, 5) /\\ out(k, 7)"));
    e.quiesce(cfg);

    CHECK(cfg.steps == 4);  // two firings, two tells
    CHECK(cfg.store->entails(PC("got(5)")));
    CHECK(cfg.store->entails(PC("got(7)")));

    const Proc* rearmed = find_kind(cfg.threads, Process::Kind::Abs);
    REQUIRE(rearmed);
    REQUIRE((*rearmed)->exclusions.size() == 2);
    std::set<Term> fired;
    for (const auto& sub : (*rearmed)->exclusions) fired.insert(sub.at("x"));
    std::set<Term> expected;
    for (const auto& sub : sols) expected.insert(sub.at("x"));
    CHECK(fired == expected);
}

TEST_CASE("ask-and-tell feedback trips the step budget") {
    // Each firing tells c(s(x)), which immediately re-enables the guard.
    Proc loop = Process::abs(
        {"x"}, A("c", {V("x")}),
        Process::tell(A("c", {Term::tuple({S("s"), V("x")})})));

    EngineOptions o;
    o.budget = 60;
    Engine e(o);
    try {
        e.observe(loop, A("c", {I(0)}));
        FAIL("expected the budget to trip");
    } catch (const NonQuiescenceError& err) {
        CHECK(std::string(err.what()).find("60") != std::string::npos);
        CHECK_FALSE(err.offender.empty());
    }
}

TEST_CASE("a zero step budget is rejected up front") {
    EngineOptions o;
    o.budget = 0;
    CHECK_THROWS_AS(Engine{o}, std::invalid_argument);
}

TEST_CASE("local scopes open fresh names, thread the store and stay hidden") {
    Engine e;
    UnitResult r = e.observe(PP("(local x; out(x, 1)) when out(x, 1) do tell(seen(0))"),
                             Constraint::top());

    CHECK(r.store->entails(PC("seen(0)")));
    CHECK(r.output.free_vars().empty());

    auto atoms = r.store->atom_texts();
    REQUIRE(atoms.size() == 2);
    CHECK(atoms[0] == "out(x#1, 1)");
    CHECK(atoms[1] == "seen(0)");
}

TEST_CASE("unless drops its body exactly when the guard arrives this unit") {
    Engine e1;
    UnitResult dropped = e1.observe(PP("unless a(0) next tell(b(0))"), PC("a(0)"));
    CHECK(dropped.residual->kind == Process::Kind::Skip);
    CHECK(dropped.store->entails(PC("a(0)")));

    Engine e2;
    UnitResult kept = e2.observe(PP("unless a(0) next tell(b(0))"), Constraint::top());
    CHECK(struct_equal(kept.residual, PP("tell(b(0))")));
    CHECK(kept.output.is_true());
    UnitResult after = e2.observe(kept.residual, Constraint::top());
    CHECK(after.store->entails(PC("b(0)")));

    // The guard may be produced by a sibling mid-unit; scan order is moot.
    for (bool rev : {false, true}) {
        EngineOptions o;
        o.reverse_scan = rev;
        Engine e3(o);
        Trace t = e3.run(PP("unless a(0) next tell(b(0)) || tell(a(0))"), 2);
        CHECK(t.units[0].store->entails(PC("a(0)")));
        CHECK_FALSE(t.units[1].store->entails(PC("b(0)")));
    }
}

TEST_CASE("the next-unit projection erases asks and unwraps delays") {
    CHECK(struct_equal(Engine::future(PP("(abs x; p(x)) tell(q(x))")), Process::skip()));
    CHECK(struct_equal(Engine::future(PP("when p(1) do tell(q(1))")), Process::skip()));
    CHECK(struct_equal(Engine::future(PP("next tell(a(1))")), PP("tell(a(1))")));
    CHECK(struct_equal(Engine::future(PP("unless p(1) next tell(a(1))")), PP("tell(a(1))")));

    // A surviving scope keeps its binders but not its init constraint.
    Proc scoped = Process::local({"x"}, A("p", {V("x")}),
                                 Process::next(Process::tell(A("q", {V("x")}))));
    CHECK(struct_equal(Engine::future(scoped),
                       Process::local({"x"}, Process::tell(A("q", {V("x")})))));

    Proc par = Process::par({Process::skip(), Process::next(Process::tell(A("a", {I(1)})))});
    CHECK(struct_equal(Engine::future(par),
                       Process::par({Process::skip(), Process::tell(A("a", {I(1)}))})));
}

TEST_CASE("one observed unit quiesces, projects the store and carries the future") {
    Engine e;
    UnitResult r = e.observe(PP("tell(a(0))"), Constraint::top());
    CHECK(r.output == A("a", {I(0)}));
    CHECK(r.residual->kind == Process::Kind::Skip);
    CHECK(r.steps == 1);

    UnitResult idle = Engine().observe(Process::skip(), Constraint::top());
    CHECK(idle.steps == 0);
    CHECK(idle.output.is_true());
    CHECK(idle.residual->kind == Process::Kind::Skip);
}

TEST_CASE("runs unfold replication, bounded replication and delays") {
    Trace bang = Engine().run(PP("! tell(a(1))"), 3);
    for (const auto& u : bang.units) CHECK(u.store->entails(PC("a(1)")));

    Trace two = Engine().run(PP("![2] tell(a(1))"), 3);
    CHECK(two.units[0].store->entails(PC("a(1)")));
    CHECK(two.units[1].store->entails(PC("a(1)")));
    CHECK(two.units[2].output.is_true());

    Trace delayed = Engine().run(PP("next tell(a(1))"), 2);
    CHECK(delayed.units[0].output.is_true());
    CHECK(delayed.units[1].store->entails(PC("a(1)")));
}

TEST_CASE("the bounded-replication surface form is parse-time sugar") {
    Proc parsed = PP("![3] tell(a(1))");
    Proc expected = expand_bounded_bang(Process::bangn(3, Process::tell(A("a", {I(1)}))));
    CHECK(struct_equal(parsed, expected));
    CHECK_THROWS_AS(PP("![0] skip"), SyntaxError);
}

TEST_CASE("inputs drive their unit and every output entails its input") {
    Engine e;
    Trace t = e.run(PP("when p(0) do tell(q(0))"), 2, {PC("p(0)")});
    CHECK(t.units[0].store->entails(PC("p(0)")));
    CHECK(t.units[0].store->entails(PC("q(0)")));
    CHECK(t.units[1].output.is_true());

    // The ask is not persistent: a late input finds nobody listening.
    Engine late;
    Trace lt = late.run(PP("when p(0) do tell(q(0))"), 2, {Constraint::top(), PC("p(0)")});
    CHECK_FALSE(lt.units[0].store->entails(PC("p(0)")));
    CHECK(lt.units[1].store->entails(PC("p(0)")));
    CHECK_FALSE(lt.units[1].store->entails(PC("q(0)")));
}

TEST_CASE("predicate arities persist across time units") {
    Engine ok;
    Trace t = ok.run(PP("tell(p(1)) || next tell(p(2))"), 2);
    CHECK(t.units[1].store->entails(PC("p(2)")));

    Engine bad;
    CHECK_THROWS_AS(bad.run(PP("tell(p(1)) || next tell(p(2, 3))"), 2),
                    MalformedConstraintError);
}

TEST_CASE("acknowledgment constraints mirror the guard's atoms") {
    CHECK(ack_of(PC("out(k, 5)")) == PC("ack_out(k, 5)"));
    CHECK(ack_of(PC("out(k, 5) /\\ sel(k, l)")) ==
          Constraint::conj({PC("ack_out(k, 5)"), PC("ack_sel(k, l)")}));
    CHECK(ack_of(Constraint::eq(V("x"), I(1))).is_true());
    CHECK(ack_of(Constraint::conj({PC("acc(a, k)"), Constraint::eq(V("x"), I(1))})) ==
          PC("ack_acc(a, k)"));
}

TEST_CASE("a persistent tell re-asserts until acknowledged, then retires") {
    Trace lone = Engine().run(PP("ptell(out(k, 5))"), 3);
    Store plain = just({PC("out(k, 5)")});
    for (const auto& u : lone.units) {
        CHECK(u.store->entails(PC("out(k, 5)")));
        CHECK(obs_equiv_unit(*u.store, plain));
    }

    Trace acked = Engine().run(PP("ptell(out(k, 5)) || whenever out(k, 5) do next tell(done(0))"), 3);
    CHECK(acked.units[0].store->entails(PC("out(k, 5)")));
    CHECK(acked.units[0].store->entails(PC("ack_out(k, 5)")));
    CHECK(acked.units[1].store->entails(PC("done(0)")));
    CHECK_FALSE(acked.units[1].store->entails(PC("out(k, 5)")));
    CHECK_FALSE(acked.units[2].store->entails(PC("out(k, 5)")));
}

TEST_CASE("the persistent-tell expansion has its definitional shape") {
    FreshVarGen g;
    Constraint c = PC("out(k, 5)");
    Proc exp = expand_derived_node(*Process::ptell(c), g);

    REQUIRE(exp->kind == Process::Kind::Local);
    REQUIRE(exp->vars.size() == 2);
    const std::string go = exp->vars[0];
    const std::string stop = exp->vars[1];
    CHECK(go.rfind("go#", 0) == 0);
    CHECK(stop.rfind("stop#", 0) == 0);

    auto token = [](const std::string& v) { return A(kBookkeepingPred, {V(v)}); };
    const Proc& body = exp->body();
    REQUIRE(body->kind == Process::Kind::Par);
    REQUIRE(body->kids.size() == 4);
    CHECK(struct_equal(body->kids[0], Process::tell(token(go))));
    CHECK(struct_equal(body->kids[1],
                       Process::bang(Process::when(token(go), Process::tell(c)))));
    CHECK(struct_equal(body->kids[2],
                       Process::bang(Process::unless(token(stop), Process::tell(token(go))))));
    CHECK(struct_equal(body->kids[3],
                       Process::bang(Process::when(PC("ack_out(k, 5)"),
                                                   Process::bang(Process::tell(token(stop)))))));
}

TEST_CASE("the wait expansions poll, fire once and optionally acknowledge") {
    FreshVarGen g;
    Constraint guard = A("c", {V("x")});
    Proc body = Process::tell(A("got", {V("x")}));
    Proc exp = expand_derived_node(*Process::wait_ack({"x"}, guard, body), g);

    REQUIRE(exp->kind == Process::Kind::Local);
    REQUIRE(exp->vars.size() == 2);
    const std::string stop = exp->vars[0];
    const std::string go = exp->vars[1];
    CHECK(stop.rfind("stop#", 0) == 0);
    CHECK(go.rfind("go#", 0) == 0);

    auto token = [](const std::string& v) { return A(kBookkeepingPred, {V(v)}); };
    const Proc& par = exp->body();
    REQUIRE(par->kind == Process::Kind::Par);
    REQUIRE(par->kids.size() == 3);
    CHECK(struct_equal(par->kids[0], Process::tell(token(go))));
    CHECK(struct_equal(par->kids[1],
                       Process::bang(Process::unless(token(stop), Process::tell(token(go))))));
    Proc acked = Process::par({body, Process::tell(A("ack_c", {V("x")}))});
    Proc armed = Process::abs({"x"}, Constraint::conj({guard, token(go)}),
                              Process::par({acked, Process::bang(Process::tell(token(stop)))}));
    CHECK(struct_equal(par->kids[2], Process::bang(armed)));

    // whenever is the binderless acknowledged wait
    Proc w = Process::tell(A("done", {I(0)}));
    CHECK(struct_equal(Process::whenever(PC("a(0)"), w), Process::wait_ack({}, PC("a(0)"), w)));

    // the plain wait runs its body without confirming the guard
    Engine e;
    UnitResult r = e.observe(PP("tell(c(5)) || wait x; c(x) do tell(got(x))"),
                             Constraint::top());
    CHECK(r.store->entails(PC("got(5)")));
    CHECK_FALSE(r.store->entails(PC("ack_c(5)")));
}

TEST_CASE("expanding derived markers is exhaustive and idempotent on core trees") {
    FreshVarGen g;
    Proc core = PP("(local x) (tell(p(x)) || next ! tell(q(x)))");
    CHECK(struct_equal(expand_derived(core, g), core));

    Proc marked = PP("ptell(a(1)) || wait x; b(x) do next whenever a(1) do skip");
    Proc lowered = expand_derived(marked, g);
    std::string txt = to_text(lowered);
    CHECK(txt.find("ptell") == std::string::npos);
    CHECK(txt.find("wait") == std::string::npos);
    CHECK(txt.find("whenever") == std::string::npos);
}

TEST_CASE("lazy and eager expansion cannot be told apart by observation") {
    Proc p = PP("ptell(c(5)) || waitack x; c(x) do next tell(got(x)) || "
                "whenever c(5) do tell(seen(1))");
    Trace lazy = Engine().run(p, 3);
    EngineOptions o;
    o.eager_expand = true;
    Trace eager = Engine(o).run(p, 3);

    CHECK(obs_equiv(lazy, eager));
    CHECK(lazy.units[0].store->entails(PC("ack_c(5)")));
    CHECK(lazy.units[0].store->entails(PC("seen(1)")));
    CHECK(lazy.units[1].store->entails(PC("got(5)")));
}

TEST_CASE("an unmatched wait transfers itself to the next unit unchanged") {
    Proc w = PP("waitack x; c(x) do tell(got(x))");
    Constraint d = PC("out(z, 1)");

    Engine e1;
    UnitResult r = e1.observe(w, d);
    Store ref = just({d});
    CHECK(obs_equiv_unit(*r.store, ref));

    Trace resumed = e1.run(r.residual, 2, {PC("c(7)")});
    Trace fresh = Engine().run(w, 2, {PC("c(7)")});
    CHECK(obs_equiv(resumed, fresh));
    CHECK(resumed.units[0].store->entails(PC("got(7)")));
    CHECK(resumed.units[0].store->entails(PC("ack_c(7)")));
}

TEST_CASE("a persistent tell meets a waiting abstraction within one unit") {
    Engine e;
    Proc p = PP("ptell(c(5)) || waitack x; c(x) do next tell(got(x))");
    UnitResult r = e.observe(p, Constraint::top());
    CHECK(r.store->entails(PC("c(5)")));
    CHECK(r.store->entails(PC("ack_c(5)")));

    // What remains is the substituted continuation, up to bookkeeping.
    Trace resumed = e.run(r.residual, 2);
    Trace direct = Engine().run(PP("tell(got(5))"), 2);
    CHECK(obs_equiv(resumed, direct));

    Trace wrong = Engine().run(PP("tell(got(6))"), 2);
    CHECK_FALSE(obs_equiv(resumed, wrong));
}

TEST_CASE("scan direction never changes what a program outputs") {
    std::mt19937 rng(424242);
    auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
    auto pred = [&]() { return std::string(1, "pqr"[pick(3)]); };
    auto fact = [&]() { return A(pred(), {I(pick(3))}); };

    auto component = [&]() -> Proc {
        switch (pick(11)) {
            case 0: return Process::tell(fact());
            case 1: return Process::when(fact(), Process::tell(fact()));
            case 2: return Process::unless(fact(), Process::tell(fact()));
            case 3: return Process::next(Process::tell(fact()));
            case 4: return Process::bang(Process::tell(fact()));
            case 5: return Process::bangn(1 + pick(2), Process::tell(fact()));
            case 6:
                return Process::abs({"x"}, A(pred(), {V("x")}),
                                    Process::tell(A(pred(), {V("x")})));
            case 7: return Process::whenever(fact(), Process::next(Process::tell(fact())));
            case 8:
                return Process::wait({"x"}, A(pred(), {V("x")}),
                                     Process::tell(A(pred(), {V("x")})));
            case 9: return Process::ptell(fact());
            default:
                return Process::local({"v"}, Constraint::eq(V("v"), I(pick(3))),
                                      Process::tell(A(pred(), {V("v")})));
        }
    };

    for (int iter = 0; iter < 50; ++iter) {
        std::vector<Proc> parts;
        int n = 2 + pick(5);
        for (int i = 0; i < n; ++i) parts.push_back(component());
        Proc program = Process::par(std::move(parts));
        std::vector<Constraint> inputs = {fact(), fact()};

        EngineOptions rev;
        rev.reverse_scan = true;
        Trace forward = Engine().run(program, 3, inputs);
        Trace backward = Engine(rev).run(program, 3, inputs);
        Trace again = Engine().run(program, 3, inputs);

        CAPTURE(iter);
        CAPTURE(to_text(program));
        CHECK(obs_equiv(forward, backward));
        CHECK(obs_equiv(forward, again));
        for (size_t u = 0; u < inputs.size(); ++u)
            CHECK(forward.units[u].store->entails(inputs[u]));
    }
}

TEST_CASE("observable equivalence erases bookkeeping and closes hidden names") {
    FreshVarGen g;

    Store s1;
    s1.tell(PC("q(1)"), g);
    Store s2;
    s2.add_hidden("stop#7");
    s2.tell(PC("q(1)"), g);
    s2.tell(A(kBookkeepingPred, {V("stop#7")}), g);
    CHECK(obs_equiv_unit(s1, s2));
    CHECK(obs_equiv_unit(s2, s1));

    // Hidden names may differ between runs ...
    Store h1;
    h1.add_hidden("x#1");
    h1.tell(A("p", {V("x#1")}), g);
    Store h2;
    h2.add_hidden("y#9");
    h2.tell(A("p", {V("y#9")}), g);
    CHECK(obs_equiv_unit(h1, h2));

    // ... but the values bound to them still count.
    h1.tell(Constraint::eq(V("x#1"), I(3)), g);
    h2.tell(Constraint::eq(V("y#9"), I(4)), g);
    CHECK_FALSE(obs_equiv_unit(h1, h2));

    Store bad1;
    bad1.tell(Constraint::eq(I(1), I(2)), g);
    Store bad2;
    bad2.tell(Constraint::bottom(), g);
    CHECK(obs_equiv_unit(bad1, bad2));
    CHECK_FALSE(obs_equiv_unit(bad1, s1));
}

TEST_CASE("trace equivalence is unit-wise and demands equal horizons") {
    Trace a = Engine().run(PP("tell(p(1))"), 1);
    Trace b = Engine().run(PP("tell(p(1))"), 1);
    Trace c = Engine().run(PP("tell(q(1))"), 1);
    CHECK(obs_equiv(a, b));
    CHECK_FALSE(obs_equiv(a, c));

    Trace longer = Engine().run(PP("tell(p(1))"), 2);
    CHECK_THROWS_AS(obs_equiv(a, longer), std::invalid_argument);
}

TEST_CASE("process syntax round-trips through its printer") {
    const char* sources[] = {
        "skip",
        "tell(p(1))",
        "ptell(out(k, 5))",
        "when p(1) do tell(q(2))",
        "(abs x; out(k, x)) tell(got(x))",
        "(local x, y; x = 1) (tell(p(x)) || next tell(q(y)))",
        "unless p(0) next tell(q(1))",
        "! tell(p(1))",
        "whenever sel(k, l) do next skip",
        "wait x; c(x) do tell(got(x))",
        "waitack x, y; out(x, y) do next tell(got(x, y))",
        "(local h) (ptell(req(a, h)) || whenever acc(a, h) do next tell(ok(h)))",
    };
    for (const char* src : sources) {
        CAPTURE(src);
        Proc once = PP(src);
        Proc twice = PP(to_text(once));
        CHECK(struct_equal(once, twice));
    }
}

TEST_CASE("malformed process syntax is reported, not repaired") {
    CHECK_THROWS_AS(PP("tell p(1)"), SyntaxError);
    CHECK_THROWS_AS(PP("when p(1) tell(q(1))"), SyntaxError);
    CHECK_THROWS_AS(PP("(abs ; p(1)) skip"), SyntaxError);
    CHECK_THROWS_AS(PP("wait tell; p(tell) do skip"), SyntaxError);
    CHECK_THROWS_AS(PP("tell(outp(x))"), SyntaxError);
    CHECK_THROWS_AS(PP("tell(p(k#1))"), SyntaxError);
    CHECK_THROWS_AS(PP(""), SyntaxError);
}
