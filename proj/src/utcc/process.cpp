#include "sesscc/utcc/process.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace sesscc::utcc {

namespace {

std::shared_ptr<Process> make(Process::Kind k) {
    auto p = std::make_shared<Process>();
    p->kind = k;
    return p;
}

}  // namespace

Proc Process::skip() { return make(Kind::Skip); }

Proc Process::tell(Constraint c) {
    auto p = make(Kind::Tell);
    p->c = std::move(c);
    return p;
}

Proc Process::abs(std::vector<std::string> binders, Constraint guard, Proc body,
                  std::vector<Substitution> exclusions) {
    auto p = make(Kind::Abs);
    p->vars = std::move(binders);
    p->c = std::move(guard);
    p->kids = {std::move(body)};
    p->exclusions = std::move(exclusions);
    return p;
}

Proc Process::when(Constraint guard, Proc body) {
    return abs({}, std::move(guard), std::move(body));
}

Proc Process::par(std::vector<Proc> parts) {
    if (parts.empty()) return skip();
    if (parts.size() == 1) return parts[0];
    auto p = make(Kind::Par);
    p->kids = std::move(parts);
    return p;
}

Proc Process::local(std::vector<std::string> vars, Constraint init, Proc body) {
    if (vars.empty()) throw std::logic_error("local requires at least one variable");
    auto p = make(Kind::Local);
    p->vars = std::move(vars);
    p->c = std::move(init);
    p->kids = {std::move(body)};
    return p;
}

Proc Process::local(std::vector<std::string> vars, Proc body) {
    return local(std::move(vars), Constraint::top(), std::move(body));
}

Proc Process::next(Proc body) {
    auto p = make(Kind::Next);
    p->kids = {std::move(body)};
    return p;
}

Proc Process::unless(Constraint guard, Proc body) {
    auto p = make(Kind::Unless);
    p->c = std::move(guard);
    p->kids = {std::move(body)};
    return p;
}

Proc Process::bang(Proc body) {
    auto p = make(Kind::Bang);
    p->kids = {std::move(body)};
    return p;
}

Proc Process::bangn(int n, Proc body) {
    if (n < 0) throw std::logic_error("bounded replication needs n >= 0");
    auto p = make(Kind::BangN);
    p->n = n;
    p->kids = {std::move(body)};
    return p;
}

Proc Process::ptell(Constraint c) {
    auto p = make(Kind::PTell);
    p->c = std::move(c);
    return p;
}

Proc Process::wait(std::vector<std::string> binders, Constraint guard, Proc body) {
    auto p = make(Kind::Wait);
    p->vars = std::move(binders);
    p->c = std::move(guard);
    p->kids = {std::move(body)};
    return p;
}

Proc Process::wait_ack(std::vector<std::string> binders, Constraint guard, Proc body) {
    auto p = make(Kind::WaitAck);
    p->vars = std::move(binders);
    p->c = std::move(guard);
    p->kids = {std::move(body)};
    return p;
}

Proc Process::whenever(Constraint guard, Proc body) {
    return wait_ack({}, std::move(guard), std::move(body));
}

int compare(const Proc& a, const Proc& b) {
    if (a == b) return 0;
    if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
    if (a->n != b->n) return a->n < b->n ? -1 : 1;
    if (a->vars != b->vars) return a->vars < b->vars ? -1 : 1;
    if (int cc = a->c.compare(b->c); cc != 0) return cc;
    if (a->exclusions != b->exclusions) return a->exclusions < b->exclusions ? -1 : 1;
    size_t n = std::min(a->kids.size(), b->kids.size());
    for (size_t i = 0; i < n; ++i) {
        int c = compare(a->kids[i], b->kids[i]);
        if (c != 0) return c;
    }
    if (a->kids.size() != b->kids.size()) return a->kids.size() < b->kids.size() ? -1 : 1;
    return 0;
}

bool struct_equal(const Proc& a, const Proc& b) { return compare(a, b) == 0; }

std::set<std::string> free_vars(const Proc& p) {
    std::set<std::string> out;
    switch (p->kind) {
        case Process::Kind::Skip:
            break;
        case Process::Kind::Tell:
        case Process::Kind::PTell:
            out = p->c.free_vars();
            break;
        case Process::Kind::Abs:
        case Process::Kind::Wait:
        case Process::Kind::WaitAck:
        case Process::Kind::Local: {
            out = p->c.free_vars();
            auto fb = free_vars(p->body());
            out.insert(fb.begin(), fb.end());
            for (const auto& v : p->vars) out.erase(v);
            // Exclusion terms refer to the enclosing scope, not the binders.
            for (const auto& sub : p->exclusions)
                for (const auto& [_, t] : sub) t.collect_vars(out);
            break;
        }
        case Process::Kind::Par:
            for (const auto& k : p->kids) {
                auto fk = free_vars(k);
                out.insert(fk.begin(), fk.end());
            }
            break;
        case Process::Kind::Next:
        case Process::Kind::Bang:
        case Process::Kind::BangN:
            out = free_vars(p->body());
            break;
        case Process::Kind::Unless: {
            out = p->c.free_vars();
            auto fb = free_vars(p->body());
            out.insert(fb.begin(), fb.end());
            break;
        }
    }
    return out;
}

namespace {

/// Picks a binder rename avoiding every name in `taken`.
std::string rename_binder(const std::string& base, const std::set<std::string>& taken) {
    std::string stem = base.substr(0, base.find('#'));
    for (int i = 1;; ++i) {
        std::string cand = stem + "#r" + std::to_string(i);
        if (!taken.count(cand)) return cand;
    }
}

Proc substitute_binding(const Proc& p, const Substitution& sub) {
    // Shared handling for the binder forms (Abs, Wait, WaitAck, Local).
    Substitution inner = sub;
    for (const auto& v : p->vars) inner.erase(v);

    std::set<std::string> range_vars;
    for (const auto& [_, t] : inner) t.collect_vars(range_vars);

    std::vector<std::string> binders = p->vars;
    Substitution rename;
    if (!range_vars.empty()) {
        std::set<std::string> taken = range_vars;
        auto fv = free_vars(p);
        taken.insert(fv.begin(), fv.end());
        for (const auto& b : binders) taken.insert(b);
        for (auto& b : binders) {
            if (range_vars.count(b)) {
                std::string fresh = rename_binder(b, taken);
                taken.insert(fresh);
                rename[b] = Term::var(fresh);
                b = fresh;
            }
        }
    }

    Constraint guard = p->c;
    Proc body = p->body();
    if (!rename.empty()) {
        guard = guard.substitute(rename);
        body = substitute(body, rename);
    }
    guard = guard.substitute(inner);
    body = inner.empty() ? body : substitute(body, inner);

    std::vector<Substitution> excl;
    excl.reserve(p->exclusions.size());
    for (const auto& e : p->exclusions) {
        Substitution e2;
        for (const auto& [k, t] : e) {
            auto it = rename.find(k);
            e2[it == rename.end() ? k : it->second.name()] = t.substitute(inner);
        }
        excl.push_back(std::move(e2));
    }

    switch (p->kind) {
        case Process::Kind::Abs:
            return Process::abs(binders, guard, body, excl);
        case Process::Kind::Wait:
            return Process::wait(binders, guard, body);
        case Process::Kind::WaitAck:
            return Process::wait_ack(binders, guard, body);
        case Process::Kind::Local:
            return Process::local(binders, guard, body);
        default:
            throw std::logic_error("not a binding form");
    }
}

}  // namespace

Proc substitute(const Proc& p, const Substitution& sub) {
    if (sub.empty()) return p;
    switch (p->kind) {
        case Process::Kind::Skip:
            return p;
        case Process::Kind::Tell:
            return Process::tell(p->c.substitute(sub));
        case Process::Kind::PTell:
            return Process::ptell(p->c.substitute(sub));
        case Process::Kind::Abs:
        case Process::Kind::Wait:
        case Process::Kind::WaitAck:
        case Process::Kind::Local:
            return substitute_binding(p, sub);
        case Process::Kind::Par: {
            std::vector<Proc> kids;
            kids.reserve(p->kids.size());
            for (const auto& k : p->kids) kids.push_back(substitute(k, sub));
            return Process::par(std::move(kids));
        }
        case Process::Kind::Next:
            return Process::next(substitute(p->body(), sub));
        case Process::Kind::Unless:
            return Process::unless(p->c.substitute(sub), substitute(p->body(), sub));
        case Process::Kind::Bang:
            return Process::bang(substitute(p->body(), sub));
        case Process::Kind::BangN:
            return Process::bangn(p->n, substitute(p->body(), sub));
    }
    throw std::logic_error("unreachable");
}

namespace {

void flatten_par(const Proc& p, std::vector<Proc>& out) {
    if (p->kind == Process::Kind::Par) {
        for (const auto& k : p->kids) flatten_par(k, out);
    } else if (p->kind != Process::Kind::Skip) {
        out.push_back(p);
    }
}

}  // namespace

Proc congr_normalize(const Proc& p) {
    switch (p->kind) {
        case Process::Kind::Skip:
        case Process::Kind::Tell:
        case Process::Kind::PTell:
            return p;
        case Process::Kind::Par: {
            std::vector<Proc> parts;
            for (const auto& k : p->kids) flatten_par(congr_normalize(k), parts);
            std::sort(parts.begin(), parts.end(),
                      [](const Proc& a, const Proc& b) { return compare(a, b) < 0; });
            return Process::par(std::move(parts));
        }
        case Process::Kind::Local: {
            Proc body = congr_normalize(p->body());
            std::vector<std::string> vars = p->vars;
            Constraint init = p->c;
            // Merge an immediately nested scope when no capture is possible.
            if (body->kind == Process::Kind::Local) {
                std::set<std::string> outer(vars.begin(), vars.end());
                auto init_fv = init.free_vars();
                bool ok = true;
                for (const auto& v : body->vars)
                    if (outer.count(v) || init_fv.count(v)) { ok = false; break; }
                if (ok) {
                    vars.insert(vars.end(), body->vars.begin(), body->vars.end());
                    init = Constraint::conj({init, body->c});
                    body = body->body();
                }
            }
            return Process::local(std::move(vars), std::move(init), std::move(body));
        }
        case Process::Kind::Abs:
            return Process::abs(p->vars, p->c, congr_normalize(p->body()), p->exclusions);
        case Process::Kind::Next:
            return Process::next(congr_normalize(p->body()));
        case Process::Kind::Unless:
            return Process::unless(p->c, congr_normalize(p->body()));
        case Process::Kind::Bang:
            return Process::bang(congr_normalize(p->body()));
        case Process::Kind::BangN:
            return Process::bangn(p->n, congr_normalize(p->body()));
        case Process::Kind::Wait:
            return Process::wait(p->vars, p->c, congr_normalize(p->body()));
        case Process::Kind::WaitAck:
            return Process::wait_ack(p->vars, p->c, congr_normalize(p->body()));
    }
    throw std::logic_error("unreachable");
}

Proc expand_bounded_bang(const Proc& p) {
    switch (p->kind) {
        case Process::Kind::Skip:
        case Process::Kind::Tell:
        case Process::Kind::PTell:
            return p;
        case Process::Kind::BangN: {
            Proc body = expand_bounded_bang(p->body());
            std::vector<Proc> copies;
            Proc delayed = body;
            for (int i = 0; i < p->n; ++i) {
                copies.push_back(delayed);
                delayed = Process::next(delayed);
            }
            return Process::par(std::move(copies));
        }
        case Process::Kind::Par: {
            std::vector<Proc> kids;
            kids.reserve(p->kids.size());
            for (const auto& k : p->kids) kids.push_back(expand_bounded_bang(k));
            return Process::par(std::move(kids));
        }
        case Process::Kind::Abs:
            return Process::abs(p->vars, p->c, expand_bounded_bang(p->body()), p->exclusions);
        case Process::Kind::Local:
            return Process::local(p->vars, p->c, expand_bounded_bang(p->body()));
        case Process::Kind::Next:
            return Process::next(expand_bounded_bang(p->body()));
        case Process::Kind::Unless:
            return Process::unless(p->c, expand_bounded_bang(p->body()));
        case Process::Kind::Bang:
            return Process::bang(expand_bounded_bang(p->body()));
        case Process::Kind::Wait:
            return Process::wait(p->vars, p->c, expand_bounded_bang(p->body()));
        case Process::Kind::WaitAck:
            return Process::wait_ack(p->vars, p->c, expand_bounded_bang(p->body()));
    }
    throw std::logic_error("unreachable");
}

Constraint ack_of(const Constraint& c) {
    std::vector<Constraint> acks;
    for (const auto& part : c.flat()) {
        if (part.kind() == Constraint::Kind::AtomC) {
            const Atom& a = part.get_atom();
            acks.push_back(Constraint::atom(std::string(kAckPrefix) + a.pred, a.args));
        }
    }
    return Constraint::conj(std::move(acks));
}

namespace {

Constraint book_atom(const std::string& v) {
    return Constraint::atom(kBookkeepingPred, {Term::var(v)});
}

}  // namespace

Proc expand_derived_node(const Process& p, FreshVarGen& fresh) {
    switch (p.kind) {
        case Process::Kind::PTell: {
            // A persistent tell keeps re-asserting c each unit until its
            // acknowledgment is observed, then retires its go token.
            std::string go = fresh.fresh("go");
            std::string stop = fresh.fresh("stop");
            Constraint ack = ack_of(p.c);
            return Process::local(
                {go, stop},
                Process::par({
                    Process::tell(book_atom(go)),
                    Process::bang(Process::when(book_atom(go), Process::tell(p.c))),
                    Process::bang(Process::unless(book_atom(stop),
                                                  Process::tell(book_atom(go)))),
                    Process::bang(Process::when(ack,
                                                Process::bang(Process::tell(book_atom(stop))))),
                }));
        }
        case Process::Kind::Wait:
        case Process::Kind::WaitAck: {
            // Poll for the guard each unit; on the first match run the body
            // exactly once and retire. The acknowledging variant also
            // confirms the matched guard atoms.
            std::string stop = fresh.fresh("stop");
            std::string go = fresh.fresh("go");
            Proc body = p.body();
            if (p.kind == Process::Kind::WaitAck)
                body = Process::par({body, Process::tell(ack_of(p.c))});
            Proc armed = Process::abs(
                p.vars, Constraint::conj({p.c, book_atom(go)}),
                Process::par({body, Process::bang(Process::tell(book_atom(stop)))}));
            return Process::local(
                {stop, go},
                Process::par({
                    Process::tell(book_atom(go)),
                    Process::bang(Process::unless(book_atom(stop),
                                                  Process::tell(book_atom(go)))),
                    Process::bang(armed),
                }));
        }
        default:
            throw std::logic_error("not a derived marker");
    }
}

Proc expand_derived(const Proc& p, FreshVarGen& fresh) {
    switch (p->kind) {
        case Process::Kind::Skip:
        case Process::Kind::Tell:
            return p;
        case Process::Kind::PTell:
            return expand_derived(expand_derived_node(*p, fresh), fresh);
        case Process::Kind::Wait:
        case Process::Kind::WaitAck: {
            Proc inner = Process::wait(p->vars, p->c, expand_derived(p->body(), fresh));
            if (p->kind == Process::Kind::WaitAck)
                inner = Process::wait_ack(p->vars, p->c, inner->body());
            return expand_derived_node(*inner, fresh);
        }
        case Process::Kind::Abs:
            return Process::abs(p->vars, p->c, expand_derived(p->body(), fresh), p->exclusions);
        case Process::Kind::Par: {
            std::vector<Proc> kids;
            kids.reserve(p->kids.size());
            for (const auto& k : p->kids) kids.push_back(expand_derived(k, fresh));
            return Process::par(std::move(kids));
        }
        case Process::Kind::Local:
            return Process::local(p->vars, p->c, expand_derived(p->body(), fresh));
        case Process::Kind::Next:
            return Process::next(expand_derived(p->body(), fresh));
        case Process::Kind::Unless:
            return Process::unless(p->c, expand_derived(p->body(), fresh));
        case Process::Kind::Bang:
            return Process::bang(expand_derived(p->body(), fresh));
        case Process::Kind::BangN:
            return Process::bangn(p->n, expand_derived(p->body(), fresh));
    }
    throw std::logic_error("unreachable");
}

namespace {

void join_names(std::ostringstream& os, const std::vector<std::string>& names) {
    for (size_t i = 0; i < names.size(); ++i) {
        if (i) os << ", ";
        os << names[i];
    }
}

void print(std::ostringstream& os, const Proc& p);

/// Parenthesizes Par bodies so that prefix forms keep their tight binding.
void print_body(std::ostringstream& os, const Proc& p) {
    if (p->kind == Process::Kind::Par) {
        os << "(";
        print(os, p);
        os << ")";
    } else {
        print(os, p);
    }
}

void print(std::ostringstream& os, const Proc& p) {
    using K = Process::Kind;
    switch (p->kind) {
        case K::Skip:
            os << "skip";
            return;
        case K::Tell:
            os << "tell(" << p->c.text() << ")";
            return;
        case K::PTell:
            os << "ptell(" << p->c.text() << ")";
            return;
        case K::Abs:
            if (p->vars.empty()) {
                os << "when " << p->c.text() << " do ";
            } else {
                os << "(abs ";
                join_names(os, p->vars);
                os << "; " << p->c.text() << ") ";
            }
            if (!p->exclusions.empty()) {
                os << "excluding [";
                for (size_t i = 0; i < p->exclusions.size(); ++i) {
                    if (i) os << "; ";
                    os << substitution_text(p->exclusions[i]);
                }
                os << "] ";
            }
            print_body(os, p->body());
            return;
        case K::Par:
            for (size_t i = 0; i < p->kids.size(); ++i) {
                if (i) os << " || ";
                print_body(os, p->kids[i]);
            }
            return;
        case K::Local:
            os << "(local ";
            join_names(os, p->vars);
            if (!p->c.is_true()) os << "; " << p->c.text();
            os << ") ";
            print_body(os, p->body());
            return;
        case K::Next:
            os << "next ";
            print_body(os, p->body());
            return;
        case K::Unless:
            os << "unless " << p->c.text() << " next ";
            print_body(os, p->body());
            return;
        case K::Bang:
            os << "! ";
            print_body(os, p->body());
            return;
        case K::BangN:
            os << "![" << p->n << "] ";
            print_body(os, p->body());
            return;
        case K::Wait:
            os << "wait ";
            join_names(os, p->vars);
            os << "; " << p->c.text() << " do ";
            print_body(os, p->body());
            return;
        case K::WaitAck:
            if (p->vars.empty()) {
                os << "whenever " << p->c.text() << " do ";
            } else {
                os << "waitack ";
                join_names(os, p->vars);
                os << "; " << p->c.text() << " do ";
            }
            print_body(os, p->body());
            return;
    }
}

}  // namespace

std::string to_text(const Proc& p) {
    std::ostringstream os;
    print(os, p);
    return os.str();
}

namespace {

using syn::Lexer;
using syn::TermScope;
using syn::Token;

std::vector<std::string> parse_binders(Lexer& lx) {
    std::vector<std::string> names;
    do {
        Token b = lx.expect_ident("binder list");
        if (syn::is_reserved_word(b.text)) lx.fail_at(b, "reserved word used as binder");
        names.push_back(b.text);
    } while (lx.accept(","));
    return names;
}

long parse_bound(Lexer& lx) {
    const Token& t = lx.peek();
    if (t.kind != Token::Kind::Int) lx.fail("expected a replication bound");
    if (t.ival < 1) lx.fail_at(t, "replication bound must be positive");
    return static_cast<long>(lx.next().ival);
}

TermScope with_bound(TermScope scope, const std::vector<std::string>& names) {
    for (const auto& n : names) scope.bound.insert(n);
    return scope;
}

Proc parse_prefix(Lexer& lx, const TermScope& scope);

Proc parse_par(Lexer& lx, const TermScope& scope) {
    std::vector<Proc> parts;
    parts.push_back(parse_prefix(lx, scope));
    while (lx.accept("||")) parts.push_back(parse_prefix(lx, scope));
    return Process::par(std::move(parts));
}

Proc parse_prefix(Lexer& lx, const TermScope& scope) {
    if (lx.accept("skip")) return Process::skip();
    if (lx.at("tell") || lx.at("ptell")) {
        bool persistent = lx.at("ptell");
        lx.next();
        lx.expect("(", "tell");
        Constraint c = syn::parse_constraint(lx, scope);
        lx.expect(")", "tell");
        return persistent ? Process::ptell(std::move(c)) : Process::tell(std::move(c));
    }
    if (lx.accept("!")) {
        if (lx.accept("[")) {
            long n = parse_bound(lx);
            lx.expect("]", "replication bound");
            return Process::bangn(static_cast<int>(n), parse_prefix(lx, scope));
        }
        return Process::bang(parse_prefix(lx, scope));
    }
    if (lx.accept("next")) return Process::next(parse_prefix(lx, scope));
    if (lx.accept("unless")) {
        Constraint c = syn::parse_constraint(lx, scope);
        lx.expect("next", "unless");
        return Process::unless(std::move(c), parse_prefix(lx, scope));
    }
    if (lx.accept("when")) {
        Constraint c = syn::parse_constraint(lx, scope);
        lx.expect("do", "when");
        return Process::when(std::move(c), parse_prefix(lx, scope));
    }
    if (lx.accept("whenever")) {
        Constraint c = syn::parse_constraint(lx, scope);
        lx.expect("do", "whenever");
        return Process::whenever(std::move(c), parse_prefix(lx, scope));
    }
    if (lx.at("wait") || lx.at("waitack")) {
        bool acked = lx.at("waitack");
        lx.next();
        auto binders = parse_binders(lx);
        lx.expect(";", "wait");
        TermScope inner = with_bound(scope, binders);
        Constraint c = syn::parse_constraint(lx, inner);
        lx.expect("do", "wait");
        Proc body = parse_prefix(lx, inner);
        return acked ? Process::wait_ack(std::move(binders), std::move(c), std::move(body))
                     : Process::wait(std::move(binders), std::move(c), std::move(body));
    }
    if (lx.at("(") && lx.at("abs", 1)) {
        lx.next();
        lx.next();
        auto binders = parse_binders(lx);
        lx.expect(";", "abs");
        TermScope inner = with_bound(scope, binders);
        Constraint c = syn::parse_constraint(lx, inner);
        lx.expect(")", "abs");
        return Process::abs(std::move(binders), std::move(c), parse_prefix(lx, inner));
    }
    if (lx.at("(") && lx.at("local", 1)) {
        lx.next();
        lx.next();
        auto binders = parse_binders(lx);
        TermScope inner = with_bound(scope, binders);
        Constraint init = Constraint::top();
        if (lx.accept(";")) init = syn::parse_constraint(lx, inner);
        lx.expect(")", "local");
        return Process::local(std::move(binders), std::move(init), parse_prefix(lx, inner));
    }
    if (lx.accept("(")) {
        Proc p = parse_par(lx, scope);
        lx.expect(")", "process group");
        return p;
    }
    lx.fail("expected a process");
}

}  // namespace

Proc parse_process(Lexer& lx, const TermScope& scope) {
    // ![n] is surface sugar; parsed programs contain only unbounded
    // replication and the other core constructs.
    return expand_bounded_bang(parse_par(lx, scope));
}

Proc parse_process_text(const std::string& src) {
    Lexer lx(src, false);
    TermScope scope;
    Proc p = parse_process(lx, scope);
    if (!lx.done()) lx.fail("trailing input after process");
    return p;
}

}  // namespace sesscc::utcc
