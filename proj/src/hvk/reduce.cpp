#include "sesscc/hvk/lang.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <tuple>

namespace sesscc::hvk {

namespace {

using Kind = HProcess::Kind;

constexpr int kUnfoldBudget = 1000;

struct Flattener {
    NormalForm* nf;
    FreshVarGen* fresh;
    std::set<std::string> outer_free;      // free names of the whole input
    std::set<std::string> outer_procvars;  // free process variables of the whole input
    int unfolds_left = kUnfoldBudget;

    bool name_taken(const std::string& n) const {
        if (outer_free.count(n)) return true;
        for (const std::string& nu : nf->nus)
            if (nu == n) return true;
        return false;
    }

    bool decl_name_taken(const std::string& n) const {
        if (outer_procvars.count(n)) return true;
        for (const Decl& d : nf->decls)
            if (d.name == n) return true;
        return false;
    }

    const Decl* find_decl(const std::string& n) const {
        for (const Decl& d : nf->decls)
            if (d.name == n) return &d;
        return nullptr;
    }

    void flatten(HProc q) {
        switch (q->kind) {
            case Kind::Par:
                for (const HProc& k : q->kids) flatten(k);
                return;
            case Kind::Hide: {
                std::string nu = q->name;
                HProc body = q->body();
                if (name_taken(nu)) {
                    std::string fresh_nu = fresh->fresh(nu);
                    body = subst_names(body, {{nu, fresh_nu}}, *fresh);
                    nu = fresh_nu;
                }
                nf->nus.push_back(nu);
                flatten(body);
                return;
            }
            case Kind::DefIn: {
                std::map<std::string, std::string> ren = merge_decls(q->decls);
                flatten(rename_proc_vars(q->body(), ren));
                return;
            }
            case Kind::Call: {
                unfold_call(q);
                return;
            }
            case Kind::Inact:
                return;
            default:
                nf->threads.push_back(q);
                return;
        }
    }

    // Returns the renaming applied to clashing declaration names; the caller
    // must rewrite calls in the group's scope body with it.
    std::map<std::string, std::string> merge_decls(const std::vector<Decl>& group) {
        std::map<std::string, std::string> ren;
        for (const Decl& d : group)
            if (decl_name_taken(d.name)) ren[d.name] = fresh->fresh(d.name);
        for (Decl d : group) {
            if (auto it = ren.find(d.name); it != ren.end()) d.name = it->second;
            d.body = rename_proc_vars(d.body, ren);
            nf->decls.push_back(std::move(d));
        }
        return ren;
    }

    static HProc rename_proc_vars(const HProc& p, const std::map<std::string, std::string>& ren) {
        if (ren.empty()) return p;
        if (p->kind == Kind::Call) {
            auto it = ren.find(p->name);
            if (it == ren.end()) return p;
            HProcess n = *p;
            n.name = it->second;
            return std::make_shared<const HProcess>(std::move(n));
        }
        std::map<std::string, std::string> inner = ren;
        if (p->kind == Kind::DefIn)
            for (const Decl& d : p->decls) inner.erase(d.name);
        HProcess n = *p;
        for (auto& [l, q] : n.arms) q = rename_proc_vars(q, inner);
        for (Decl& d : n.decls) d.body = rename_proc_vars(d.body, inner);
        for (HProc& q : n.kids) q = rename_proc_vars(q, inner);
        return std::make_shared<const HProcess>(std::move(n));
    }

    void unfold_call(const HProc& q) {
        const Decl* d = find_decl(q->name);
        if (!d) throw HvkError("call to unknown definition '" + q->name + "'");
        if (q->exprs.size() != d->params.size())
            throw HvkError("'" + q->name + "' takes " + std::to_string(d->params.size()) +
                           " arguments, got " + std::to_string(q->exprs.size()));
        if (--unfolds_left < 0)
            throw HvkError("definition unfolding did not terminate after " +
                           std::to_string(kUnfoldBudget) + " expansions (at '" + q->name + "')");
        Substitution values;
        std::map<std::string, std::string> chans;
        for (size_t i = 0; i < q->exprs.size(); ++i) {
            const Param& pr = d->params[i];
            if (pr.is_chan) {
                const Term& a = q->exprs[i];
                if (a.kind() != Term::Kind::Sym && a.kind() != Term::Kind::Var)
                    throw HvkError("argument " + std::to_string(i + 1) + " of '" + q->name +
                                   "' is a channel and must be a name, got " + a.text());
                chans[pr.name] = a.name();
            } else {
                values[pr.name] = eval_expr(q->exprs[i]);
            }
        }
        HProc body = subst_values(d->body, values);
        body = subst_names(body, chans, *fresh);
        flatten(body);
    }
};

}  // namespace

HProc NormalForm::to_process() const {
    HProc body = HProcess::par(threads);
    for (auto it = nus.rbegin(); it != nus.rend(); ++it) body = HProcess::hide(*it, body);
    if (!decls.empty()) body = HProcess::def_in(decls, body);
    return body;
}

NormalForm normal_form(const HProc& p, FreshVarGen* fresh) {
    FreshVarGen local;
    if (!fresh) {
        local = primed_gen(p);
        fresh = &local;
    }
    NormalForm nf;
    Flattener fl{&nf, fresh, free_names(p), free_process_vars(p)};
    fl.flatten(p);
    return nf;
}

bool SessionTable::blocks(const std::string& chan) const {
    if (killed.count(chan)) return true;
    auto it = remaining.find(chan);
    return it != remaining.end() && it->second <= 0;
}

const char* rule_name(Redex::Rule r) {
    switch (r) {
        case Redex::Rule::Link: return "Link";
        case Redex::Rule::Com: return "Com";
        case Redex::Rule::Pass: return "Pass";
        case Redex::Rule::Label: return "Label";
        case Redex::Rule::TimedLink: return "TimedLink";
    }
    return "?";
}

std::string Redex::describe() const {
    std::ostringstream os;
    os << rule_name(rule) << "(" << active << "," << passive << ")";
    return os.str();
}

namespace {

/// Truth of a ground constraint; nullopt when some part stays symbolic.
std::optional<bool> decide(const Constraint& c) {
    switch (c.kind()) {
        case Constraint::Kind::True:
            return true;
        case Constraint::Kind::False:
            return false;
        case Constraint::Kind::Eq:
        case Constraint::Kind::Neq: {
            Term a = c.lhs().fold(), b = c.rhs().fold();
            if (!is_value(a) || !is_value(b)) return std::nullopt;
            bool eq = a.compare(b) == 0;
            return c.kind() == Constraint::Kind::Eq ? eq : !eq;
        }
        case Constraint::Kind::And: {
            bool all = true;
            for (const Constraint& part : c.conjuncts()) {
                std::optional<bool> v = decide(part);
                if (v && !*v) return false;
                if (!v) all = false;
            }
            if (all) return true;
            return std::nullopt;
        }
        default:
            return std::nullopt;
    }
}

/// Evaluates an acceptance precondition against a concrete requested
/// duration. Anything in a precondition that stays undecided after the
/// duration is known is an error, loudly.
bool precond_holds(const HProcess& req, const HProcess& acc) {
    Term m = eval_expr(req.exprs[0]);
    if (m.kind() != Term::Kind::Int || m.int_value() < 0)
        throw HvkError("session duration must be a non-negative integer, got " + m.text());
    Constraint pre = acc.precond.substitute({{"dur_" + acc.chan, m}});
    if (std::optional<bool> v = decide(pre)) return *v;
    throw HvkError("acceptance precondition does not decide to a truth value: " +
                   pre.fold().text());
}

bool branch_has(const HProcess& br, const std::string& label) {
    for (const auto& [l, q] : br.arms)
        if (l == label) return true;
    return false;
}

std::optional<Redex> complement(const std::vector<HProc>& threads, size_t a, size_t b,
                                const SessionTable& sessions) {
    const HProcess& A = *threads[a];
    const HProcess& B = *threads[b];
    auto mk = [&](Redex::Rule r) { return Redex{r, a, b}; };
    switch (A.kind) {
        case Kind::Request:
            if (B.kind == Kind::Accept && A.name == B.name) return mk(Redex::Rule::Link);
            return std::nullopt;
        case Kind::TimedRequest:
            if (B.kind == Kind::DeclAccept && A.name == B.name && precond_holds(A, B))
                return mk(Redex::Rule::TimedLink);
            return std::nullopt;
        case Kind::Send:
            if (B.kind == Kind::Receive && A.chan == B.chan && !sessions.blocks(A.chan))
                return mk(Redex::Rule::Com);
            return std::nullopt;
        case Kind::Throw:
            if (B.kind == Kind::Catch && A.chan == B.chan && !sessions.blocks(A.chan))
                return mk(Redex::Rule::Pass);
            return std::nullopt;
        case Kind::Select:
            if (B.kind == Kind::Branch && A.chan == B.chan && branch_has(B, A.label) &&
                !sessions.blocks(A.chan))
                return mk(Redex::Rule::Label);
            return std::nullopt;
        default:
            return std::nullopt;
    }
}

}  // namespace

RedexScan find_redexes(const std::vector<HProc>& threads, const SessionTable& sessions) {
    RedexScan scan;
    for (size_t i = 0; i < threads.size(); ++i)
        for (size_t j = i + 1; j < threads.size(); ++j) {
            if (auto r = complement(threads, i, j, sessions)) scan.redexes.push_back(*r);
            if (auto r = complement(threads, j, i, sessions)) scan.redexes.push_back(*r);
        }
    std::sort(scan.redexes.begin(), scan.redexes.end(), [](const Redex& x, const Redex& y) {
        auto key = [](const Redex& r) {
            return std::tuple(std::min(r.active, r.passive), std::max(r.active, r.passive),
                              static_cast<int>(r.rule));
        };
        return key(x) < key(y);
    });
    std::map<size_t, int> uses;
    for (const Redex& r : scan.redexes) {
        ++uses[r.active];
        ++uses[r.passive];
    }
    for (const auto& [idx, n] : uses)
        if (n > 1) scan.multi_partner.insert(idx);
    return scan;
}

namespace {

struct Applied {
    HProc active;
    HProc passive;
    FiredEvent event;
};

/// Fires one redex over the original thread contents. Links mint their
/// session channel through `fresh` and report it via the event.
Applied apply_redex(const std::vector<HProc>& threads, const Redex& r, FreshVarGen& fresh) {
    const HProcess& A = *threads[r.active];
    const HProcess& B = *threads[r.passive];
    Applied out;
    switch (r.rule) {
        case Redex::Rule::Link:
        case Redex::Rule::TimedLink: {
            std::string k = fresh.fresh(A.chan);
            out.active = subst_names(A.body(), {{A.chan, k}}, fresh);
            out.passive = subst_names(B.body(), {{B.chan, k}}, fresh);
            out.event.kind = r.rule == Redex::Rule::Link ? FiredEvent::Kind::Link
                                                         : FiredEvent::Kind::TimedLink;
            out.event.service = A.name;
            out.event.chan = k;
            if (r.rule == Redex::Rule::TimedLink) out.event.values = {eval_expr(A.exprs[0])};
            return out;
        }
        case Redex::Rule::Com: {
            std::vector<Term> values;
            values.reserve(A.exprs.size());
            for (const Term& e : A.exprs) values.push_back(eval_expr(e));
            if (values.size() != B.vars.size())
                throw HvkError("send of " + std::to_string(values.size()) + " values on '" +
                               A.chan + "' meets a receive of " + std::to_string(B.vars.size()));
            Substitution sub;
            for (size_t i = 0; i < values.size(); ++i) sub[B.vars[i]] = values[i];
            out.active = A.body();
            out.passive = subst_values(B.body(), sub);
            out.event.kind = FiredEvent::Kind::Com;
            out.event.chan = A.chan;
            out.event.values = std::move(values);
            return out;
        }
        case Redex::Rule::Pass: {
            out.active = A.body();
            out.passive = subst_names(B.body(), {{B.chan2, A.chan2}}, fresh);
            out.event.kind = FiredEvent::Kind::Pass;
            out.event.chan = A.chan;
            out.event.delegated = A.chan2;
            return out;
        }
        case Redex::Rule::Label: {
            out.active = A.body();
            for (const auto& [l, q] : B.arms)
                if (l == A.label) out.passive = q;
            out.event.kind = FiredEvent::Kind::Label;
            out.event.chan = A.chan;
            out.event.label = A.label;
            return out;
        }
    }
    throw HvkError("unreachable redex rule");
}

FiredEvent apply_if(const HProcess& p, HProc& replacement) {
    Term cond = eval_expr(p.exprs[0]);
    if (cond.kind() != Term::Kind::Bool)
        throw EvalError("condition does not evaluate to a boolean: " + p.exprs[0].text() +
                        " -> " + cond.text());
    FiredEvent ev;
    ev.kind = cond.bool_value() ? FiredEvent::Kind::IfTrue : FiredEvent::Kind::IfFalse;
    replacement = cond.bool_value() ? p.kids[0] : p.kids[1];
    return ev;
}

std::string event_text(const FiredEvent& ev) {
    switch (ev.kind) {
        case FiredEvent::Kind::Link:
            return "Link(" + ev.service + ", " + ev.chan + ")";
        case FiredEvent::Kind::TimedLink:
            return "TimedLink(" + ev.service + ", " + ev.chan + ", m=" + ev.values[0].text() +
                   ")";
        case FiredEvent::Kind::Com: {
            std::string vs;
            for (size_t i = 0; i < ev.values.size(); ++i) {
                if (i) vs += ", ";
                vs += ev.values[i].text();
            }
            return "Com(" + ev.chan + ": " + vs + ")";
        }
        case FiredEvent::Kind::Pass:
            return "Pass(" + ev.chan + ", " + ev.delegated + ")";
        case FiredEvent::Kind::Label:
            return "Label(" + ev.chan + ", " + ev.label + ")";
        case FiredEvent::Kind::IfTrue:
            return "If:then";
        case FiredEvent::Kind::IfFalse:
            return "If:else";
        case FiredEvent::Kind::Kill:
            return "Kill(" + ev.chan + ")";
    }
    return "?";
}

}  // namespace

HProc reduce_step(const HProc& p) {
    FreshVarGen gen = primed_gen(p);
    NormalForm nf = normal_form(p, &gen);
    RedexScan scan = find_redexes(nf.threads);

    std::optional<size_t> first_if;
    for (size_t i = 0; i < nf.threads.size(); ++i)
        if (nf.threads[i]->kind == Kind::If) {
            first_if = i;
            break;
        }
    const Redex* first_redex = scan.redexes.empty() ? nullptr : &scan.redexes[0];

    bool use_if = first_if && (!first_redex ||
                               *first_if < std::min(first_redex->active, first_redex->passive));
    if (!first_if && !first_redex)
        throw StuckError("no reduction applies to: " + nf.text());

    std::vector<HProc> threads = nf.threads;
    if (use_if) {
        HProc repl;
        apply_if(*threads[*first_if], repl);
        threads[*first_if] = repl;
    } else {
        Applied ap = apply_redex(threads, *first_redex, gen);
        threads[first_redex->active] = ap.active;
        threads[first_redex->passive] = ap.passive;
        if (first_redex->rule == Redex::Rule::Link ||
            first_redex->rule == Redex::Rule::TimedLink)
            nf.nus.push_back(ap.event.chan);
    }
    NormalForm out;
    out.decls = nf.decls;
    out.nus = nf.nus;
    out.threads = std::move(threads);
    return out.to_process();
}

void session_clock_step(SessionTable& sessions, const std::set<std::string>& granted_now,
                        const std::set<std::string>& killed_now) {
    for (auto& [chan, left] : sessions.remaining)
        if (!granted_now.count(chan) && left > 0) --left;
    for (const std::string& k : killed_now) sessions.killed.insert(k);
}

HvkRun outermost_run(const HProc& p, size_t rounds, const RunOptions& opts) {
    HvkRun run;
    FreshVarGen gen = primed_gen(p);
    NormalForm nf = normal_form(p, &gen);
    run.initial = nf;

    for (size_t r = 1; r <= rounds; ++r) {
        if (nf.threads.empty()) break;
        const SessionTable gate = opts.timed ? run.sessions : SessionTable{};
        RedexScan scan = find_redexes(nf.threads, gate);

        if (!scan.multi_partner.empty() && !opts.force_pairing) {
            std::vector<std::string> conflicts;
            for (size_t idx : scan.multi_partner) {
                std::string line = "thread " + std::to_string(idx) + " (" +
                                   to_text(nf.threads[idx]) + ") pairs as:";
                for (const Redex& rd : scan.redexes)
                    if (rd.active == idx || rd.passive == idx) line += " " + rd.describe();
                conflicts.push_back(std::move(line));
            }
            std::string msg = "round " + std::to_string(r) + " admits more than one pairing";
            for (const std::string& c : conflicts) msg += "\n  " + c;
            throw NonDeterminismError(msg, std::move(conflicts));
        }

        // Greedy lowest-index maximal pairing; when no thread has two
        // partners this is the unique maximal one.
        std::set<size_t> used;
        std::vector<Redex> chosen;
        for (const Redex& rd : scan.redexes) {
            if (used.count(rd.active) || used.count(rd.passive)) continue;
            used.insert(rd.active);
            used.insert(rd.passive);
            chosen.push_back(rd);
        }

        struct Pending {
            size_t index;
            FiredEvent event;
        };
        std::vector<Pending> order;
        std::vector<HProc> threads = nf.threads;
        std::set<std::string> granted_now, killed_now;

        for (size_t i = 0; i < nf.threads.size(); ++i) {
            if (used.count(i)) continue;
            if (nf.threads[i]->kind == Kind::If) {
                HProc repl;
                FiredEvent ev = apply_if(*nf.threads[i], repl);
                threads[i] = repl;
                order.push_back({i, std::move(ev)});
            } else if (opts.timed && nf.threads[i]->kind == Kind::Kill) {
                FiredEvent ev;
                ev.kind = FiredEvent::Kind::Kill;
                ev.chan = nf.threads[i]->chan;
                killed_now.insert(ev.chan);
                threads[i] = HProcess::inact();
                order.push_back({i, std::move(ev)});
            }
        }
        for (const Redex& rd : chosen) {
            Applied ap = apply_redex(nf.threads, rd, gen);
            threads[rd.active] = ap.active;
            threads[rd.passive] = ap.passive;
            if (rd.rule == Redex::Rule::Link || rd.rule == Redex::Rule::TimedLink) {
                nf.nus.push_back(ap.event.chan);
                if (rd.rule == Redex::Rule::TimedLink) {
                    granted_now.insert(ap.event.chan);
                    if (opts.timed)
                        run.sessions.remaining[ap.event.chan] = ap.event.values[0].int_value();
                }
            }
            order.push_back({std::min(rd.active, rd.passive), std::move(ap.event)});
        }

        if (order.empty()) {
            run.stuck = !nf.threads.empty();
            break;
        }
        std::sort(order.begin(), order.end(),
                  [](const Pending& a, const Pending& b) { return a.index < b.index; });

        NormalForm next;
        next.decls = nf.decls;
        next.nus = nf.nus;
        Flattener fl{&next, &gen, {}, {}};
        // Free names and declaration names were settled when the run
        // started; rounds only introduce '#'-minted names, which the shared
        // generator keeps unique.
        for (const Decl& d : next.decls) fl.outer_procvars.insert(d.name);
        for (const HProc& t : threads) {
            std::set<std::string> fns = free_names(t);
            fl.outer_free.insert(fns.begin(), fns.end());
        }
        std::vector<HProc> to_flatten = std::move(threads);
        for (const HProc& t : to_flatten) fl.flatten(t);

        if (opts.timed) session_clock_step(run.sessions, granted_now, killed_now);

        RoundRecord rec;
        rec.round = r;
        for (Pending& pe : order) {
            rec.fired.push_back(event_text(pe.event));
            rec.events.push_back(std::move(pe.event));
        }
        rec.state = next;
        run.rounds.push_back(std::move(rec));
        nf = std::move(next);
    }
    return run;
}

namespace {

bool ident_boundary(const std::string& s, size_t pos, size_t len) {
    auto idch = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '#';
    };
    if (pos > 0 && idch(s[pos - 1])) return false;
    if (pos + len < s.size() && idch(s[pos + len])) return false;
    return true;
}

void first_occurrences(const std::string& text, const std::set<std::string>& names,
                       std::vector<std::string>& order, std::set<std::string>& seen) {
    std::vector<std::pair<size_t, std::string>> hits;
    for (const std::string& n : names) {
        if (seen.count(n)) continue;
        size_t pos = 0;
        while ((pos = text.find(n, pos)) != std::string::npos) {
            if (ident_boundary(text, pos, n.size())) {
                hits.emplace_back(pos, n);
                break;
            }
            ++pos;
        }
    }
    std::sort(hits.begin(), hits.end());
    for (auto& [pos, n] : hits) {
        order.push_back(n);
        seen.insert(n);
    }
}

}  // namespace

std::string canonical_text(const NormalForm& nf) {
    std::set<std::string> nus(nf.nus.begin(), nf.nus.end());

    // Sort threads with restriction names blanked, so the order does not
    // depend on which round minted which name.
    std::map<std::string, std::string> blank;
    for (const std::string& n : nus) blank[n] = "nu";
    FreshVarGen throwaway;
    std::vector<std::pair<std::string, size_t>> keyed;
    for (size_t i = 0; i < nf.threads.size(); ++i) {
        HProc blanked = subst_names(nf.threads[i], blank, throwaway);
        keyed.emplace_back(to_text(blanked) + "\x01" + to_text(nf.threads[i]), i);
    }
    std::sort(keyed.begin(), keyed.end());

    std::vector<std::string> order;
    std::set<std::string> seen;
    for (const auto& [key, i] : keyed) first_occurrences(to_text(nf.threads[i]), nus, order, seen);
    for (const std::string& n : nf.nus)
        if (!seen.count(n)) {
            order.push_back(n);
            seen.insert(n);
        }

    std::map<std::string, std::string> canon;
    for (size_t i = 0; i < order.size(); ++i)
        canon[order[i]] = "v" + std::to_string(i + 1) + "#";

    std::ostringstream os;
    if (!nf.decls.empty()) {
        HProc defs = HProcess::def_in(nf.decls, HProcess::inact());
        os << to_text(defs) << "\n";
    }
    os << "new";
    for (size_t i = 0; i < order.size(); ++i) os << " v" << (i + 1) << "#";
    os << "\n";
    std::vector<std::string> lines;
    for (const auto& [key, i] : keyed) {
        FreshVarGen g;
        lines.push_back(to_text(subst_names(nf.threads[i], canon, g)));
    }
    std::sort(lines.begin(), lines.end());
    for (const std::string& l : lines) os << l << "\n";
    return os.str();
}

}  // namespace sesscc::hvk
