#include "sesscc/encoder.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>

#include "sesscc/syntax.hpp"

namespace sesscc::enc {

namespace {

using hvk::HProc;
using hvk::HProcess;
using utcc::Proc;
using utcc::Process;

/// Mints identifiers that reparse: no '#', not a keyword, distinct from
/// every name the source program or the session predicates use. Hints that
/// are already minted names are stripped back to their stem first.
class PlainNamer {
public:
    explicit PlainNamer(std::set<std::string> taken) : taken_(std::move(taken)) {}

    std::string mint(const std::string& hint) {
        std::string base = hint.substr(0, hint.find('#'));
        if (base.empty()) base = "v";
        std::string cand = base;
        for (int i = 2;; ++i) {
            if (!taken_.count(cand) && !syn::is_reserved_word(cand)) {
                taken_.insert(cand);
                return cand;
            }
            cand = base + std::to_string(i);
        }
    }

private:
    std::set<std::string> taken_;
};

struct Ctx {
    EncodeOptions opts;
    /// Names the translation has bound (session binders, restriction names,
    /// reception and definition parameters). Symbol occurrences of these
    /// lift to variables so the binding combinator's substitution reaches
    /// them; everything else stays a constant.
    std::set<std::string> bound;
    /// In-scope definitions: process variable -> its call predicate.
    std::map<std::string, std::string> defs;
    PlainNamer names;

    std::string reqp() const { return opts.corrupt_swap_req_acc ? "acc" : "req"; }
    std::string accp() const { return opts.corrupt_swap_req_acc ? "req" : "acc"; }
};

/// Promote bound symbols to variables. Record field keys and projection
/// field names are labels rather than value positions and stay symbols.
Term lift(const Term& t, const std::set<std::string>& bound) {
    switch (t.kind()) {
        case Term::Kind::Sym:
            return bound.count(t.name()) ? Term::var(t.name()) : t;
        case Term::Kind::Tuple: {
            const auto& items = t.items();
            std::vector<Term> out;
            out.reserve(items.size());
            if (t.is_op() && t.op_name() == "record") {
                out.push_back(items[0]);
                for (size_t i = 1; i < items.size(); ++i) {
                    const Term& field = items[i];
                    if (field.is_tuple() && field.items().size() == 2)
                        out.push_back(Term::tuple(
                            {field.items()[0], lift(field.items()[1], bound)}));
                    else
                        out.push_back(lift(field, bound));
                }
            } else if (t.is_op() && t.op_name() == "field" && items.size() == 3) {
                out.push_back(items[0]);
                out.push_back(lift(items[1], bound));
                out.push_back(items[2]);
            } else {
                for (const Term& x : items) out.push_back(lift(x, bound));
            }
            return Term::tuple(std::move(out));
        }
        default:
            return t;
    }
}

Constraint lift_constraint(const Constraint& c, const std::set<std::string>& bound) {
    switch (c.kind()) {
        case Constraint::Kind::True:
        case Constraint::Kind::False:
            return c;
        case Constraint::Kind::AtomC: {
            const Atom& a = c.get_atom();
            std::vector<Term> args;
            args.reserve(a.args.size());
            for (const Term& t : a.args) args.push_back(lift(t, bound));
            return Constraint::atom(a.pred, std::move(args));
        }
        case Constraint::Kind::Eq:
            return Constraint::eq(lift(c.lhs(), bound), lift(c.rhs(), bound));
        case Constraint::Kind::Neq:
            return Constraint::neq(lift(c.lhs(), bound), lift(c.rhs(), bound));
        case Constraint::Kind::And: {
            std::vector<Constraint> parts;
            parts.reserve(c.conjuncts().size());
            for (const Constraint& k : c.conjuncts())
                parts.push_back(lift_constraint(k, bound));
            return Constraint::conj(std::move(parts));
        }
        case Constraint::Kind::Exists: {
            std::set<std::string> inner = bound;
            for (const std::string& b : c.binders()) inner.erase(b);
            return Constraint::exists(c.binders(), lift_constraint(c.body(), inner));
        }
    }
    throw std::logic_error("unreachable");
}

/// A name in channel/service position: a variable when some enclosing
/// translation step binds it, otherwise a constant.
Term chan_term(const std::string& n, const Ctx& ctx) {
    return ctx.bound.count(n) ? Term::var(n) : Term::symbol(n);
}

void reject_stray_dur(const Term& t) {
    for (const std::string& v : t.vars())
        if (v.rfind("dur_", 0) == 0)
            throw EncodeError("duration variable '" + v +
                              "' used outside its acceptor's precondition");
}

/// Renames what used to be a binder inside an already-encoded body (the
/// substitution sees those occurrences as free variables).
Proc rename_free(const Proc& body, const std::string& from, const std::string& to) {
    return utcc::substitute(body, Substitution{{from, Term::var(to)}});
}

// ---------------------------------------------------------------------------
// Guarding

void collect_term_names(const Term& t, std::set<std::string>& out) {
    switch (t.kind()) {
        case Term::Kind::Var:
        case Term::Kind::Sym:
            out.insert(t.name());
            return;
        case Term::Kind::Tuple:
            for (const Term& x : t.items()) collect_term_names(x, out);
            return;
        default:
            return;
    }
}

void collect_constraint_names(const Constraint& c, std::set<std::string>& out) {
    switch (c.kind()) {
        case Constraint::Kind::True:
        case Constraint::Kind::False:
            return;
        case Constraint::Kind::AtomC:
            out.insert(c.get_atom().pred);
            for (const Term& t : c.get_atom().args) collect_term_names(t, out);
            return;
        case Constraint::Kind::Eq:
        case Constraint::Kind::Neq:
            collect_term_names(c.lhs(), out);
            collect_term_names(c.rhs(), out);
            return;
        case Constraint::Kind::And:
            for (const Constraint& k : c.conjuncts()) collect_constraint_names(k, out);
            return;
        case Constraint::Kind::Exists:
            for (const std::string& b : c.binders()) out.insert(b);
            collect_constraint_names(c.body(), out);
            return;
    }
}

void collect_proc_names(const Proc& p, std::set<std::string>& out) {
    for (const std::string& v : p->vars) out.insert(v);
    collect_constraint_names(p->c, out);
    for (const Substitution& ex : p->exclusions)
        for (const auto& [k, t] : ex) {
            out.insert(k);
            collect_term_names(t, out);
        }
    for (const Proc& k : p->kids) collect_proc_names(k, out);
}

/// Expansion of a derived persistent marker with its bookkeeping binders
/// renamed to plain identifiers, so guarded output still reparses.
Proc expand_marker(const Proc& marker, PlainNamer& names) {
    FreshVarGen tmp;
    Proc ex = utcc::expand_derived_node(*marker, tmp);
    if (ex->kind != Process::Kind::Local) return ex;
    std::vector<std::string> vars = ex->vars;
    Substitution ren;
    for (std::string& v : vars)
        if (v.find('#') != std::string::npos) {
            std::string nv = names.mint(v);
            ren.emplace(v, Term::var(nv));
            v = nv;
        }
    if (ren.empty()) return ex;
    return Process::local(std::move(vars), ex->c.substitute(ren),
                          utcc::substitute(ex->body(), ren));
}

Proc guard_tree(const Constraint& d, const Proc& p, PlainNamer& names) {
    switch (p->kind) {
        case Process::Kind::Skip:
            return p;
        case Process::Kind::Tell:
            return Process::when(d, p);
        case Process::Kind::Par: {
            std::vector<Proc> kids;
            kids.reserve(p->kids.size());
            for (const Proc& k : p->kids) kids.push_back(guard_tree(d, k, names));
            return Process::par(std::move(kids));
        }
        case Process::Kind::Next:
            return Process::when(d, Process::next(guard_tree(d, p->body(), names)));
        case Process::Kind::Unless:
            return Process::when(d, Process::unless(p->c, guard_tree(d, p->body(), names)));
        case Process::Kind::Bang:
            return Process::bang(guard_tree(d, p->body(), names));
        case Process::Kind::Abs:
        case Process::Kind::Local: {
            // Binders must not capture the guarding constraint's variables;
            // rename the offenders before descending.
            std::set<std::string> fvd = d.free_vars();
            std::vector<std::string> vars = p->vars;
            Substitution ren;
            for (std::string& v : vars)
                if (fvd.count(v)) {
                    std::string nv = names.mint(v);
                    ren.emplace(v, Term::var(nv));
                    v = nv;
                }
            Constraint c = ren.empty() ? p->c : p->c.substitute(ren);
            Proc body = ren.empty() ? p->body() : utcc::substitute(p->body(), ren);
            body = guard_tree(d, body, names);
            if (p->kind == Process::Kind::Local)
                return Process::local(std::move(vars), std::move(c), std::move(body));
            std::vector<Substitution> excl;
            excl.reserve(p->exclusions.size());
            for (const Substitution& ex : p->exclusions) {
                Substitution e2;
                for (const auto& [k, t] : ex) {
                    auto it = ren.find(k);
                    e2.emplace(it == ren.end() ? k : it->second.name(), t.substitute(ren));
                }
                excl.push_back(std::move(e2));
            }
            return Process::abs(std::move(vars), std::move(c), std::move(body),
                                std::move(excl));
        }
        case Process::Kind::BangN:
            return guard_tree(d, utcc::expand_bounded_bang(p), names);
        case Process::Kind::PTell:
        case Process::Kind::Wait:
        case Process::Kind::WaitAck:
            return guard_tree(d, expand_marker(p, names), names);
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Translation proper

std::set<std::string> standard_predicates() {
    return {"req", "acc", "out", "sel", "outk", "act", "kill", utcc::kBookkeepingPred};
}

Proc enc(const HProc& p, Ctx& ctx);

Proc enc_bound(const HProc& p, Ctx& ctx, const std::vector<std::string>& add) {
    std::set<std::string> saved = ctx.bound;
    for (const std::string& n : add) ctx.bound.insert(n);
    Proc r = enc(p, ctx);
    ctx.bound = std::move(saved);
    return r;
}

/// Session-opening rows bind the session name in their own scope; when the
/// source reuses the service (or subject) name as the binder, the binder is
/// renamed so the free occurrence stays visible inside the row.
std::string row_binder(const std::string& binder, const std::string& other, Ctx& ctx) {
    return binder == other ? ctx.names.mint(binder) : binder;
}

long long constant_duration(const Term& e) {
    Term m;
    try {
        m = hvk::eval_expr(e);
    } catch (const hvk::EvalError& err) {
        throw EncodeError(std::string("session duration must be a constant: ") +
                          err.what());
    }
    if (m.kind() != Term::Kind::Int || m.int_value() < 0)
        throw EncodeError("session duration must be a non-negative integer, got " +
                          m.text());
    return m.int_value();
}

/// Replicated responder for one definition (the recursion scheme): fires on
/// its call atom with the parameters as the match pattern.
Proc responder(const hvk::Decl& d, const std::string& pred, Ctx& ctx) {
    std::vector<std::string> params;
    std::vector<Term> pattern;
    params.reserve(d.params.size());
    pattern.reserve(d.params.size());
    for (const hvk::Param& pr : d.params) {
        params.push_back(pr.name);
        pattern.push_back(Term::var(pr.name));
    }
    Proc body = enc_bound(d.body, ctx, params);
    return Process::bang(
        Process::abs(std::move(params), Constraint::atom(pred, std::move(pattern)),
                     std::move(body)));
}

Proc enc(const HProc& p, Ctx& ctx) {
    switch (p->kind) {
        case HProcess::Kind::Inact:
            return Process::skip();

        case HProcess::Kind::Par: {
            std::vector<Proc> parts;
            parts.reserve(p->kids.size());
            for (const HProc& k : p->kids) parts.push_back(enc(k, ctx));
            return Process::par(std::move(parts));
        }

        case HProcess::Kind::Hide:
            return Process::local({p->name}, enc_bound(p->body(), ctx, {p->name}));

        case HProcess::Kind::Request: {
            Term a = chan_term(p->name, ctx);
            std::string k = row_binder(p->chan, p->name, ctx);
            Proc body = enc_bound(p->body(), ctx, {p->chan});
            if (k != p->chan) body = rename_free(body, p->chan, k);
            return Process::local(
                {k},
                Process::par(
                    {Process::ptell(Constraint::atom(ctx.reqp(), {a, Term::var(k)})),
                     Process::whenever(Constraint::atom(ctx.accp(), {a, Term::var(k)}),
                                       Process::next(std::move(body)))}));
        }

        case HProcess::Kind::Accept: {
            Term a = chan_term(p->name, ctx);
            std::string k = row_binder(p->chan, p->name, ctx);
            Proc body = enc_bound(p->body(), ctx, {p->chan});
            if (k != p->chan) body = rename_free(body, p->chan, k);
            return Process::wait_ack(
                {k}, Constraint::atom(ctx.reqp(), {a, Term::var(k)}),
                Process::par(
                    {Process::tell(Constraint::atom(ctx.accp(), {a, Term::var(k)})),
                     Process::next(std::move(body))}));
        }

        case HProcess::Kind::Send: {
            std::vector<Term> args{chan_term(p->chan, ctx)};
            for (const Term& e : p->exprs) {
                Term t = lift(e, ctx.bound);
                reject_stray_dur(t);
                args.push_back(std::move(t));
            }
            Constraint out = Constraint::atom("out", std::move(args));
            return Process::par(
                {Process::ptell(out),
                 Process::whenever(utcc::ack_of(out), Process::next(enc(p->body(), ctx)))});
        }

        case HProcess::Kind::Receive: {
            Term subject = chan_term(p->chan, ctx);
            std::vector<std::string> binders = p->vars;
            size_t clash = binders.size();
            for (size_t i = 0; i < binders.size(); ++i)
                if (binders[i] == p->chan) {
                    clash = i;
                    binders[i] = ctx.names.mint(binders[i]);
                }
            std::vector<Term> args{std::move(subject)};
            for (const std::string& x : binders) args.push_back(Term::var(x));
            Proc body = enc_bound(p->body(), ctx, p->vars);
            if (clash != binders.size())
                body = rename_free(body, p->vars[clash], binders[clash]);
            return Process::wait_ack(binders, Constraint::atom("out", std::move(args)),
                                     Process::next(std::move(body)));
        }

        case HProcess::Kind::Select: {
            Constraint sel = Constraint::atom(
                "sel", {chan_term(p->chan, ctx), Term::symbol(p->label)});
            return Process::par(
                {Process::ptell(sel),
                 Process::whenever(utcc::ack_of(sel), Process::next(enc(p->body(), ctx)))});
        }

        case HProcess::Kind::Branch: {
            std::string lv = ctx.names.mint("l");
            std::vector<Proc> arms;
            arms.reserve(p->arms.size());
            for (const auto& [label, q] : p->arms)
                arms.push_back(
                    Process::when(Constraint::eq(Term::var(lv), Term::symbol(label)),
                                  Process::next(enc(q, ctx))));
            return Process::wait_ack(
                {lv}, Constraint::atom("sel", {chan_term(p->chan, ctx), Term::var(lv)}),
                Process::par(std::move(arms)));
        }

        case HProcess::Kind::Throw: {
            Constraint outk = Constraint::atom(
                "outk", {chan_term(p->chan, ctx), chan_term(p->chan2, ctx)});
            return Process::par(
                {Process::ptell(outk),
                 Process::whenever(utcc::ack_of(outk),
                                   Process::next(enc(p->body(), ctx)))});
        }

        case HProcess::Kind::Catch: {
            Term subject = chan_term(p->chan, ctx);
            std::string kp = row_binder(p->chan2, p->chan, ctx);
            Proc body = enc_bound(p->body(), ctx, {p->chan2});
            if (kp != p->chan2) body = rename_free(body, p->chan2, kp);
            return Process::wait_ack(
                {kp}, Constraint::atom("outk", {std::move(subject), Term::var(kp)}),
                Process::next(std::move(body)));
        }

        case HProcess::Kind::If: {
            Term cond = lift(p->exprs[0], ctx.bound);
            reject_stray_dur(cond);
            return Process::par(
                {Process::when(Constraint::eq(cond, Term::boolean(true)),
                               Process::next(enc(p->kids[0], ctx))),
                 Process::when(Constraint::eq(cond, Term::boolean(false)),
                               Process::next(enc(p->kids[1], ctx)))});
        }

        case HProcess::Kind::DefIn: {
            std::map<std::string, std::string> saved = ctx.defs;
            std::vector<std::string> preds;
            preds.reserve(p->decls.size());
            for (const hvk::Decl& d : p->decls) {
                if (ctx.defs.count(d.name))
                    throw EncodeError("definition '" + d.name +
                                      "' shadows an enclosing definition");
                preds.push_back(ctx.names.mint("call_" + d.name));
            }
            for (size_t i = 0; i < p->decls.size(); ++i)
                ctx.defs[p->decls[i].name] = preds[i];
            std::vector<Proc> parts;
            parts.reserve(p->decls.size() + 1);
            for (size_t i = 0; i < p->decls.size(); ++i)
                parts.push_back(responder(p->decls[i], preds[i], ctx));
            parts.push_back(enc(p->body(), ctx));
            ctx.defs = std::move(saved);
            return Process::par(std::move(parts));
        }

        case HProcess::Kind::Call: {
            auto it = ctx.defs.find(p->name);
            if (it == ctx.defs.end())
                throw EncodeError("call to undeclared definition '" + p->name + "'");
            std::vector<Term> args;
            args.reserve(p->exprs.size());
            for (const Term& e : p->exprs) {
                Term t = lift(e, ctx.bound);
                reject_stray_dur(t);
                args.push_back(std::move(t));
            }
            return Process::tell(Constraint::atom(it->second, std::move(args)));
        }

        case HProcess::Kind::TimedRequest: {
            if (!ctx.opts.timed)
                throw EncodeError("timed session request in an untimed encoding");
            long long m = constant_duration(p->exprs[0]);
            Term a = chan_term(p->name, ctx);
            std::string k = row_binder(p->chan, p->name, ctx);
            Constraint act = Constraint::atom("act", {Term::var(k)});
            Constraint kill = Constraint::atom("kill", {Term::var(k)});
            Proc body = enc_bound(p->body(), ctx, {p->chan});
            if (k != p->chan) body = rename_free(body, p->chan, k);
            // The session stays usable for m units after acceptance: one
            // direct activation plus m clock-maintained renewals, each of
            // which a kill suppresses.
            Proc window = Process::bangn(
                static_cast<int>(m), Process::unless(kill, Process::tell(act)));
            return Process::local(
                {k},
                Process::par(
                    {Process::ptell(Constraint::atom(
                         ctx.reqp(), {a, Term::var(k), Term::integer(m)})),
                     Process::whenever(
                         Constraint::atom(ctx.accp(), {a, Term::var(k)}),
                         Process::next(Process::par(
                             {Process::tell(act),
                              guard_tree(act, std::move(body), ctx.names),
                              std::move(window)})))}));
        }

        case HProcess::Kind::DeclAccept: {
            if (!ctx.opts.timed)
                throw EncodeError("declarative session accept in an untimed encoding");
            Term a = chan_term(p->name, ctx);
            std::string k = row_binder(p->chan, p->name, ctx);
            std::string mv = ctx.names.mint("m");
            std::set<std::string> pb = ctx.bound;
            pb.insert(p->chan);
            Substitution psub{{"dur_" + p->chan, Term::var(mv)}};
            if (k != p->chan) psub.emplace(p->chan, Term::var(k));
            Constraint pre = lift_constraint(p->precond, pb).substitute(psub);
            for (const std::string& v : pre.free_vars())
                if (v.rfind("dur_", 0) == 0)
                    throw EncodeError("duration variable '" + v +
                                      "' does not belong to this acceptor");
            Constraint act = Constraint::atom("act", {Term::var(k)});
            Proc body = enc_bound(p->body(), ctx, {p->chan});
            if (k != p->chan) body = rename_free(body, p->chan, k);
            return Process::wait_ack(
                {k, mv},
                Constraint::conj({Constraint::atom(
                                      ctx.reqp(), {a, Term::var(k), Term::var(mv)}),
                                  std::move(pre)}),
                Process::par(
                    {Process::tell(Constraint::atom(ctx.accp(), {a, Term::var(k)})),
                     Process::next(guard_tree(act, std::move(body), ctx.names))}));
        }

        case HProcess::Kind::Kill:
            if (!ctx.opts.timed)
                throw EncodeError("kill in an untimed encoding");
            return Process::bang(
                Process::tell(Constraint::atom("kill", {chan_term(p->chan, ctx)})));
    }
    throw std::logic_error("unreachable");
}

std::set<std::string> seed_names(const HProc& p) {
    std::set<std::string> taken = hvk::all_names(p);
    std::set<std::string> preds = standard_predicates();
    taken.insert(preds.begin(), preds.end());
    return taken;
}

}  // namespace

Proc encode(const HProc& p, const EncodeOptions& opts) {
    Ctx ctx{opts, {}, {}, PlainNamer(seed_names(p))};
    return enc(p, ctx);
}

Proc encode_recursion(const std::vector<hvk::Decl>& decls, const EncodeOptions& opts) {
    std::set<std::string> taken = standard_predicates();
    for (const hvk::Decl& d : decls) {
        taken.insert(d.name);
        for (const hvk::Param& pr : d.params) taken.insert(pr.name);
        std::set<std::string> body = hvk::all_names(d.body);
        taken.insert(body.begin(), body.end());
    }
    Ctx ctx{opts, {}, {}, PlainNamer(std::move(taken))};
    std::vector<std::string> preds;
    preds.reserve(decls.size());
    for (const hvk::Decl& d : decls) {
        if (ctx.defs.count(d.name))
            throw EncodeError("duplicate definition '" + d.name + "'");
        preds.push_back(ctx.names.mint("call_" + d.name));
        ctx.defs[d.name] = preds.back();
    }
    std::vector<Proc> parts;
    parts.reserve(decls.size());
    for (size_t i = 0; i < decls.size(); ++i)
        parts.push_back(responder(decls[i], preds[i], ctx));
    return Process::par(std::move(parts));
}

Proc guard_process(const Constraint& d, const Proc& p) {
    std::set<std::string> taken = standard_predicates();
    collect_proc_names(p, taken);
    collect_constraint_names(d, taken);
    PlainNamer names(std::move(taken));
    return guard_tree(d, p, names);
}

}  // namespace sesscc::enc
