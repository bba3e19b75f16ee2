#include "sesscc/hvk/ast.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace sesscc::hvk {

namespace {

using Kind = HProcess::Kind;

HProc mk(HProcess&& n) { return std::make_shared<const HProcess>(std::move(n)); }

}  // namespace

std::vector<std::string> Decl::value_params() const {
    std::vector<std::string> out;
    for (const auto& p : params)
        if (!p.is_chan) out.push_back(p.name);
    return out;
}

std::vector<std::string> Decl::chan_params() const {
    std::vector<std::string> out;
    for (const auto& p : params)
        if (p.is_chan) out.push_back(p.name);
    return out;
}

HProc HProcess::request(std::string a, std::string k, HProc body) {
    HProcess n;
    n.kind = Kind::Request;
    n.name = std::move(a);
    n.chan = std::move(k);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::accept(std::string a, std::string k, HProc body) {
    HProcess n;
    n.kind = Kind::Accept;
    n.name = std::move(a);
    n.chan = std::move(k);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::send(std::string k, std::vector<Term> payload, HProc body) {
    HProcess n;
    n.kind = Kind::Send;
    n.chan = std::move(k);
    n.exprs = std::move(payload);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::receive(std::string k, std::vector<std::string> binders, HProc body) {
    HProcess n;
    n.kind = Kind::Receive;
    n.chan = std::move(k);
    n.vars = std::move(binders);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::select(std::string k, std::string label, HProc body) {
    HProcess n;
    n.kind = Kind::Select;
    n.chan = std::move(k);
    n.label = std::move(label);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::branch(std::string k, std::vector<std::pair<std::string, HProc>> arms) {
    if (arms.empty()) throw std::logic_error("branch needs at least one arm");
    for (size_t i = 0; i < arms.size(); ++i)
        for (size_t j = i + 1; j < arms.size(); ++j)
            if (arms[i].first == arms[j].first)
                throw std::logic_error("duplicate branch label '" + arms[i].first + "'");
    HProcess n;
    n.kind = Kind::Branch;
    n.chan = std::move(k);
    n.arms = std::move(arms);
    return mk(std::move(n));
}

HProc HProcess::throw_(std::string k, std::string delegated, HProc body) {
    HProcess n;
    n.kind = Kind::Throw;
    n.chan = std::move(k);
    n.chan2 = std::move(delegated);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::catch_(std::string k, std::string binder, HProc body) {
    HProcess n;
    n.kind = Kind::Catch;
    n.chan = std::move(k);
    n.chan2 = std::move(binder);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::if_(Term cond, HProc then_part, HProc else_part) {
    HProcess n;
    n.kind = Kind::If;
    n.exprs = {std::move(cond)};
    n.kids = {std::move(then_part), std::move(else_part)};
    return mk(std::move(n));
}

HProc HProcess::par(std::vector<HProc> parts) {
    if (parts.empty()) return inact();
    if (parts.size() == 1) return parts[0];
    HProcess n;
    n.kind = Kind::Par;
    n.kids = std::move(parts);
    return mk(std::move(n));
}

HProc HProcess::inact() {
    static const HProc zero = mk(HProcess{});
    return zero;
}

HProc HProcess::hide(std::string u, HProc body) {
    HProcess n;
    n.kind = Kind::Hide;
    n.name = std::move(u);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::def_in(std::vector<Decl> decls, HProc body) {
    for (size_t i = 0; i < decls.size(); ++i)
        for (size_t j = i + 1; j < decls.size(); ++j)
            if (decls[i].name == decls[j].name)
                throw std::logic_error("duplicate definition '" + decls[i].name + "'");
    HProcess n;
    n.kind = Kind::DefIn;
    n.decls = std::move(decls);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::call(std::string proc_var, std::vector<Term> args) {
    HProcess n;
    n.kind = Kind::Call;
    n.name = std::move(proc_var);
    n.exprs = std::move(args);
    return mk(std::move(n));
}

HProc HProcess::timed_request(std::string a, std::string k, Term duration, HProc body) {
    HProcess n;
    n.kind = Kind::TimedRequest;
    n.name = std::move(a);
    n.chan = std::move(k);
    n.exprs = {std::move(duration)};
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::decl_accept(std::string a, std::string k, Constraint precond, HProc body) {
    HProcess n;
    n.kind = Kind::DeclAccept;
    n.name = std::move(a);
    n.chan = std::move(k);
    n.precond = std::move(precond);
    n.kids = {std::move(body)};
    return mk(std::move(n));
}

HProc HProcess::kill(std::string k) {
    HProcess n;
    n.kind = Kind::Kill;
    n.chan = std::move(k);
    return mk(std::move(n));
}

bool struct_equal(const HProc& a, const HProc& b) {
    if (a == b) return true;
    if (a->kind != b->kind || a->name != b->name || a->chan != b->chan ||
        a->chan2 != b->chan2 || a->label != b->label || a->exprs != b->exprs ||
        a->vars != b->vars || a->precond != b->precond)
        return false;
    if (a->arms.size() != b->arms.size() || a->kids.size() != b->kids.size() ||
        a->decls.size() != b->decls.size())
        return false;
    for (size_t i = 0; i < a->arms.size(); ++i)
        if (a->arms[i].first != b->arms[i].first ||
            !struct_equal(a->arms[i].second, b->arms[i].second))
            return false;
    for (size_t i = 0; i < a->decls.size(); ++i) {
        const Decl& da = a->decls[i];
        const Decl& db = b->decls[i];
        if (da.name != db.name || da.params.size() != db.params.size()) return false;
        for (size_t j = 0; j < da.params.size(); ++j)
            if (da.params[j].name != db.params[j].name ||
                da.params[j].is_chan != db.params[j].is_chan)
                return false;
        if (!struct_equal(da.body, db.body)) return false;
    }
    for (size_t i = 0; i < a->kids.size(); ++i)
        if (!struct_equal(a->kids[i], b->kids[i])) return false;
    return true;
}

namespace {

/// Record field keys are tags, not name occurrences.
void term_idents(const Term& t, bool vars_too, std::set<std::string>& out) {
    switch (t.kind()) {
        case Term::Kind::Sym:
            out.insert(t.name());
            return;
        case Term::Kind::Var:
            if (vars_too) out.insert(t.name());
            return;
        case Term::Kind::Tuple:
            break;
        default:
            return;
    }
    if (t.is_op() && t.op_name() == "record") {
        for (size_t i = 1; i < t.items().size(); ++i)
            term_idents(t.items()[i].items()[1], vars_too, out);
        return;
    }
    size_t start = t.is_op() ? 1 : 0;
    for (size_t i = start; i < t.items().size(); ++i) term_idents(t.items()[i], vars_too, out);
}

void constraint_idents(const Constraint& c, bool vars_too, std::set<std::string>& out) {
    switch (c.kind()) {
        case Constraint::Kind::AtomC:
            for (const Term& t : c.get_atom().args) term_idents(t, vars_too, out);
            return;
        case Constraint::Kind::Eq:
        case Constraint::Kind::Neq:
            term_idents(c.lhs(), vars_too, out);
            term_idents(c.rhs(), vars_too, out);
            return;
        case Constraint::Kind::And:
            for (const Constraint& k : c.conjuncts()) constraint_idents(k, vars_too, out);
            return;
        case Constraint::Kind::Exists: {
            std::set<std::string> inner;
            constraint_idents(c.body(), vars_too, inner);
            for (const std::string& b : c.binders()) inner.erase(b);
            out.insert(inner.begin(), inner.end());
            return;
        }
        default:
            return;
    }
}

void free_names_walk(const HProc& p, std::set<std::string> bound, std::set<std::string>& out) {
    auto occur = [&](const std::string& n) {
        if (!n.empty() && !bound.count(n)) out.insert(n);
    };
    auto occur_terms = [&](const std::vector<Term>& ts) {
        std::set<std::string> ids;
        for (const Term& t : ts) term_idents(t, true, ids);
        for (const std::string& n : ids) occur(n);
    };
    switch (p->kind) {
        case Kind::Request:
        case Kind::Accept:
            occur(p->name);
            bound.insert(p->chan);
            free_names_walk(p->body(), bound, out);
            return;
        case Kind::TimedRequest:
            occur(p->name);
            occur_terms(p->exprs);
            bound.insert(p->chan);
            free_names_walk(p->body(), bound, out);
            return;
        case Kind::DeclAccept: {
            occur(p->name);
            bound.insert(p->chan);
            std::set<std::string> ids;
            constraint_idents(p->precond, true, ids);
            ids.erase("dur_" + p->chan);
            for (const std::string& n : ids) occur(n);
            free_names_walk(p->body(), bound, out);
            return;
        }
        case Kind::Send:
        case Kind::Select:
            occur(p->chan);
            occur_terms(p->exprs);
            free_names_walk(p->body(), bound, out);
            return;
        case Kind::Receive:
            occur(p->chan);
            for (const std::string& v : p->vars) bound.insert(v);
            free_names_walk(p->body(), bound, out);
            return;
        case Kind::Branch:
            occur(p->chan);
            for (const auto& [l, q] : p->arms) free_names_walk(q, bound, out);
            return;
        case Kind::Throw:
            occur(p->chan);
            occur(p->chan2);
            free_names_walk(p->body(), bound, out);
            return;
        case Kind::Catch:
            occur(p->chan);
            bound.insert(p->chan2);
            free_names_walk(p->body(), bound, out);
            return;
        case Kind::If:
            occur_terms(p->exprs);
            free_names_walk(p->kids[0], bound, out);
            free_names_walk(p->kids[1], bound, out);
            return;
        case Kind::Par:
            for (const HProc& q : p->kids) free_names_walk(q, bound, out);
            return;
        case Kind::Hide:
            bound.insert(p->name);
            free_names_walk(p->body(), bound, out);
            return;
        case Kind::DefIn:
            for (const Decl& d : p->decls) {
                std::set<std::string> b2 = bound;
                for (const Param& pr : d.params) b2.insert(pr.name);
                free_names_walk(d.body, std::move(b2), out);
            }
            free_names_walk(p->body(), bound, out);
            return;
        case Kind::Call:
            occur_terms(p->exprs);
            return;
        case Kind::Kill:
            occur(p->chan);
            return;
        case Kind::Inact:
            return;
    }
}

void free_value_vars_walk(const HProc& p, std::set<std::string> bound,
                          std::set<std::string>& out) {
    auto occur_terms = [&](const std::vector<Term>& ts) {
        std::set<std::string> vs;
        for (const Term& t : ts) t.collect_vars(vs);
        for (const std::string& v : vs)
            if (!bound.count(v)) out.insert(v);
    };
    occur_terms(p->exprs);
    if (p->kind == Kind::DeclAccept) {
        std::set<std::string> vs = p->precond.free_vars();
        vs.erase("dur_" + p->chan);
        for (const std::string& v : vs)
            if (!bound.count(v)) out.insert(v);
    }
    if (p->kind == Kind::Receive)
        for (const std::string& v : p->vars) bound.insert(v);
    for (const auto& [l, q] : p->arms) free_value_vars_walk(q, bound, out);
    for (const Decl& d : p->decls) {
        std::set<std::string> b2 = bound;
        for (const Param& pr : d.params) b2.insert(pr.name);
        free_value_vars_walk(d.body, std::move(b2), out);
    }
    for (const HProc& q : p->kids) free_value_vars_walk(q, bound, out);
}

void all_names_walk(const HProc& p, std::set<std::string>& out) {
    if (!p->name.empty()) out.insert(p->name);
    if (!p->chan.empty()) out.insert(p->chan);
    if (!p->chan2.empty()) out.insert(p->chan2);
    if (!p->label.empty()) out.insert(p->label);
    for (const Term& t : p->exprs) term_idents(t, true, out);
    for (const std::string& v : p->vars) out.insert(v);
    constraint_idents(p->precond, true, out);
    for (const auto& [l, q] : p->arms) {
        out.insert(l);
        all_names_walk(q, out);
    }
    for (const Decl& d : p->decls) {
        out.insert(d.name);
        for (const Param& pr : d.params) out.insert(pr.name);
        all_names_walk(d.body, out);
    }
    for (const HProc& q : p->kids) all_names_walk(q, out);
}

}  // namespace

std::set<std::string> free_names(const HProc& p) {
    std::set<std::string> out;
    free_names_walk(p, {}, out);
    return out;
}

std::set<std::string> free_value_vars(const HProc& p) {
    std::set<std::string> out;
    free_value_vars_walk(p, {}, out);
    return out;
}

std::set<std::string> free_process_vars(const HProc& p) {
    std::set<std::string> out;
    if (p->kind == Kind::Call) out.insert(p->name);
    for (const auto& [l, q] : p->arms) {
        std::set<std::string> sub = free_process_vars(q);
        out.insert(sub.begin(), sub.end());
    }
    std::set<std::string> here;
    for (const Decl& d : p->decls) {
        std::set<std::string> sub = free_process_vars(d.body);
        here.insert(sub.begin(), sub.end());
    }
    for (const HProc& q : p->kids) {
        std::set<std::string> sub = free_process_vars(q);
        here.insert(sub.begin(), sub.end());
    }
    if (p->kind == Kind::DefIn)
        for (const Decl& d : p->decls) here.erase(d.name);
    out.insert(here.begin(), here.end());
    return out;
}

std::set<std::string> all_names(const HProc& p) {
    std::set<std::string> out;
    all_names_walk(p, out);
    return out;
}

FreshVarGen primed_gen(const HProc& p) {
    size_t max_suffix = 0;
    for (const std::string& n : all_names(p)) {
        size_t hash = n.rfind('#');
        if (hash == std::string::npos || hash + 1 >= n.size()) continue;
        size_t num = 0;
        bool digits = true;
        for (size_t i = hash + 1; i < n.size(); ++i) {
            if (!std::isdigit(static_cast<unsigned char>(n[i]))) {
                digits = false;
                break;
            }
            num = num * 10 + static_cast<size_t>(n[i] - '0');
        }
        if (digits) max_suffix = std::max(max_suffix, num);
    }
    FreshVarGen g;
    while (g.minted() < max_suffix) g.fresh("x");
    return g;
}

bool uses_timed_constructs(const HProc& p) {
    if (p->kind == Kind::TimedRequest || p->kind == Kind::DeclAccept || p->kind == Kind::Kill)
        return true;
    for (const auto& [l, q] : p->arms)
        if (uses_timed_constructs(q)) return true;
    for (const Decl& d : p->decls)
        if (uses_timed_constructs(d.body)) return true;
    for (const HProc& q : p->kids)
        if (uses_timed_constructs(q)) return true;
    return false;
}

namespace {

using Renaming = std::map<std::string, std::string>;

/// When `promote` is set, renamed variables become symbol constants: the
/// renaming ranges over concrete channel names, and a parameter occurrence
/// inside an expression turns into the channel it now stands for. Binder
/// alpha-renaming passes promote=false and keeps every occurrence kind.
Term rename_term(const Term& t, const Renaming& m, bool promote) {
    switch (t.kind()) {
        case Term::Kind::Sym: {
            auto it = m.find(t.name());
            return it == m.end() ? t : Term::symbol(it->second);
        }
        case Term::Kind::Var: {
            auto it = m.find(t.name());
            if (it == m.end()) return t;
            return promote ? Term::symbol(it->second) : Term::var(it->second);
        }
        case Term::Kind::Tuple:
            break;
        default:
            return t;
    }
    if (t.is_op() && t.op_name() == "record") {
        std::vector<std::pair<std::string, Term>> fields;
        for (size_t i = 1; i < t.items().size(); ++i)
            fields.emplace_back(t.items()[i].items()[0].name(),
                                rename_term(t.items()[i].items()[1], m, promote));
        return Term::record(fields);
    }
    std::vector<Term> items;
    items.reserve(t.items().size());
    for (const Term& it : t.items()) items.push_back(rename_term(it, m, promote));
    return Term::tuple(std::move(items));
}

Constraint rename_constraint(const Constraint& c, const Renaming& m, bool promote) {
    switch (c.kind()) {
        case Constraint::Kind::AtomC: {
            Atom a = c.get_atom();
            for (Term& t : a.args) t = rename_term(t, m, promote);
            return Constraint::atom(std::move(a));
        }
        case Constraint::Kind::Eq:
            return Constraint::eq(rename_term(c.lhs(), m, promote),
                                  rename_term(c.rhs(), m, promote));
        case Constraint::Kind::Neq:
            return Constraint::neq(rename_term(c.lhs(), m, promote),
                                   rename_term(c.rhs(), m, promote));
        case Constraint::Kind::And: {
            std::vector<Constraint> parts;
            for (const Constraint& k : c.conjuncts()) parts.push_back(rename_constraint(k, m, promote));
            return Constraint::conj(std::move(parts));
        }
        case Constraint::Kind::Exists: {
            Renaming inner = m;
            for (const std::string& b : c.binders()) inner.erase(b);
            return Constraint::exists(c.binders(), rename_constraint(c.body(), inner, promote));
        }
        default:
            return c;
    }
}

struct NameSubst {
    FreshVarGen* fresh;
    bool promote;

    std::string str(const std::string& s, const Renaming& m) const {
        auto it = m.find(s);
        return it == m.end() ? s : it->second;
    }

    bool captures(const std::string& binder, const Renaming& m) const {
        for (const auto& [from, to] : m)
            if (to == binder) return true;
        return false;
    }

    /// Shadow `binders` out of the map; alpha-rename any binder a surviving
    /// target would collide with. Returns the map for the body and rewrites
    /// the binders in place.
    Renaming enter(std::vector<std::string*> binders, const Renaming& m, HProc& body) const {
        Renaming inner = m;
        for (std::string* b : binders) inner.erase(*b);
        for (std::string* b : binders) {
            if (!captures(*b, inner)) continue;
            std::string nb = fresh->fresh(*b);
            NameSubst alpha{fresh, false};
            body = alpha.run(body, {{*b, nb}});
            *b = nb;
        }
        return inner;
    }

    HProc run(const HProc& p, const Renaming& m) const {
        if (m.empty()) return p;
        HProcess n = *p;
        switch (n.kind) {
            case Kind::Request:
            case Kind::Accept: {
                n.name = str(n.name, m);
                Renaming inner = enter({&n.chan}, m, n.kids[0]);
                n.kids[0] = run(n.kids[0], inner);
                return mk(std::move(n));
            }
            case Kind::TimedRequest: {
                n.name = str(n.name, m);
                n.exprs[0] = rename_term(n.exprs[0], m, promote);
                Renaming inner = enter({&n.chan}, m, n.kids[0]);
                n.kids[0] = run(n.kids[0], inner);
                return mk(std::move(n));
            }
            case Kind::DeclAccept: {
                n.name = str(n.name, m);
                std::string old_chan = n.chan;
                Renaming inner = enter({&n.chan}, m, n.kids[0]);
                if (n.chan != old_chan)
                    n.precond = n.precond.substitute(
                        {{"dur_" + old_chan, Term::var("dur_" + n.chan)}});
                n.precond = rename_constraint(n.precond, inner, promote);
                n.kids[0] = run(n.kids[0], inner);
                return mk(std::move(n));
            }
            case Kind::Send:
            case Kind::Select: {
                n.chan = str(n.chan, m);
                for (Term& t : n.exprs) t = rename_term(t, m, promote);
                n.kids[0] = run(n.kids[0], m);
                return mk(std::move(n));
            }
            case Kind::Receive: {
                n.chan = str(n.chan, m);
                std::vector<std::string*> bs;
                for (std::string& v : n.vars) bs.push_back(&v);
                Renaming inner = enter(bs, m, n.kids[0]);
                n.kids[0] = run(n.kids[0], inner);
                return mk(std::move(n));
            }
            case Kind::Branch: {
                n.chan = str(n.chan, m);
                for (auto& [l, q] : n.arms) q = run(q, m);
                return mk(std::move(n));
            }
            case Kind::Throw: {
                n.chan = str(n.chan, m);
                n.chan2 = str(n.chan2, m);
                n.kids[0] = run(n.kids[0], m);
                return mk(std::move(n));
            }
            case Kind::Catch: {
                n.chan = str(n.chan, m);
                Renaming inner = enter({&n.chan2}, m, n.kids[0]);
                n.kids[0] = run(n.kids[0], inner);
                return mk(std::move(n));
            }
            case Kind::If: {
                n.exprs[0] = rename_term(n.exprs[0], m, promote);
                n.kids[0] = run(n.kids[0], m);
                n.kids[1] = run(n.kids[1], m);
                return mk(std::move(n));
            }
            case Kind::Par: {
                for (HProc& q : n.kids) q = run(q, m);
                return mk(std::move(n));
            }
            case Kind::Hide: {
                Renaming inner = enter({&n.name}, m, n.kids[0]);
                n.kids[0] = run(n.kids[0], inner);
                return mk(std::move(n));
            }
            case Kind::DefIn: {
                for (Decl& d : n.decls) {
                    std::vector<std::string*> bs;
                    for (Param& pr : d.params) bs.push_back(&pr.name);
                    Renaming inner = enter(bs, m, d.body);
                    d.body = run(d.body, inner);
                }
                n.kids[0] = run(n.kids[0], m);
                return mk(std::move(n));
            }
            case Kind::Call: {
                for (Term& t : n.exprs) t = rename_term(t, m, promote);
                return mk(std::move(n));
            }
            case Kind::Kill: {
                n.chan = str(n.chan, m);
                return mk(std::move(n));
            }
            case Kind::Inact:
                return p;
        }
        return p;
    }
};

}  // namespace

HProc subst_names(const HProc& p, const std::map<std::string, std::string>& ren,
                  FreshVarGen& fresh) {
    NameSubst s{&fresh, true};
    return s.run(p, ren);
}

HProc subst_values(const HProc& p, const Substitution& sub) {
    if (sub.empty()) return p;
    HProcess n = *p;
    for (Term& t : n.exprs) t = t.substitute(sub);
    if (n.kind == Kind::DeclAccept) n.precond = n.precond.substitute(sub);
    Substitution inner = sub;
    if (n.kind == Kind::Receive)
        for (const std::string& v : n.vars) inner.erase(v);
    for (auto& [l, q] : n.arms) q = subst_values(q, sub);
    for (Decl& d : n.decls) {
        Substitution ds = sub;
        for (const Param& pr : d.params) ds.erase(pr.name);
        d.body = subst_values(d.body, ds);
    }
    for (HProc& q : n.kids) q = subst_values(q, inner);
    return mk(std::move(n));
}

namespace {

}  // namespace

bool is_value(const Term& t) {
    // Records are constructors: one counts as a constant once its field
    // values do. Any other operator that survived folding is stuck.
    if (t.kind() == Term::Kind::Var) return false;
    if (t.is_op() && t.op_name() != "record") return false;
    if (t.is_tuple())
        for (const Term& it : t.items())
            if (!is_value(it)) return false;
    return true;
}

Term eval_expr(const Term& e, const Substitution& env) {
    Term t = e.substitute(env).fold();
    std::set<std::string> vs = t.vars();
    if (!vs.empty()) throw EvalError("unbound variable '" + *vs.begin() + "' in " + e.text());
    if (!is_value(t))
        throw EvalError("expression does not evaluate to a constant: " + t.text());
    return t;
}

namespace {

void collect_accepts(const HProc& p, std::map<std::string, int>& counts) {
    if (p->kind == Kind::Accept || p->kind == Kind::DeclAccept) ++counts[p->name];
    for (const auto& [l, q] : p->arms) collect_accepts(q, counts);
    for (const Decl& d : p->decls) collect_accepts(d.body, counts);
    for (const HProc& q : p->kids) collect_accepts(q, counts);
}

}  // namespace

std::vector<std::string> lint(const HProc& p) {
    std::vector<std::string> out;
    std::map<std::string, int> counts;
    collect_accepts(p, counts);
    for (const auto& [service, n] : counts)
        if (n > 1)
            out.push_back("service '" + service + "' is accepted in " + std::to_string(n) +
                          " places; requests may pair with either");
    std::set<std::string> free = free_names(p);
    if (!free.empty()) {
        std::string msg = "free names:";
        for (const std::string& n : free) msg += " " + n;
        out.push_back(msg);
    }
    return out;
}

namespace {

std::string exprs_text(const std::vector<Term>& ts) {
    std::string out;
    for (size_t i = 0; i < ts.size(); ++i) {
        if (i) out += ", ";
        out += ts[i].text();
    }
    return out;
}

/// Continuation of a communication prefix: anything but a bare parallel.
std::string prefix_text(const HProc& p) {
    if (p->kind == Kind::Par) return "(" + to_text(p) + ")";
    return to_text(p);
}

/// Component of a parallel composition: parenthesized unless the form is
/// self-delimiting, since continuations extend as far right as they can.
std::string par_component_text(const HProc& p) {
    switch (p->kind) {
        case Kind::Inact:
        case Kind::Kill:
        case Kind::Call:
        case Kind::Branch:
            return to_text(p);
        default:
            return "(" + to_text(p) + ")";
    }
}

}  // namespace

std::string to_text(const HProc& p) {
    std::ostringstream os;
    switch (p->kind) {
        case Kind::Request:
            os << "request " << p->name << "(" << p->chan << ") in " << to_text(p->body());
            break;
        case Kind::Accept:
            os << "accept " << p->name << "(" << p->chan << ") in " << to_text(p->body());
            break;
        case Kind::TimedRequest:
            os << "request " << p->name << "(" << p->chan << ", " << p->exprs[0].text()
               << ") in " << to_text(p->body());
            break;
        case Kind::DeclAccept:
            os << "accept " << p->name << "(" << p->chan << " : " << p->precond.text()
               << ") in " << to_text(p->body());
            break;
        case Kind::Send:
            os << p->chan << "![" << exprs_text(p->exprs) << "] " << prefix_text(p->body());
            break;
        case Kind::Receive: {
            os << p->chan << "?(";
            for (size_t i = 0; i < p->vars.size(); ++i) {
                if (i) os << ", ";
                os << p->vars[i];
            }
            os << ") in " << to_text(p->body());
            break;
        }
        case Kind::Select:
            os << p->chan << " <| " << p->label << "; " << prefix_text(p->body());
            break;
        case Kind::Branch: {
            os << p->chan << " |> { ";
            for (size_t i = 0; i < p->arms.size(); ++i) {
                if (i) os << " || ";
                os << p->arms[i].first << ": " << to_text(p->arms[i].second);
            }
            os << " }";
            break;
        }
        case Kind::Throw:
            os << "throw " << p->chan << "![" << p->chan2 << "] " << prefix_text(p->body());
            break;
        case Kind::Catch:
            os << "catch " << p->chan << "?((" << p->chan2 << ")) in " << to_text(p->body());
            break;
        case Kind::If:
            os << "if " << p->exprs[0].text() << " then " << to_text(p->kids[0]) << " else "
               << to_text(p->kids[1]);
            break;
        case Kind::Par: {
            for (size_t i = 0; i < p->kids.size(); ++i) {
                if (i) os << " | ";
                os << par_component_text(p->kids[i]);
            }
            break;
        }
        case Kind::Inact:
            os << "0";
            break;
        case Kind::Hide:
            os << "new " << p->name << " in " << to_text(p->body());
            break;
        case Kind::DefIn: {
            os << "def ";
            for (size_t i = 0; i < p->decls.size(); ++i) {
                if (i) os << " and ";
                const Decl& d = p->decls[i];
                os << d.name << "(";
                for (size_t j = 0; j < d.params.size(); ++j) {
                    if (j) os << " ";
                    os << d.params[j].name;
                }
                os << ") = " << to_text(d.body);
            }
            os << " in " << to_text(p->body());
            break;
        }
        case Kind::Call: {
            os << p->name << "[";
            for (size_t i = 0; i < p->exprs.size(); ++i) {
                if (i) os << ", ";
                os << p->exprs[i].text();
            }
            os << "]";
            break;
        }
        case Kind::Kill:
            os << "kill(" << p->chan << ")";
            break;
    }
    return os.str();
}

}  // namespace sesscc::hvk
