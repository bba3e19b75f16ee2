#include "sesscc/hvk/ast.hpp"

#include <map>

namespace sesscc::hvk {

namespace {

using Kind = HProcess::Kind;
using syn::Lexer;
using syn::Token;

/// Value variables currently in scope (receive binders and definition
/// parameters). Everything else resolves to a symbol constant.
using Scope = std::set<std::string>;

syn::TermScope expr_scope(const Scope& env) {
    syn::TermScope s;
    s.bound = env;
    s.eq_is_expr = true;
    return s;
}

std::string ident(Lexer& lx, const char* context) {
    Token t = lx.expect_ident(context);
    if (syn::is_reserved_word(t.text))
        lx.fail_at(t, "reserved word '" + t.text + "' used as a name");
    if (t.text.rfind("dur_", 0) == 0)
        lx.fail_at(t, "'dur_' names are reserved for session-duration variables "
                      "in acceptance preconditions");
    return t.text;
}

void check_dur_free(Lexer& lx, const Token& at, const std::set<std::string>& idents,
                    const std::string& allowed) {
    for (const std::string& n : idents)
        if (n.rfind("dur_", 0) == 0 && n != allowed)
            lx.fail_at(at, "'" + n + "' can only appear in the precondition of "
                           "the acceptance that binds it");
}

std::set<std::string> term_ident_set(const Term& t) {
    std::set<std::string> out;
    t.collect_vars(out);
    // Symbols too: a duration variable misspelled outside any binder scope
    // resolves to a symbol, and should be rejected just the same.
    struct Walk {
        static void go(const Term& t, std::set<std::string>& out) {
            if (t.kind() == Term::Kind::Sym) {
                out.insert(t.name());
                return;
            }
            if (t.is_tuple())
                for (const Term& it : t.items()) go(it, out);
        }
    };
    Walk::go(t, out);
    return out;
}

Term parse_expr(Lexer& lx, const Scope& env) {
    Token at = lx.peek();
    Term t = syn::parse_term(lx, expr_scope(env));
    check_dur_free(lx, at, term_ident_set(t), "");
    return t;
}

HProc parse_par(Lexer& lx, Scope env);

HProc parse_prefix(Lexer& lx, const Scope& env) {
    Token t = lx.peek();

    if (t.kind == Token::Kind::Int && t.ival == 0) {
        lx.next();
        return HProcess::inact();
    }
    if (lx.accept("(")) {
        HProc p = parse_par(lx, env);
        lx.expect(")", "parenthesized process");
        return p;
    }
    if (lx.accept("request")) {
        std::string a = ident(lx, "session request");
        lx.expect("(", "session request");
        std::string k = ident(lx, "session request");
        if (lx.accept(",")) {
            Term dur = parse_expr(lx, env);
            lx.expect(")", "timed session request");
            lx.expect("in", "timed session request");
            return HProcess::timed_request(a, k, dur, parse_par(lx, env));
        }
        lx.expect(")", "session request");
        lx.expect("in", "session request");
        return HProcess::request(a, k, parse_par(lx, env));
    }
    if (lx.accept("accept")) {
        std::string a = ident(lx, "session accept");
        lx.expect("(", "session accept");
        std::string k = ident(lx, "session accept");
        if (lx.accept(":")) {
            Token at = lx.peek();
            syn::TermScope cs;
            cs.bound = env;
            cs.bound.insert("dur_" + k);
            Constraint pre = syn::parse_constraint(lx, cs);
            std::set<std::string> ids;
            struct CWalk {
                static void go(const Constraint& c, std::set<std::string>& out) {
                    switch (c.kind()) {
                        case Constraint::Kind::AtomC:
                            for (const Term& t : c.get_atom().args)
                                for (const std::string& n : term_ident_set(t)) out.insert(n);
                            return;
                        case Constraint::Kind::Eq:
                        case Constraint::Kind::Neq:
                            for (const std::string& n : term_ident_set(c.lhs())) out.insert(n);
                            for (const std::string& n : term_ident_set(c.rhs())) out.insert(n);
                            return;
                        case Constraint::Kind::And:
                            for (const Constraint& k : c.conjuncts()) go(k, out);
                            return;
                        case Constraint::Kind::Exists:
                            go(c.body(), out);
                            return;
                        default:
                            return;
                    }
                }
            };
            CWalk::go(pre, ids);
            check_dur_free(lx, at, ids, "dur_" + k);
            lx.expect(")", "declarative session accept");
            lx.expect("in", "declarative session accept");
            return HProcess::decl_accept(a, k, pre, parse_par(lx, env));
        }
        lx.expect(")", "session accept");
        lx.expect("in", "session accept");
        return HProcess::accept(a, k, parse_par(lx, env));
    }
    if (lx.accept("throw")) {
        std::string k = ident(lx, "session delegation");
        lx.expect("!", "session delegation");
        lx.expect("[", "session delegation");
        std::string kp = ident(lx, "session delegation");
        lx.expect("]", "session delegation");
        return HProcess::throw_(k, kp, parse_prefix(lx, env));
    }
    if (lx.accept("catch")) {
        std::string k = ident(lx, "session reception");
        lx.expect("?", "session reception");
        lx.expect("(", "session reception");
        lx.expect("(", "session reception");
        std::string kp = ident(lx, "session reception");
        lx.expect(")", "session reception");
        lx.expect(")", "session reception");
        lx.expect("in", "session reception");
        return HProcess::catch_(k, kp, parse_par(lx, env));
    }
    if (lx.accept("if")) {
        Term cond = parse_expr(lx, env);
        lx.expect("then", "conditional");
        HProc then_part = parse_par(lx, env);
        lx.expect("else", "conditional");
        return HProcess::if_(cond, then_part, parse_par(lx, env));
    }
    if (lx.accept("new")) {
        std::vector<std::string> names{ident(lx, "restriction")};
        while (lx.accept(",")) names.push_back(ident(lx, "restriction"));
        lx.expect("in", "restriction");
        HProc body = parse_par(lx, env);
        for (auto it = names.rbegin(); it != names.rend(); ++it)
            body = HProcess::hide(*it, body);
        return body;
    }
    if (lx.accept("kill")) {
        lx.expect("(", "session abort");
        std::string k = ident(lx, "session abort");
        lx.expect(")", "session abort");
        return HProcess::kill(k);
    }
    if (lx.accept("def")) {
        std::vector<Decl> decls;
        do {
            Decl d;
            Token name_tok = lx.peek();
            d.name = ident(lx, "definition");
            for (const Decl& prev : decls)
                if (prev.name == d.name)
                    lx.fail_at(name_tok, "duplicate definition '" + d.name + "'");
            lx.expect("(", "definition");
            while (!lx.at(")")) {
                Token ptok = lx.peek();
                std::string pn = ident(lx, "definition parameter");
                for (const Param& prev : d.params)
                    if (prev.name == pn)
                        lx.fail_at(ptok, "duplicate parameter '" + pn + "'");
                d.params.push_back({pn, false});
                lx.accept(",");
            }
            lx.expect(")", "definition");
            lx.expect("=", "definition");
            Scope inner = env;
            for (const Param& pr : d.params) inner.insert(pr.name);
            d.body = parse_par(lx, inner);
            decls.push_back(std::move(d));
        } while (lx.accept("and"));
        lx.expect("in", "definition");
        return HProcess::def_in(std::move(decls), parse_par(lx, env));
    }

    if (t.kind == Token::Kind::Ident) {
        std::string head = ident(lx, "process");
        if (lx.accept("!")) {
            lx.expect("[", "send");
            std::vector<Term> payload;
            while (!lx.at("]")) {
                payload.push_back(parse_expr(lx, env));
                lx.accept(",");
            }
            lx.expect("]", "send");
            return HProcess::send(head, std::move(payload), parse_prefix(lx, env));
        }
        if (lx.accept("?")) {
            lx.expect("(", "receive");
            std::vector<std::string> binders;
            while (!lx.at(")")) {
                Token btok = lx.peek();
                std::string b = ident(lx, "receive binder");
                for (const std::string& prev : binders)
                    if (prev == b) lx.fail_at(btok, "duplicate binder '" + b + "'");
                binders.push_back(b);
                lx.accept(",");
            }
            lx.expect(")", "receive");
            lx.expect("in", "receive");
            Scope inner = env;
            for (const std::string& b : binders) inner.insert(b);
            return HProcess::receive(head, std::move(binders), parse_par(lx, inner));
        }
        if (lx.accept("<|")) {
            std::string label = ident(lx, "selection");
            HProc cont = HProcess::inact();
            if (lx.accept(";")) cont = parse_prefix(lx, env);
            return HProcess::select(head, label, cont);
        }
        if (lx.accept("|>")) {
            lx.expect("{", "branching");
            std::vector<std::pair<std::string, HProc>> arms;
            do {
                Token ltok = lx.peek();
                std::string label = ident(lx, "branch label");
                for (const auto& [prev, q] : arms)
                    if (prev == label) lx.fail_at(ltok, "duplicate branch label '" + label + "'");
                lx.expect(":", "branch arm");
                arms.emplace_back(label, parse_par(lx, env));
            } while (lx.accept("||"));
            lx.expect("}", "branching");
            return HProcess::branch(head, std::move(arms));
        }
        if (lx.accept("[")) {
            std::vector<Term> args;
            while (!lx.at("]")) {
                args.push_back(parse_expr(lx, env));
                lx.accept(",");
            }
            lx.expect("]", "call");
            return HProcess::call(head, std::move(args));
        }
        lx.fail("expected a session action after '" + head + "'");
    }
    lx.fail("expected a process, found '" +
            (t.kind == Token::Kind::End ? "<end>" : t.text) + "'");
}

HProc parse_par(Lexer& lx, Scope env) {
    std::vector<HProc> parts{parse_prefix(lx, env)};
    while (lx.accept("|")) parts.push_back(parse_prefix(lx, env));
    return HProcess::par(std::move(parts));
}

/// True when `name` is used, unshadowed, where only a channel or service
/// name can stand.
bool occurs_as_channel(const std::string& name, const HProc& p) {
    auto is_binder = [&](std::initializer_list<const std::string*> binders) {
        for (const std::string* b : binders)
            if (*b == name) return true;
        return false;
    };
    switch (p->kind) {
        case Kind::Request:
        case Kind::Accept:
        case Kind::TimedRequest:
        case Kind::DeclAccept:
            // Durations and preconditions hold no channel positions.
            if (p->name == name) return true;
            if (is_binder({&p->chan})) return false;
            return occurs_as_channel(name, p->body());
        case Kind::Send:
        case Kind::Select:
            if (p->chan == name) return true;
            return occurs_as_channel(name, p->body());
        case Kind::Receive:
            if (p->chan == name) return true;
            for (const std::string& v : p->vars)
                if (v == name) return false;
            return occurs_as_channel(name, p->body());
        case Kind::Branch:
            if (p->chan == name) return true;
            for (const auto& [l, q] : p->arms)
                if (occurs_as_channel(name, q)) return true;
            return false;
        case Kind::Throw:
            if (p->chan == name || p->chan2 == name) return true;
            return occurs_as_channel(name, p->body());
        case Kind::Catch:
            if (p->chan == name) return true;
            if (is_binder({&p->chan2})) return false;
            return occurs_as_channel(name, p->body());
        case Kind::Kill:
            return p->chan == name;
        case Kind::Hide:
            if (is_binder({&p->name})) return false;
            return occurs_as_channel(name, p->body());
        case Kind::DefIn:
            for (const Decl& d : p->decls) {
                bool shadowed = false;
                for (const Param& pr : d.params)
                    if (pr.name == name) shadowed = true;
                if (!shadowed && occurs_as_channel(name, d.body)) return true;
            }
            return occurs_as_channel(name, p->body());
        case Kind::If:
        case Kind::Par:
            for (const HProc& q : p->kids)
                if (occurs_as_channel(name, q)) return true;
            return false;
        case Kind::Call:
        case Kind::Inact:
            return false;
    }
    return false;
}

using DeclEnv = std::vector<std::map<std::string, Decl>>;

const Decl* lookup_decl(const DeclEnv& env, const std::string& name) {
    for (auto it = env.rbegin(); it != env.rend(); ++it) {
        auto found = it->find(name);
        if (found != it->end()) return &found->second;
    }
    return nullptr;
}

/// Classifies definition parameters by how the body uses them and checks
/// every call against its definition: arity, and bare names in channel
/// positions. Scoping errors are semantic, not lexical, so they surface as
/// HvkError rather than SyntaxError.
HProc finalize(const HProc& p, DeclEnv& env) {
    HProcess n = *p;
    switch (n.kind) {
        case Kind::DefIn: {
            for (Decl& d : n.decls)
                for (Param& pr : d.params) pr.is_chan = occurs_as_channel(pr.name, d.body);
            std::map<std::string, Decl> frame;
            for (const Decl& d : n.decls) frame[d.name] = d;
            env.push_back(std::move(frame));
            for (Decl& d : n.decls) d.body = finalize(d.body, env);
            n.kids[0] = finalize(n.kids[0], env);
            env.pop_back();
            return std::make_shared<const HProcess>(std::move(n));
        }
        case Kind::Call: {
            const Decl* d = lookup_decl(env, n.name);
            if (!d) throw HvkError("call to unknown definition '" + n.name + "'");
            if (n.exprs.size() != d->params.size())
                throw HvkError("'" + n.name + "' takes " + std::to_string(d->params.size()) +
                               " arguments, got " + std::to_string(n.exprs.size()));
            for (size_t i = 0; i < n.exprs.size(); ++i) {
                const Term& a = n.exprs[i];
                if (d->params[i].is_chan && a.kind() != Term::Kind::Sym &&
                    a.kind() != Term::Kind::Var)
                    throw HvkError("argument " + std::to_string(i + 1) + " of '" + n.name +
                                   "' is a channel and must be a name, got " + a.text());
            }
            return p;
        }
        default: {
            for (auto& [l, q] : n.arms) q = finalize(q, env);
            for (HProc& q : n.kids) q = finalize(q, env);
            return std::make_shared<const HProcess>(std::move(n));
        }
    }
}

}  // namespace

HProc parse_hvk(Lexer& lx) {
    HProc p = parse_par(lx, {});
    if (!lx.done()) lx.fail("unexpected trailing input");
    DeclEnv env;
    return finalize(p, env);
}

HProc parse_hvk_text(const std::string& src) {
    Lexer lx(src);
    return parse_hvk(lx);
}

}  // namespace sesscc::hvk
