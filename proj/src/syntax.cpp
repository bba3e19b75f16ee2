#include "sesscc/syntax.hpp"

#include <cctype>

namespace sesscc::syn {

namespace {

const char* kMultiPunct[] = {"||", "|>", "<|", "/\\", "!=", "<=", ">=", "==", "<>"};

const char* kReserved[] = {
    // shared constraint grammar
    "true", "false", "exists", "and", "or", "not",
    // ccp process grammar
    "skip", "tell", "ptell", "abs", "local", "next", "unless", "when",
    "wait", "waitack", "whenever", "do",
    // session-language grammar
    "request", "accept", "in", "if", "then", "else", "new", "def", "kill",
    "throw", "catch",
};

}  // namespace

bool is_reserved_word(const std::string& id) {
    for (const char* r : kReserved)
        if (id == r) return true;
    return false;
}

Lexer::Lexer(std::string src, bool hash_idents)
    : src_(std::move(src)), hash_idents_(hash_idents) {}

void Lexer::ensure(size_t n) {
    while (buf_.size() <= cursor_ + n) buf_.push_back(lex_one());
}

const Token& Lexer::peek(size_t ahead) {
    ensure(ahead);
    return buf_[cursor_ + ahead];
}

Token Lexer::next() {
    ensure(0);
    return buf_[cursor_++];
}

bool Lexer::at(const std::string& text, size_t ahead) {
    const Token& t = peek(ahead);
    return t.kind != Token::Kind::End && t.text == text;
}

bool Lexer::at_ident(size_t ahead) { return peek(ahead).kind == Token::Kind::Ident; }

bool Lexer::accept(const std::string& text) {
    if (!at(text)) return false;
    next();
    return true;
}

Token Lexer::expect(const std::string& text, const char* context) {
    if (!at(text)) {
        const Token& t = peek();
        fail_at(t, std::string("expected '") + text + "' in " + context + ", found '" +
                       (t.kind == Token::Kind::End ? "<end>" : t.text) + "'");
    }
    return next();
}

Token Lexer::expect_ident(const char* context) {
    const Token& t = peek();
    if (t.kind != Token::Kind::Ident)
        fail_at(t, std::string("expected identifier in ") + context + ", found '" +
                       (t.kind == Token::Kind::End ? "<end>" : t.text) + "'");
    return next();
}

bool Lexer::done() { return peek().kind == Token::Kind::End; }

void Lexer::fail(const std::string& msg) { fail_at(peek(), msg); }

void Lexer::fail_at(const Token& t, const std::string& msg) {
    throw SyntaxError(msg, t.line, t.col);
}

Token Lexer::lex_one() {
    for (;;) {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
        if (pos_ + 1 < src_.size() && src_[pos_] == '/' && src_[pos_ + 1] == '/') {
            while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            continue;
        }
        break;
    }

    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) {
        t.kind = Token::Kind::End;
        return t;
    }

    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
        size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
            ++col_;
        }
        t.kind = Token::Kind::Int;
        t.text = src_.substr(start, pos_ - start);
        t.ival = std::stoll(t.text);
        return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos_;
        auto ident_char = [&](char ch) {
            return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_';
        };
        while (pos_ < src_.size() && ident_char(src_[pos_])) {
            ++pos_;
            ++col_;
        }
        // Freshened names: absorb '#<digits or ident chars>' chains.
        while (hash_idents_ && pos_ < src_.size() && src_[pos_] == '#') {
            ++pos_;
            ++col_;
            while (pos_ < src_.size() && ident_char(src_[pos_])) {
                ++pos_;
                ++col_;
            }
        }
        t.kind = Token::Kind::Ident;
        t.text = src_.substr(start, pos_ - start);
        return t;
    }
    if (c == '#')
        throw SyntaxError("'#' is reserved for freshened names and cannot appear here",
                          line_, col_);

    for (const char* mp : kMultiPunct) {
        size_t len = std::char_traits<char>::length(mp);
        if (src_.compare(pos_, len, mp) == 0) {
            t.kind = Token::Kind::Punct;
            t.text = mp;
            pos_ += len;
            col_ += static_cast<int>(len);
            return t;
        }
    }
    t.kind = Token::Kind::Punct;
    t.text = std::string(1, c);
    ++pos_;
    ++col_;
    return t;
}

namespace {

Term resolve_ident(const std::string& name, const TermScope& scope) {
    if (scope.bound.count(name)) return Term::var(name);
    if (scope.hash_vars && name.find('#') != std::string::npos) return Term::var(name);
    return Term::symbol(name);
}

Term parse_or(Lexer& lx, const TermScope& scope);

Term parse_primary(Lexer& lx, const TermScope& scope) {
    const Token& t = lx.peek();
    if (t.kind == Token::Kind::Int) return Term::integer(lx.next().ival);
    if (lx.accept("-")) {
        Term inner = parse_primary(lx, scope);
        if (inner.kind() == Term::Kind::Int) return Term::integer(-inner.int_value());
        return Term::op("sub", {Term::integer(0), inner});
    }
    if (scope.qmark_vars && lx.accept("?")) {
        Token id = lx.expect_ident("variable marker");
        return Term::var(id.text);
    }
    if (t.kind == Token::Kind::Ident) {
        if (t.text == "true") {
            lx.next();
            return Term::boolean(true);
        }
        if (t.text == "false") {
            lx.next();
            return Term::boolean(false);
        }
        if (is_reserved_word(t.text)) lx.fail("reserved word '" + t.text + "' used as a term");
        return resolve_ident(lx.next().text, scope);
    }
    if (lx.accept("(")) {
        if (lx.accept(")")) return Term::tuple({});
        Term first = parse_or(lx, scope);
        if (lx.accept(")")) return first;  // grouping
        std::vector<Term> items{first};
        while (lx.accept(",")) {
            if (lx.at(")")) break;  // trailing comma: 1-tuple "(a,)"
            items.push_back(parse_or(lx, scope));
        }
        lx.expect(")", "tuple");
        return Term::tuple(std::move(items));
    }
    if (lx.accept("{")) {
        std::vector<std::pair<std::string, Term>> fields;
        if (!lx.at("}")) {
            do {
                Token name = lx.expect_ident("record field");
                lx.expect("=", "record field");
                fields.emplace_back(name.text, parse_or(lx, scope));
            } while (lx.accept(","));
        }
        lx.expect("}", "record");
        return Term::record(fields);
    }
    lx.fail("expected a term, found '" +
            (t.kind == Token::Kind::End ? "<end>" : t.text) + "'");
}

Term parse_postfix(Lexer& lx, const TermScope& scope) {
    Term t = parse_primary(lx, scope);
    while (lx.at(".")) {
        lx.next();
        Token field = lx.expect_ident("field access");
        t = Term::op("field", {t, Term::symbol(field.text)});
    }
    return t;
}

Term parse_unary(Lexer& lx, const TermScope& scope) {
    if (lx.at("not")) {
        lx.next();
        return Term::op("not", {parse_unary(lx, scope)});
    }
    return parse_postfix(lx, scope);
}

Term parse_mul(Lexer& lx, const TermScope& scope) {
    Term t = parse_unary(lx, scope);
    while (lx.at("*")) {
        lx.next();
        t = Term::op("mul", {t, parse_unary(lx, scope)});
    }
    return t;
}

Term parse_add(Lexer& lx, const TermScope& scope) {
    Term t = parse_mul(lx, scope);
    for (;;) {
        if (lx.at("+")) {
            lx.next();
            t = Term::op("add", {t, parse_mul(lx, scope)});
        } else if (lx.at("-")) {
            lx.next();
            t = Term::op("sub", {t, parse_mul(lx, scope)});
        } else {
            return t;
        }
    }
}

Term parse_cmp(Lexer& lx, const TermScope& scope) {
    Term t = parse_add(lx, scope);
    struct Cmp {
        const char* tok;
        const char* fn;
    };
    static const Cmp cmps[] = {{"<=", "le"}, {"<", "lt"}, {">=", "ge"},
                               {">", "gt"},  {"==", "eq"}, {"<>", "ne"}};
    for (const auto& c : cmps) {
        if (lx.at(c.tok)) {
            lx.next();
            return Term::op(c.fn, {t, parse_add(lx, scope)});
        }
    }
    if (scope.eq_is_expr && lx.at("=")) {
        lx.next();
        return Term::op("eq", {t, parse_add(lx, scope)});
    }
    return t;
}

Term parse_and(Lexer& lx, const TermScope& scope) {
    Term t = parse_cmp(lx, scope);
    while (lx.at("and")) {
        lx.next();
        t = Term::op("and", {t, parse_cmp(lx, scope)});
    }
    return t;
}

Term parse_or(Lexer& lx, const TermScope& scope) {
    Term t = parse_and(lx, scope);
    while (lx.at("or")) {
        lx.next();
        t = Term::op("or", {t, parse_and(lx, scope)});
    }
    return t;
}

bool is_bool_op(const Term& t) {
    if (!t.is_op()) return false;
    const std::string fn = t.op_name();
    return fn == "le" || fn == "lt" || fn == "ge" || fn == "gt" || fn == "eq" ||
           fn == "ne" || fn == "and" || fn == "or" || fn == "not";
}

Constraint parse_constraint_primary(Lexer& lx, const TermScope& scope) {
    if (lx.at("true") && !lx.at("=", 1) && !lx.at("!=", 1)) {
        lx.next();
        return Constraint::top();
    }
    if (lx.at("false") && !lx.at("=", 1) && !lx.at("!=", 1)) {
        lx.next();
        return Constraint::bottom();
    }
    if (lx.at("exists")) {
        lx.next();
        TermScope inner = scope;
        std::vector<std::string> binders;
        do {
            Token b = lx.expect_ident("exists binder");
            if (is_reserved_word(b.text)) lx.fail_at(b, "reserved word used as binder");
            binders.push_back(b.text);
            inner.bound.insert(b.text);
        } while (lx.accept(","));
        lx.expect(".", "exists");
        Constraint body = parse_constraint(lx, inner);
        return Constraint::exists(std::move(binders), std::move(body));
    }
    if (lx.at("(")) {
        // '(' may open a grouped constraint or a parenthesised term such as
        // "(x + 1) = 2"; try the constraint reading first and rewind if it
        // does not go through.
        size_t save = lx.mark();
        try {
            lx.next();
            Constraint c = parse_constraint(lx, scope);
            lx.expect(")", "constraint group");
            return c;
        } catch (const SyntaxError&) {
            lx.rewind(save);
        }
    }
    // Atom: identifier directly applied to an argument list, or a bare
    // (nullary) predicate not followed by a relational operator.
    if (lx.at_ident() && !is_reserved_word(lx.peek().text)) {
        // "outp" is the bookkeeping predicate minted by the persistent-tell
        // and wait expansions. Source programs may not tell it directly:
        // trace comparison erases outp atoms, so a user-told one could mask
        // a real difference between runs.
        auto reject_bookkeeping = [&](const Token& name) {
            if (name.text == "outp")
                lx.fail_at(name, "predicate 'outp' is reserved for internal bookkeeping");
        };
        if (lx.at("(", 1)) {
            Token name = lx.next();
            lx.next();  // '('
            std::vector<Term> args;
            if (!lx.at(")")) {
                do {
                    args.push_back(parse_or(lx, scope));
                } while (lx.accept(","));
            }
            lx.expect(")", "atom");
            if (!lx.at("=") && !lx.at("!=") && !lx.at(".")) {
                reject_bookkeeping(name);
                return Constraint::atom(name.text, std::move(args));
            }
            lx.fail_at(name, "atoms cannot be used as terms");
        }
        bool relational = lx.at("=", 1) || lx.at("!=", 1) || lx.at("<=", 1) ||
                          lx.at("<", 1) || lx.at(">=", 1) || lx.at(">", 1) ||
                          lx.at("==", 1) || lx.at("<>", 1) || lx.at(".", 1) ||
                          lx.at("and", 1) || lx.at("or", 1) ||
                          lx.at("+", 1) || lx.at("-", 1) || lx.at("*", 1);
        if (!relational) {
            Token name = lx.next();
            reject_bookkeeping(name);
            return Constraint::atom(name.text, {});
        }
    }
    Term t = parse_cmp(lx, scope);
    // boolean connectives over comparisons stay on the term level
    while (lx.at("and") || lx.at("or")) {
        std::string fn = lx.next().text;
        t = Term::op(fn, {t, parse_cmp(lx, scope)});
    }
    if (lx.accept("=")) return Constraint::eq(t, parse_cmp(lx, scope));
    if (lx.accept("!=")) return Constraint::neq(t, parse_cmp(lx, scope));
    if (is_bool_op(t)) return Constraint::truth(t);
    lx.fail("expected a constraint, found a bare term '" + t.text() + "'");
}

}  // namespace

Term parse_term(Lexer& lx, const TermScope& scope) { return parse_or(lx, scope); }

Constraint parse_constraint(Lexer& lx, const TermScope& scope) {
    std::vector<Constraint> parts;
    parts.push_back(parse_constraint_primary(lx, scope));
    while (lx.accept("/\\")) parts.push_back(parse_constraint_primary(lx, scope));
    return Constraint::conj(std::move(parts));
}

Term parse_term_text(const std::string& text, const TermScope& scope, bool hash_idents) {
    Lexer lx(text, hash_idents);
    Term t = parse_term(lx, scope);
    if (!lx.done()) lx.fail("trailing input after term");
    return t;
}

Constraint parse_constraint_text(const std::string& text, const TermScope& scope,
                                 bool hash_idents) {
    Lexer lx(text, hash_idents);
    Constraint c = parse_constraint(lx, scope);
    if (!lx.done()) lx.fail("trailing input after constraint");
    return c;
}

Atom parse_trace_atom(const std::string& text) {
    TermScope scope;
    scope.hash_vars = true;
    Lexer lx(text, /*hash_idents=*/true);
    Token name = lx.expect_ident("atom");
    Atom a{name.text, {}};
    if (lx.accept("(")) {
        if (!lx.at(")")) {
            do {
                a.args.push_back(parse_term(lx, scope));
            } while (lx.accept(","));
        }
        lx.expect(")", "atom");
    }
    if (!lx.done()) lx.fail("trailing input after atom");
    return a;
}

}  // namespace sesscc::syn
