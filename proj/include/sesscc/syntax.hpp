#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sesscc/constraint.hpp"
#include "sesscc/term.hpp"

namespace sesscc::syn {

class SyntaxError : public std::runtime_error {
public:
    SyntaxError(const std::string& msg, int line, int col)
        : std::runtime_error("syntax error at " + std::to_string(line) + ":" +
                             std::to_string(col) + ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

struct Token {
    enum class Kind { Ident, Int, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    long long ival = 0;
    int line = 1;
    int col = 1;
};

/// Tokenizer shared by every concrete grammar in the project. '//' starts a
/// line comment. Identifiers are [A-Za-z_][A-Za-z0-9_]*; when `hash_idents`
/// is set (trace and input files) a '#' suffix chain is folded into the
/// identifier so freshened names like k#12 come back as single tokens.
/// Source grammars leave it unset, which makes '#' unlexable and so keeps
/// the fresh-name namespace out of user programs.
class Lexer {
public:
    explicit Lexer(std::string src, bool hash_idents = false);

    const Token& peek(size_t ahead = 0);
    Token next();
    bool at(const std::string& text, size_t ahead = 0);
    bool at_ident(size_t ahead = 0);
    bool accept(const std::string& text);
    Token expect(const std::string& text, const char* context);
    Token expect_ident(const char* context);
    bool done();
    [[noreturn]] void fail(const std::string& msg);
    [[noreturn]] void fail_at(const Token& t, const std::string& msg);

    /// Checkpoint/rewind for the few places that need local backtracking.
    size_t mark() const { return cursor_; }
    void rewind(size_t mark) { cursor_ = mark; }

private:
    void ensure(size_t n);
    Token lex_one();

    std::string src_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    bool hash_idents_;
    std::vector<Token> buf_;
    size_t cursor_ = 0;
};

/// Identifier resolution for the term/constraint grammar. Identifiers bound
/// in `bound` become variables, as do '#'-names (when enabled) and
/// '?'-marked names (template files); everything else is a symbol constant.
struct TermScope {
    std::set<std::string> bound;
    bool qmark_vars = false;
    bool hash_vars = false;
    /// Accept '=' as the equality operator inside expressions (session
    /// language); inside constraints '=' belongs to the constraint level.
    bool eq_is_expr = false;
};

/// Expression/term grammar with the usual precedence: or < and < comparison
/// < additive < multiplicative < not < field access < primary.
Term parse_term(Lexer& lx, const TermScope& scope);

/// true | false | p(t,..) | t = t | t != t | bare comparison | c /\ c |
/// exists x, y. c | ( c )
Constraint parse_constraint(Lexer& lx, const TermScope& scope);

Term parse_term_text(const std::string& text, const TermScope& scope, bool hash_idents = false);
Constraint parse_constraint_text(const std::string& text, const TermScope& scope,
                                 bool hash_idents = false);
/// Atom in canonical trace form, freshened names allowed.
Atom parse_trace_atom(const std::string& text);

bool is_reserved_word(const std::string& id);

}  // namespace sesscc::syn
