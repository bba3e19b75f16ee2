#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sesscc/constraint.hpp"
#include "sesscc/syntax.hpp"
#include "sesscc/term.hpp"

namespace sesscc::hvk {

class HProcess;
/// Session-language processes are immutable trees shared by pointer, like
/// the ccp processes they compile into.
using HProc = std::shared_ptr<const HProcess>;

class HvkError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Expression evaluation failure: an unbound variable, or an application
/// whose arguments have the wrong shape (comparing a boolean to an integer,
/// projecting a field from a non-record, ...).
class EvalError : public HvkError {
public:
    using HvkError::HvkError;
};

struct Decl;

/// One parameter of a process definition. Parameters all parse the same
/// way; a parameter is classified as a channel when the body uses it in a
/// channel position (subject of a send/receive/select/branch/throw/catch/
/// kill, or a service name). Channel parameters are instantiated by name
/// renaming, value parameters by evaluated-expression substitution.
struct Param {
    std::string name;
    bool is_chan = false;
};

class HProcess {
public:
    enum class Kind {
        Request,       // request a(k) in P
        Accept,        // accept a(k) in P
        Send,          // k![e1, ...] P
        Receive,       // k?(x1, ...) in P
        Select,        // k <| l; P
        Branch,        // k |> { l1: P1 || ... || ln: Pn }
        Throw,         // throw k![k'] P
        Catch,         // catch k?((k')) in P
        If,            // if e then P else Q
        Par,           // P | Q
        Inact,         // 0
        Hide,          // new u in P
        DefIn,         // def X(x k) = P and ... in Q
        Call,          // X[e k]
        TimedRequest,  // request a(k, m) in P
        DeclAccept,    // accept a(k : C) in P
        Kill,          // kill(k)
    };

    Kind kind = Kind::Inact;
    std::string name;    // service name; Hide binder; Call process variable
    std::string chan;    // session subject; Kill target
    std::string chan2;   // Throw payload / Catch binder
    std::string label;   // Select
    std::vector<Term> exprs;            // Send payload; Call arguments; If condition at [0];
                                        // TimedRequest duration at [0]
    std::vector<std::string> vars;      // Receive binders
    std::vector<std::pair<std::string, HProc>> arms;  // Branch, labels pairwise distinct
    Constraint precond;                 // DeclAccept
    std::vector<Decl> decls;            // DefIn
    std::vector<HProc> kids;            // continuation at [0]; Par parts; If then/else

    const HProc& body() const { return kids[0]; }

    static HProc request(std::string a, std::string k, HProc body);
    static HProc accept(std::string a, std::string k, HProc body);
    static HProc send(std::string k, std::vector<Term> payload, HProc body);
    static HProc receive(std::string k, std::vector<std::string> binders, HProc body);
    static HProc select(std::string k, std::string label, HProc body);
    static HProc branch(std::string k, std::vector<std::pair<std::string, HProc>> arms);
    static HProc throw_(std::string k, std::string delegated, HProc body);
    static HProc catch_(std::string k, std::string binder, HProc body);
    static HProc if_(Term cond, HProc then_part, HProc else_part);
    static HProc par(std::vector<HProc> parts);
    static HProc inact();
    static HProc hide(std::string u, HProc body);
    static HProc def_in(std::vector<Decl> decls, HProc body);
    static HProc call(std::string proc_var, std::vector<Term> args);
    static HProc timed_request(std::string a, std::string k, Term duration, HProc body);
    static HProc decl_accept(std::string a, std::string k, Constraint precond, HProc body);
    static HProc kill(std::string k);
};

/// def X(x k) = P: a named process with mixed value/channel parameters in
/// declaration order.
struct Decl {
    std::string name;
    std::vector<Param> params;
    HProc body;

    std::vector<std::string> value_params() const;
    std::vector<std::string> chan_params() const;
};

bool struct_equal(const HProc& a, const HProc& b);

/// Free occurrences of names: channel/service identifiers plus symbol
/// constants inside expressions. Binders are the session key of request/
/// accept, the catch binder, and new; receive binders and definition
/// parameters shadow the same textual namespace.
std::set<std::string> free_names(const HProc& p);
/// Free expression variables (receive binders and value parameters are the
/// only variable binders).
std::set<std::string> free_value_vars(const HProc& p);
std::set<std::string> free_process_vars(const HProc& p);
/// Every identifier occurring anywhere, bound or free; used to steer fresh
/// name generation away from a process.
std::set<std::string> all_names(const HProc& p);
/// A generator whose output never collides with names already in p.
FreshVarGen primed_gen(const HProc& p);

bool uses_timed_constructs(const HProc& p);

/// Capture-avoiding renaming of free names (both string positions and
/// symbol/variable occurrences inside expressions); binders in the way are
/// alpha-renamed with fresh names.
HProc subst_names(const HProc& p, const std::map<std::string, std::string>& ren,
                  FreshVarGen& fresh);
/// Substitution of evaluated values for free expression variables. Ranges
/// are constants in every caller, so binders only ever shadow.
HProc subst_values(const HProc& p, const Substitution& sub);

/// A folded constant: literal, name, or record built from values. Leftover
/// operators and variables are not values.
bool is_value(const Term& t);

/// Evaluate a closed-under-env expression to a constant. Throws EvalError
/// naming the unbound variable or the stuck application.
Term eval_expr(const Term& e, const Substitution& env = {});

/// Accept-uniqueness warnings: one entry per service name offered by more
/// than one accept, plus a note when the process has free names.
std::vector<std::string> lint(const HProc& p);

/// Concrete syntax; parses back via parse_hvk.
std::string to_text(const HProc& p);

HProc parse_hvk(syn::Lexer& lx);
HProc parse_hvk_text(const std::string& src);

}  // namespace sesscc::hvk
