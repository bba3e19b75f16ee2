#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace sesscc {

/// First-order terms: variables, constants (integers, booleans, symbolic
/// names) and finite tuples.
///
/// A tuple whose first item is a reserved symbol starting with '#' encodes an
/// interpreted function application (arithmetic, comparison, boolean
/// connective, record construction or field projection). fold() evaluates
/// such applications once every argument is ground; everything else is free
/// constructor data. Source-level identifiers can never collide with the
/// reserved names because the parsers reject '#' in identifiers, and '#' is
/// also the separator used when minting fresh variables ("k" -> "k#1").
class Term {
public:
    enum class Kind { Int, Bool, Sym, Var, Tuple };

    Term() : kind_(Kind::Sym), name_("nil") {}

    static Term var(std::string name);
    static Term integer(long long v);
    static Term boolean(bool v);
    static Term symbol(std::string name);
    static Term tuple(std::vector<Term> items);
    /// Interpreted application, e.g. op("add", {x, one}) == #add(x, 1).
    static Term op(const std::string& fn, std::vector<Term> args);
    /// Record constant; fields are kept sorted by name so records compare
    /// and print canonically.
    static Term record(const std::vector<std::pair<std::string, Term>>& fields);

    Kind kind() const { return kind_; }
    bool is_var() const { return kind_ == Kind::Var; }
    bool is_const() const { return kind_ == Kind::Int || kind_ == Kind::Bool || kind_ == Kind::Sym; }
    bool is_tuple() const { return kind_ == Kind::Tuple; }
    /// True for tuples headed by a reserved '#' symbol.
    bool is_op() const;
    /// Operation name without the '#', empty when !is_op().
    std::string op_name() const;

    const std::string& name() const { return name_; }   // Var, Sym
    long long int_value() const { return ival_; }
    bool bool_value() const { return bval_; }
    const std::vector<Term>& items() const { return items_; }

    bool ground() const;                       // no variables anywhere
    bool contains_var(const std::string& v) const;
    void collect_vars(std::set<std::string>& out) const;
    std::set<std::string> vars() const;

    /// Capture-free first-order substitution (terms have no binders).
    Term substitute(const std::map<std::string, Term>& sub) const;

    /// Evaluate interpreted applications bottom-up. Applications that are
    /// not ground, or whose arguments have the wrong shape, are left intact.
    Term fold() const;

    /// Canonical concrete syntax; parseable back by the shared term parser.
    std::string text() const;

    bool operator==(const Term& o) const;
    bool operator!=(const Term& o) const { return !(*this == o); }
    bool operator<(const Term& o) const { return compare(o) < 0; }
    /// Single-pass three-way order. Orderings must go through this rather
    /// than element-wise </> probing, which revisits shared-prefix subtrees
    /// exponentially often on deep terms.
    int compare(const Term& o) const;

private:
    Kind kind_;
    std::string name_;
    long long ival_ = 0;
    bool bval_ = false;
    std::vector<Term> items_;
};

/// Predicate applied to terms. The predicate name is plain text; arities are
/// policed by the store the first time a predicate is told or queried.
struct Atom {
    std::string pred;
    std::vector<Term> args;

    std::string text() const;
    Atom substitute(const std::map<std::string, Term>& sub) const;
    Atom fold() const;
    void collect_vars(std::set<std::string>& out) const;

    bool operator==(const Atom& o) const { return pred == o.pred && args == o.args; }
    bool operator<(const Atom& o) const;
};

/// Finite mapping from variable names to terms.
using Substitution = std::map<std::string, Term>;

std::string substitution_text(const Substitution& s);

/// Mints variable names that are fresh for one engine/run instance.
/// Hints are stripped at the first '#', so freshening an already-fresh
/// "k#4" yields "k#<n>", never "k#4#<n>".
class FreshVarGen {
public:
    std::string fresh(const std::string& hint);
    size_t minted() const { return counter_; }

private:
    size_t counter_ = 0;
};

}  // namespace sesscc
