#pragma once

#include <string>
#include <vector>

#include "sesscc/term.hpp"

namespace sesscc {

/// Constraints over the term language: truth values, atoms, (dis)equalities,
/// finite conjunction and existential quantification. This is the whole
/// assertion language shared by the store, the process calculi and the
/// trace checker.
class Constraint {
public:
    enum class Kind { True, False, AtomC, Eq, Neq, And, Exists };

    Constraint() : kind_(Kind::True) {}

    static Constraint top();
    static Constraint bottom();
    static Constraint atom(Atom a);
    static Constraint atom(const std::string& pred, std::vector<Term> args);
    static Constraint eq(Term a, Term b);
    static Constraint neq(Term a, Term b);
    /// Flattens nested conjunctions, drops True units, collapses to False
    /// when any conjunct is False.
    static Constraint conj(std::vector<Constraint> parts);
    static Constraint exists(std::vector<std::string> binders, Constraint body);
    /// Sugar for boolean-valued interpreted terms: holds iff t folds to true.
    static Constraint truth(Term t);

    Kind kind() const { return kind_; }
    const Atom& get_atom() const { return atom_; }
    const Term& lhs() const { return terms_[0]; }
    const Term& rhs() const { return terms_[1]; }
    const std::vector<Constraint>& conjuncts() const { return kids_; }
    const std::vector<std::string>& binders() const { return binders_; }
    const Constraint& body() const { return kids_[0]; }

    bool is_true() const { return kind_ == Kind::True; }
    bool is_false() const { return kind_ == Kind::False; }

    /// Capture-avoiding; Exists binders shadow the substitution and are
    /// renamed with an unused name when a range term would be captured.
    Constraint substitute(const Substitution& sub) const;
    Constraint fold() const;

    std::set<std::string> free_vars() const;
    void collect_free_vars(std::set<std::string>& out) const;
    /// Flat list of conjuncts (self when not a conjunction).
    std::vector<Constraint> flat() const;

    std::string text() const;

    bool operator==(const Constraint& o) const;
    bool operator!=(const Constraint& o) const { return !(*this == o); }
    bool operator<(const Constraint& o) const;
    /// Single-pass three-way order; see Term::compare for why orderings
    /// must not probe elements twice.
    int compare(const Constraint& o) const;

private:
    Kind kind_;
    Atom atom_;
    std::vector<Term> terms_;          // Eq / Neq operands
    std::vector<Constraint> kids_;     // And conjuncts, Exists body at [0]
    std::vector<std::string> binders_; // Exists
};

}  // namespace sesscc
