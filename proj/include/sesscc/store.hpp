#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sesscc/constraint.hpp"
#include "sesscc/term.hpp"

namespace sesscc {

/// Raised when a predicate is re-used with a different arity.
class MalformedConstraintError : public std::runtime_error {
public:
    explicit MalformedConstraintError(const std::string& what) : std::runtime_error(what) {}
};

/// Union-find over terms, congruence-closed over tuple structure: equating
/// a with b also equates f(..a..) with f(..b..). Representatives prefer
/// constants, then tuples, then variables, so canon() surfaces a known
/// constant value whenever one exists. Interpreted applications are folded
/// during canonicalisation, hence x = 3 makes (x + 1) canonicalise to 4.
class CongruenceClosure {
public:
    /// Canonical representative (fixpoint of child-canonicalise + fold +
    /// representative lookup).
    Term canon(const Term& t) const;
    void merge(const Term& a, const Term& b);
    bool equal(const Term& a, const Term& b) const { return canon(a) == canon(b); }
    /// True once two incompatible ground shapes (distinct constants,
    /// constant vs tuple, tuples of different arity) were identified.
    bool clashed() const { return clash_; }
    const std::vector<std::pair<Term, Term>>& told() const { return told_; }
    size_t merge_count() const { return told_.size(); }

private:
    Term follow(const Term& t) const;
    void resaturate();

    std::map<Term, Term> rep_;
    std::vector<std::pair<Term, Term>> told_;
    bool clash_ = false;
};

/// Monotone constraint store for one time unit: a set of atoms, equalities
/// under congruence closure, told disequalities and the names hidden by
/// opened existentials. An inconsistent store entails everything.
class Store {
public:
    /// Conjoin c (tell). Interpreted terms are folded first, so stores only
    /// ever hold evaluated data. Existential bodies are opened with binders
    /// freshened by `fresh` and recorded as hidden. Throws
    /// MalformedConstraintError on a predicate arity clash.
    void tell(const Constraint& c, FreshVarGen& fresh);

    /// Total entailment. Atoms match modulo equalities; equalities consult
    /// the closure; disequalities hold when recorded or witnessed by two
    /// distinct constants; existentials search substitutions over the
    /// candidate universe (terms in facts plus constants in the body).
    bool entails(const Constraint& c) const;

    /// All substitutions s over `binders` drawn from the candidate universe
    /// such that guard.s is entailed, no binder occurs in a replacing term,
    /// and s is not in `used`. Deterministic enumeration order: the
    /// lexicographic product of the universe, one coordinate per binder.
    /// The search prunes coordinates that cannot satisfy the guard's atoms,
    /// which never changes the result set, only the cost.
    std::vector<Substitution> match(const std::vector<std::string>& binders,
                                    const Constraint& guard,
                                    const std::vector<Substitution>& used) const;

    /// Store content with `vars` (intersected with what actually occurs)
    /// hidden behind an existential; False when inconsistent.
    Constraint project(const std::vector<std::string>& vars) const;
    /// Told content as one constraint, no hiding applied.
    Constraint content() const;
    /// project(hidden()).
    Constraint observable() const;

    bool inconsistent() const { return bottom_ || cc_.clashed() || diseq_violated(); }

    const std::set<Atom>& facts() const { return facts_; }
    const CongruenceClosure& closure() const { return cc_; }
    const std::vector<std::pair<Term, Term>>& diseqs() const { return diseqs_; }
    const std::vector<std::string>& hidden() const { return hidden_; }
    void add_hidden(const std::string& v) { hidden_.push_back(v); }

    /// Candidate witnesses: every term (with subterms) occurring in facts,
    /// then every constant occurring in `guard`; first-occurrence order.
    std::vector<Term> candidate_terms(const Constraint& guard) const;

    /// Canonical serialisation helpers: sorted atom texts and one
    /// "lhs = rhs" line per told equality.
    std::vector<std::string> atom_texts() const;
    std::vector<std::string> equality_texts() const;

    /// Grows whenever a tell added information; used to cache enabledness.
    size_t version() const { return version_; }

    const std::map<std::string, size_t>& arities() const { return arities_; }
    void seed_arities(const std::map<std::string, size_t>& a) { arities_ = a; }

private:
    void tell_atom(const Atom& a);
    void check_arity(const std::string& pred, size_t arity) const;
    void note_arity(const std::string& pred, size_t arity);
    bool diseq_violated() const;
    bool entails_atom(const Atom& a) const;
    bool entails_neq(const Term& a, const Term& b) const;
    std::vector<Substitution> match_limited(const std::vector<std::string>& binders,
                                            const Constraint& guard,
                                            const std::vector<Substitution>& used,
                                            size_t limit) const;

    std::set<Atom> facts_;
    CongruenceClosure cc_;
    std::vector<std::pair<Term, Term>> diseqs_;
    std::vector<std::string> hidden_;
    std::map<std::string, size_t> arities_;
    bool bottom_ = false;
    size_t version_ = 0;
};

}  // namespace sesscc
