#include "sesscc/store.hpp"

#include <algorithm>
#include <stdexcept>

namespace sesscc {

namespace {

// Representative preference: constants beat tuples beat variables, ties
// broken by term order. Keeping the order total and strict makes the
// union-find acyclic by construction.
int rank(const Term& t) {
    if (t.is_const()) return 0;
    if (t.is_tuple()) return 1;
    return 2;
}

bool prefer(const Term& a, const Term& b) {  // a wins over b
    int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb;
    return a < b;
}

// Interpreted applications never clash on shape: they may still fold to a
// value once their arguments gain representatives, so judging them as
// constructors would make tell order observable.
bool ground_clash(const Term& a, const Term& b) {
    if (a == b) return false;
    if (a.is_op() || b.is_op()) return false;
    if (a.is_const() && b.is_const()) return true;  // two distinct constants
    if (a.is_const() != b.is_const() && !a.is_var() && !b.is_var()) return true;
    if (a.is_tuple() && b.is_tuple() && a.items().size() != b.items().size()) return true;
    return false;
}

bool occurs_in(const Term& needle, const Term& hay) {
    if (needle == hay) return true;
    for (const auto& it : hay.items())
        if (occurs_in(needle, it)) return true;
    return false;
}

// Occurrence along data constructors only; applications are opaque values,
// so a term "inside" one is not structurally contained.
bool occurs_ctor(const Term& needle, const Term& hay) {
    if (needle == hay) return true;
    if (hay.is_op()) return false;
    for (const auto& it : hay.items())
        if (occurs_ctor(needle, it)) return true;
    return false;
}

}  // namespace

Term CongruenceClosure::follow(const Term& t) const {
    Term cur = t;
    for (;;) {
        auto it = rep_.find(cur);
        if (it == rep_.end()) return cur;
        cur = it->second;
    }
}

Term CongruenceClosure::canon(const Term& t) const {
    // Every term entering the closure is folded on the way in, so with no
    // equations on record there is nothing canonicalisation could change.
    if (rep_.empty()) return t;
    Term cur = t;
    for (int spin = 0; spin < 10000; ++spin) {
        Term next = cur;
        if (next.is_tuple()) {
            bool moved = false;
            std::vector<Term> items;
            items.reserve(next.items().size());
            for (const auto& it : next.items()) {
                Term c = canon(it);
                if (!moved && c != it) moved = true;
                items.push_back(std::move(c));
            }
            // Children already canonical: the rebuild and refold are
            // identities, and skipping them keeps deep terms linear.
            if (moved) next = Term::tuple(std::move(items)).fold();
        }
        next = follow(next);
        if (next == cur) return cur;
        cur = next;
    }
    throw std::logic_error("congruence closure: canonicalisation did not settle");
}

void CongruenceClosure::merge(const Term& a, const Term& b) {
    told_.emplace_back(a, b);
    resaturate();
}

// Reapplies every told equation under the current representatives until
// nothing moves. A single link for the pair being merged is not enough:
// canonical forms of composite terms change when their children gain new
// representatives, which can strand earlier equations keyed on the stale
// form and silently drop entailed equalities.
void CongruenceClosure::resaturate() {
    bool changed = true;
    while (changed && !clash_) {
        changed = false;
        for (const auto& [a, b] : told_) {
            Term ra = canon(a), rb = canon(b);
            if (ra == rb) continue;
            if (ground_clash(ra, rb)) {
                clash_ = true;  // incompatible ground shapes equated
                return;
            }
            // A constructor term equal to one of its own proper subterms has
            // no finite-tree solution: flag the store inconsistent instead of
            // installing a cyclic link.
            if (occurs_ctor(ra, rb) || occurs_ctor(rb, ra)) {
                clash_ = true;
                return;
            }
            // When the containment runs through an application (x = x + 0),
            // the equation is satisfiable but rank preference could pick the
            // containing term as winner and make canonicalisation diverge;
            // the containing term must lose.
            if (occurs_in(ra, rb)) {
                rep_[rb] = ra;
            } else if (occurs_in(rb, ra)) {
                rep_[ra] = rb;
            } else {
                if (prefer(ra, rb)) std::swap(ra, rb);
                rep_[ra] = rb;  // rb wins
            }
            changed = true;
        }
    }
}

void Store::note_arity(const std::string& pred, size_t arity) {
    auto [it, inserted] = arities_.emplace(pred, arity);
    if (!inserted && it->second != arity)
        throw MalformedConstraintError("predicate '" + pred + "' used with arity " +
                                       std::to_string(arity) + " but fixed at arity " +
                                       std::to_string(it->second));
}

void Store::tell_atom(const Atom& a) {
    note_arity(a.pred, a.args.size());
    if (facts_.insert(a).second) ++version_;
}

void Store::tell(const Constraint& raw, FreshVarGen& fresh) {
    const Constraint c = raw.fold();
    switch (c.kind()) {
        case Constraint::Kind::True:
            return;
        case Constraint::Kind::False:
            if (!bottom_) ++version_;
            bottom_ = true;
            return;
        case Constraint::Kind::AtomC:
            tell_atom(c.get_atom());
            return;
        case Constraint::Kind::Eq:
            if (!cc_.equal(c.lhs(), c.rhs())) ++version_;
            cc_.merge(c.lhs(), c.rhs());
            return;
        case Constraint::Kind::Neq:
            diseqs_.emplace_back(c.lhs(), c.rhs());
            ++version_;
            return;
        case Constraint::Kind::And:
            for (const auto& k : c.conjuncts()) tell(k, fresh);
            return;
        case Constraint::Kind::Exists: {
            Substitution ren;
            for (const auto& b : c.binders()) {
                std::string nb = fresh.fresh(b);
                hidden_.push_back(nb);
                ren[b] = Term::var(nb);
            }
            tell(c.body().substitute(ren), fresh);
            return;
        }
    }
}

bool Store::diseq_violated() const {
    for (const auto& [a, b] : diseqs_)
        if (cc_.equal(a, b)) return true;
    return false;
}

bool Store::entails_atom(const Atom& a) const {
    auto it = arities_.find(a.pred);
    if (it != arities_.end() && it->second != a.args.size()) return false;
    std::vector<Term> want;
    want.reserve(a.args.size());
    for (const auto& t : a.args) want.push_back(cc_.canon(t));
    for (const auto& f : facts_) {
        if (f.pred != a.pred || f.args.size() != a.args.size()) continue;
        bool ok = true;
        for (size_t i = 0; i < want.size() && ok; ++i)
            ok = cc_.canon(f.args[i]) == want[i];
        if (ok) return true;
    }
    return false;
}

bool Store::entails_neq(const Term& a, const Term& b) const {
    Term ca = cc_.canon(a), cb = cc_.canon(b);
    if (ca.is_const() && cb.is_const() && ca != cb) return true;
    for (const auto& [d1, d2] : diseqs_) {
        Term c1 = cc_.canon(d1), c2 = cc_.canon(d2);
        if ((c1 == ca && c2 == cb) || (c1 == cb && c2 == ca)) return true;
    }
    return false;
}

std::vector<Term> Store::candidate_terms(const Constraint& guard) const {
    std::vector<Term> out;
    std::set<Term> seen;
    auto add = [&](const Term& t) {
        if (seen.insert(t).second) out.push_back(t);
    };
    // All subterms of stored facts, outermost first.
    std::vector<Term> stack;
    for (const auto& f : facts_)
        for (const auto& a : f.args) stack.push_back(a);
    size_t i = 0;
    std::vector<Term> order = stack;
    while (i < order.size()) {
        Term t = order[i++];
        add(t);
        for (const auto& it : t.items()) order.push_back(it);
    }
    // Constants (including ground tuples) occurring in the guard.
    std::vector<Constraint> todo{guard};
    while (!todo.empty()) {
        Constraint c = todo.back();
        todo.pop_back();
        auto scan_term = [&](const Term& t) {
            std::vector<Term> ts{t};
            while (!ts.empty()) {
                Term u = ts.back();
                ts.pop_back();
                if (u.ground()) add(u);
                for (const auto& it : u.items()) ts.push_back(it);
            }
        };
        switch (c.kind()) {
            case Constraint::Kind::AtomC:
                for (const auto& t : c.get_atom().args) scan_term(t);
                break;
            case Constraint::Kind::Eq:
            case Constraint::Kind::Neq:
                scan_term(c.lhs());
                scan_term(c.rhs());
                break;
            case Constraint::Kind::And:
                for (const auto& k : c.conjuncts()) todo.push_back(k);
                break;
            case Constraint::Kind::Exists:
                todo.push_back(c.body());
                break;
            default:
                break;
        }
    }
    return out;
}

bool Store::entails(const Constraint& raw) const {
    if (inconsistent()) return true;
    const Constraint c = raw.fold();
    switch (c.kind()) {
        case Constraint::Kind::True:
            return true;
        case Constraint::Kind::False:
            return false;
        case Constraint::Kind::AtomC:
            return entails_atom(c.get_atom());
        case Constraint::Kind::Eq:
            return cc_.equal(c.lhs(), c.rhs());
        case Constraint::Kind::Neq:
            return entails_neq(c.lhs(), c.rhs());
        case Constraint::Kind::And:
            for (const auto& k : c.conjuncts())
                if (!entails(k)) return false;
            return true;
        case Constraint::Kind::Exists: {
            // Drop binders the body never mentions, then search witnesses;
            // the first one settles entailment.
            std::set<std::string> fv = c.body().free_vars();
            std::vector<std::string> needed;
            for (const auto& b : c.binders())
                if (fv.count(b)) needed.push_back(b);
            if (needed.empty()) return entails(c.body());
            auto sols = match_limited(needed, c.body(), {}, 1);
            return !sols.empty();
        }
    }
    return false;
}

namespace {

/// Union of canonical shapes a pattern position may take, keyed by binder.
/// A binder with no entry is unrestricted.
using CanonSets = std::map<std::string, std::set<Term>>;

/// Accumulates, for binders occurring structurally in `pattern`, the canons
/// the matching fact positions offer. Only bare binders and plain tuple
/// positions give information; interpreted applications change shape when
/// instantiated and are skipped.
void collect_position_canons(const Term& pattern, const std::vector<Term>& spot,
                             const std::set<std::string>& binders, CanonSets& sets,
                             const CongruenceClosure& cc) {
    if (pattern.is_var() && binders.count(pattern.name())) {
        auto& s = sets[pattern.name()];
        for (const auto& t : spot) s.insert(cc.canon(t));
        return;
    }
    if (pattern.is_tuple() && !pattern.is_op()) {
        size_t n = pattern.items().size();
        for (size_t i = 0; i < n; ++i) {
            std::vector<Term> sub_spot;
            for (const auto& t : spot) {
                Term ct = cc.canon(t);
                if (ct.is_tuple() && ct.items().size() == n) sub_spot.push_back(ct.items()[i]);
            }
            collect_position_canons(pattern.items()[i], sub_spot, binders, sets, cc);
        }
    }
}

void intersect_into(CanonSets& total, const CanonSets& conjunct) {
    for (const auto& [b, s] : conjunct) {
        auto it = total.find(b);
        if (it == total.end()) {
            total[b] = s;
        } else {
            std::set<Term> meet;
            std::set_intersection(it->second.begin(), it->second.end(), s.begin(), s.end(),
                                  std::inserter(meet, meet.begin()));
            it->second = std::move(meet);
        }
    }
}

}  // namespace

std::vector<Substitution> Store::match(const std::vector<std::string>& binders,
                                       const Constraint& guard,
                                       const std::vector<Substitution>& used) const {
    return match_limited(binders, guard, used, 0);
}

std::vector<Substitution> Store::match_limited(const std::vector<std::string>& binders,
                                               const Constraint& guard,
                                               const std::vector<Substitution>& used,
                                               size_t limit) const {
    std::vector<Substitution> out;
    if (binders.empty()) {
        Substitution empty;
        bool excluded = std::find(used.begin(), used.end(), empty) != used.end();
        if (!excluded && entails(guard)) out.push_back(empty);
        return out;
    }
    const std::vector<Term> universe = candidate_terms(guard);
    if (universe.empty()) return out;

    const std::set<std::string> binder_set(binders.begin(), binders.end());

    // Candidate canons per binder, read off the facts. A coordinate whose
    // canon cannot appear in any matching fact position cannot satisfy that
    // conjunct, so skipping it loses no solution. On an inconsistent store
    // entailment is unconditional and no pruning applies.
    CanonSets allowed;
    if (!inconsistent()) {
        for (const auto& part : guard.flat()) {
            if (part.kind() == Constraint::Kind::AtomC) {
                const Atom& a = part.get_atom();
                CanonSets per;
                for (size_t j = 0; j < a.args.size(); ++j) {
                    std::vector<Term> spot;
                    for (const auto& f : facts_)
                        if (f.pred == a.pred && f.args.size() == a.args.size())
                            spot.push_back(f.args[j]);
                    collect_position_canons(a.args[j], spot, binder_set, per, cc_);
                }
                intersect_into(allowed, per);
            } else if (part.kind() == Constraint::Kind::Eq) {
                auto bare = [&](const Term& t) { return t.is_var() && binder_set.count(t.name()); };
                auto closed = [&](const Term& t) {
                    for (const auto& b : binders)
                        if (t.contains_var(b)) return false;
                    return true;
                };
                if (bare(part.lhs()) && closed(part.rhs()))
                    intersect_into(allowed, {{part.lhs().name(), {cc_.canon(part.rhs())}}});
                else if (bare(part.rhs()) && closed(part.lhs()))
                    intersect_into(allowed, {{part.rhs().name(), {cc_.canon(part.lhs())}}});
            }
        }
    }

    // Per-binder coordinate lists, original universe order. Coordinates
    // containing a binder are inadmissible as replacing terms.
    std::vector<std::vector<const Term*>> cands(binders.size());
    for (size_t i = 0; i < binders.size(); ++i) {
        auto it = allowed.find(binders[i]);
        for (const auto& u : universe) {
            bool has_binder = false;
            for (const auto& b : binders)
                if (u.contains_var(b)) {
                    has_binder = true;
                    break;
                }
            if (has_binder) continue;
            if (it != allowed.end() && !it->second.count(cc_.canon(u))) continue;
            cands[i].push_back(&u);
        }
        if (cands[i].empty()) return out;
    }

    // Check each conjunct as soon as the deepest binder it mentions is
    // assigned; conjuncts with no binder gate the whole search.
    std::vector<Constraint> parts = guard.flat();
    std::vector<std::vector<const Constraint*>> due(binders.size());
    for (const auto& part : parts) {
        auto fv = part.free_vars();
        int last = -1;
        for (size_t i = 0; i < binders.size(); ++i)
            if (fv.count(binders[i])) last = static_cast<int>(i);
        if (last < 0) {
            if (!entails(part)) return out;
        } else {
            due[last].push_back(&part);
        }
    }

    Substitution sub;
    auto descend = [&](auto&& self, size_t depth) -> bool {
        if (depth == binders.size()) {
            if (std::find(used.begin(), used.end(), sub) != used.end()) return false;
            out.push_back(sub);
            return limit != 0 && out.size() >= limit;
        }
        for (const Term* cand : cands[depth]) {
            sub[binders[depth]] = *cand;
            bool ok = true;
            for (const Constraint* part : due[depth])
                if (!entails(part->substitute(sub))) {
                    ok = false;
                    break;
                }
            if (ok && self(self, depth + 1)) return true;
        }
        sub.erase(binders[depth]);
        return false;
    };
    descend(descend, 0);
    return out;
}

Constraint Store::content() const {
    if (inconsistent()) return Constraint::bottom();
    std::vector<Constraint> parts;
    for (const auto& f : facts_) parts.push_back(Constraint::atom(f));
    for (const auto& [a, b] : cc_.told()) parts.push_back(Constraint::eq(a, b));
    for (const auto& [a, b] : diseqs_) parts.push_back(Constraint::neq(a, b));
    return Constraint::conj(std::move(parts));
}

Constraint Store::project(const std::vector<std::string>& vars) const {
    Constraint body = content();
    if (body.is_false()) return body;
    std::set<std::string> fv = body.free_vars();
    std::vector<std::string> keep;
    std::set<std::string> taken;
    for (const auto& v : vars)
        if (fv.count(v) && taken.insert(v).second) keep.push_back(v);
    if (keep.empty()) return body;
    return Constraint::exists(std::move(keep), std::move(body));
}

Constraint Store::observable() const { return project(hidden_); }

std::vector<std::string> Store::atom_texts() const {
    std::vector<std::string> out;
    out.reserve(facts_.size());
    for (const auto& f : facts_) out.push_back(f.text());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Store::equality_texts() const {
    std::vector<std::string> out;
    for (const auto& [a, b] : cc_.told()) out.push_back(a.text() + " = " + b.text());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace sesscc
