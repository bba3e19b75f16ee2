#include "sesscc/constraint.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace sesscc {

Constraint Constraint::top() {
    Constraint c;
    c.kind_ = Kind::True;
    return c;
}

Constraint Constraint::bottom() {
    Constraint c;
    c.kind_ = Kind::False;
    return c;
}

Constraint Constraint::atom(Atom a) {
    Constraint c;
    c.kind_ = Kind::AtomC;
    c.atom_ = std::move(a);
    return c;
}

Constraint Constraint::atom(const std::string& pred, std::vector<Term> args) {
    return atom(Atom{pred, std::move(args)});
}

Constraint Constraint::eq(Term a, Term b) {
    Constraint c;
    c.kind_ = Kind::Eq;
    c.terms_ = {std::move(a), std::move(b)};
    return c;
}

Constraint Constraint::neq(Term a, Term b) {
    Constraint c;
    c.kind_ = Kind::Neq;
    c.terms_ = {std::move(a), std::move(b)};
    return c;
}

Constraint Constraint::conj(std::vector<Constraint> parts) {
    std::vector<Constraint> flat;
    for (auto& p : parts) {
        if (p.kind_ == Kind::True) continue;
        if (p.kind_ == Kind::False) return bottom();
        if (p.kind_ == Kind::And) {
            for (auto& k : p.kids_) flat.push_back(std::move(k));
        } else {
            flat.push_back(std::move(p));
        }
    }
    if (flat.empty()) return top();
    if (flat.size() == 1) return flat[0];
    Constraint c;
    c.kind_ = Kind::And;
    c.kids_ = std::move(flat);
    return c;
}

Constraint Constraint::exists(std::vector<std::string> binders, Constraint body) {
    if (binders.empty()) return body;
    for (size_t i = 0; i < binders.size(); ++i)
        for (size_t j = i + 1; j < binders.size(); ++j)
            if (binders[i] == binders[j])
                throw std::invalid_argument("exists: duplicate binder " + binders[i]);
    Constraint c;
    c.kind_ = Kind::Exists;
    c.binders_ = std::move(binders);
    c.kids_.push_back(std::move(body));
    return c;
}

Constraint Constraint::truth(Term t) {
    return eq(std::move(t), Term::boolean(true));
}

namespace {

// Deterministic capture-avoidance without a global counter: pick the first
// suffixed name not colliding with anything in sight. '#' keeps the result
// outside the source-identifier namespace.
std::string rename_away(const std::string& base, const std::set<std::string>& avoid) {
    for (int i = 1;; ++i) {
        std::string cand = base.substr(0, base.find('#')) + "#r" + std::to_string(i);
        if (!avoid.count(cand)) return cand;
    }
}

}  // namespace

Constraint Constraint::substitute(const Substitution& sub) const {
    switch (kind_) {
        case Kind::True:
        case Kind::False:
            return *this;
        case Kind::AtomC:
            return atom(atom_.substitute(sub));
        case Kind::Eq:
            return eq(terms_[0].substitute(sub), terms_[1].substitute(sub));
        case Kind::Neq:
            return neq(terms_[0].substitute(sub), terms_[1].substitute(sub));
        case Kind::And: {
            std::vector<Constraint> parts;
            parts.reserve(kids_.size());
            for (const auto& k : kids_) parts.push_back(k.substitute(sub));
            return conj(std::move(parts));
        }
        case Kind::Exists:
            break;
    }

    // Exists: binders shadow; rename binders that would capture range vars.
    Substitution inner = sub;
    std::set<std::string> range_vars;
    for (const auto& b : binders_) inner.erase(b);
    for (const auto& [k, v] : inner) {
        (void)k;
        v.collect_vars(range_vars);
    }
    std::vector<std::string> new_binders = binders_;
    Constraint body = kids_[0];
    for (auto& b : new_binders) {
        if (!range_vars.count(b)) continue;
        std::set<std::string> avoid = range_vars;
        body.collect_free_vars(avoid);
        for (const auto& nb : new_binders) avoid.insert(nb);
        for (const auto& [k, v] : inner) {
            (void)v;
            avoid.insert(k);
        }
        std::string fresh = rename_away(b, avoid);
        Substitution ren{{b, Term::var(fresh)}};
        body = body.substitute(ren);
        b = fresh;
    }
    return exists(std::move(new_binders), body.substitute(inner));
}

Constraint Constraint::fold() const {
    switch (kind_) {
        case Kind::True:
        case Kind::False:
            return *this;
        case Kind::AtomC:
            return atom(atom_.fold());
        case Kind::Eq:
            return eq(terms_[0].fold(), terms_[1].fold());
        case Kind::Neq:
            return neq(terms_[0].fold(), terms_[1].fold());
        case Kind::And: {
            std::vector<Constraint> parts;
            parts.reserve(kids_.size());
            for (const auto& k : kids_) parts.push_back(k.fold());
            return conj(std::move(parts));
        }
        case Kind::Exists:
            return exists(binders_, kids_[0].fold());
    }
    return *this;
}

void Constraint::collect_free_vars(std::set<std::string>& out) const {
    switch (kind_) {
        case Kind::True:
        case Kind::False:
            return;
        case Kind::AtomC:
            atom_.collect_vars(out);
            return;
        case Kind::Eq:
        case Kind::Neq:
            terms_[0].collect_vars(out);
            terms_[1].collect_vars(out);
            return;
        case Kind::And:
            for (const auto& k : kids_) k.collect_free_vars(out);
            return;
        case Kind::Exists: {
            std::set<std::string> inner;
            kids_[0].collect_free_vars(inner);
            for (const auto& b : binders_) inner.erase(b);
            out.insert(inner.begin(), inner.end());
            return;
        }
    }
}

std::set<std::string> Constraint::free_vars() const {
    std::set<std::string> out;
    collect_free_vars(out);
    return out;
}

std::vector<Constraint> Constraint::flat() const {
    if (kind_ == Kind::And) return kids_;
    if (kind_ == Kind::True) return {};
    return {*this};
}

std::string Constraint::text() const {
    switch (kind_) {
        case Kind::True:
            return "true";
        case Kind::False:
            return "false";
        case Kind::AtomC:
            return atom_.text();
        case Kind::Eq: {
            // Boolean-valued interpreted terms print as bare comparisons.
            static const char* sugars[] = {"le", "lt", "ge", "gt", "eq", "ne", "and", "or", "not"};
            if (terms_[1] == Term::boolean(true) && terms_[0].is_op()) {
                const std::string fn = terms_[0].op_name();
                for (const char* s : sugars)
                    if (fn == s) return terms_[0].text();
            }
            return terms_[0].text() + " = " + terms_[1].text();
        }
        case Kind::Neq:
            return terms_[0].text() + " != " + terms_[1].text();
        case Kind::And: {
            std::ostringstream os;
            for (size_t i = 0; i < kids_.size(); ++i) {
                if (i > 0) os << " /\\ ";
                bool paren = kids_[i].kind_ == Kind::Exists;
                os << (paren ? "(" : "") << kids_[i].text() << (paren ? ")" : "");
            }
            return os.str();
        }
        case Kind::Exists: {
            std::ostringstream os;
            os << "exists ";
            for (size_t i = 0; i < binders_.size(); ++i) {
                if (i > 0) os << ", ";
                os << binders_[i];
            }
            os << ". " << kids_[0].text();
            return os.str();
        }
    }
    return "true";
}

bool Constraint::operator==(const Constraint& o) const {
    if (kind_ != o.kind_) return false;
    switch (kind_) {
        case Kind::True:
        case Kind::False:
            return true;
        case Kind::AtomC:
            return atom_ == o.atom_;
        case Kind::Eq:
        case Kind::Neq:
            return terms_ == o.terms_;
        case Kind::And:
            return kids_ == o.kids_;
        case Kind::Exists:
            return binders_ == o.binders_ && kids_ == o.kids_;
    }
    return false;
}

int Constraint::compare(const Constraint& o) const {
    if (kind_ != o.kind_) return kind_ < o.kind_ ? -1 : 1;
    auto seq_terms = [](const std::vector<Term>& a, const std::vector<Term>& b) {
        size_t n = std::min(a.size(), b.size());
        for (size_t i = 0; i < n; ++i) {
            int c = a[i].compare(b[i]);
            if (c != 0) return c;
        }
        return a.size() == b.size() ? 0 : (a.size() < b.size() ? -1 : 1);
    };
    switch (kind_) {
        case Kind::True:
        case Kind::False:
            return 0;
        case Kind::AtomC: {
            int c = atom_.pred.compare(o.atom_.pred);
            if (c != 0) return c;
            return seq_terms(atom_.args, o.atom_.args);
        }
        case Kind::Eq:
        case Kind::Neq:
            return seq_terms(terms_, o.terms_);
        case Kind::Exists:
            if (binders_ != o.binders_) return binders_ < o.binders_ ? -1 : 1;
            [[fallthrough]];
        case Kind::And: {
            size_t n = std::min(kids_.size(), o.kids_.size());
            for (size_t i = 0; i < n; ++i) {
                int c = kids_[i].compare(o.kids_[i]);
                if (c != 0) return c;
            }
            return kids_.size() == o.kids_.size() ? 0
                                                  : (kids_.size() < o.kids_.size() ? -1 : 1);
        }
    }
    return 0;
}

bool Constraint::operator<(const Constraint& o) const { return compare(o) < 0; }

}  // namespace sesscc
