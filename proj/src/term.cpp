#include "sesscc/term.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace sesscc {

Term Term::var(std::string name) {
    Term t;
    t.kind_ = Kind::Var;
    t.name_ = std::move(name);
    return t;
}

Term Term::integer(long long v) {
    Term t;
    t.kind_ = Kind::Int;
    t.name_.clear();
    t.ival_ = v;
    return t;
}

Term Term::boolean(bool v) {
    Term t;
    t.kind_ = Kind::Bool;
    t.name_.clear();
    t.bval_ = v;
    return t;
}

Term Term::symbol(std::string name) {
    Term t;
    t.kind_ = Kind::Sym;
    t.name_ = std::move(name);
    return t;
}

Term Term::tuple(std::vector<Term> items) {
    Term t;
    t.kind_ = Kind::Tuple;
    t.name_.clear();
    t.items_ = std::move(items);
    return t;
}

Term Term::op(const std::string& fn, std::vector<Term> args) {
    std::vector<Term> items;
    items.reserve(args.size() + 1);
    items.push_back(Term::symbol("#" + fn));
    for (auto& a : args) items.push_back(std::move(a));
    return Term::tuple(std::move(items));
}

Term Term::record(const std::vector<std::pair<std::string, Term>>& fields) {
    std::vector<std::pair<std::string, Term>> sorted = fields;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Term> items;
    items.push_back(Term::symbol("#record"));
    for (auto& [name, value] : sorted)
        items.push_back(Term::tuple({Term::symbol(name), value}));
    return Term::tuple(std::move(items));
}

bool Term::is_op() const {
    return kind_ == Kind::Tuple && !items_.empty() &&
           items_[0].kind() == Kind::Sym && !items_[0].name().empty() &&
           items_[0].name()[0] == '#';
}

std::string Term::op_name() const {
    if (!is_op()) return "";
    return items_[0].name().substr(1);
}

bool Term::ground() const {
    if (kind_ == Kind::Var) return false;
    for (const auto& it : items_)
        if (!it.ground()) return false;
    return true;
}

bool Term::contains_var(const std::string& v) const {
    if (kind_ == Kind::Var) return name_ == v;
    for (const auto& it : items_)
        if (it.contains_var(v)) return true;
    return false;
}

void Term::collect_vars(std::set<std::string>& out) const {
    if (kind_ == Kind::Var) {
        out.insert(name_);
        return;
    }
    for (const auto& it : items_) it.collect_vars(out);
}

std::set<std::string> Term::vars() const {
    std::set<std::string> out;
    collect_vars(out);
    return out;
}

Term Term::substitute(const std::map<std::string, Term>& sub) const {
    if (kind_ == Kind::Var) {
        auto it = sub.find(name_);
        return it == sub.end() ? *this : it->second;
    }
    if (kind_ != Kind::Tuple) return *this;
    std::vector<Term> items;
    items.reserve(items_.size());
    for (const auto& it : items_) items.push_back(it.substitute(sub));
    return Term::tuple(std::move(items));
}

namespace {

bool both_int(const Term& a, const Term& b) {
    return a.kind() == Term::Kind::Int && b.kind() == Term::Kind::Int;
}

bool both_bool(const Term& a, const Term& b) {
    return a.kind() == Term::Kind::Bool && b.kind() == Term::Kind::Bool;
}

// Looks up a field inside a folded #record tuple; nullptr when absent.
const Term* record_field(const Term& rec, const std::string& field) {
    if (!rec.is_op() || rec.op_name() != "record") return nullptr;
    for (size_t i = 1; i < rec.items().size(); ++i) {
        const Term& pair = rec.items()[i];
        if (pair.is_tuple() && pair.items().size() == 2 &&
            pair.items()[0].kind() == Term::Kind::Sym &&
            pair.items()[0].name() == field)
            return &pair.items()[1];
    }
    return nullptr;
}

}  // namespace

Term Term::fold() const {
    if (kind_ != Kind::Tuple) return *this;
    std::vector<Term> items;
    items.reserve(items_.size());
    for (const auto& it : items_) items.push_back(it.fold());
    Term t = Term::tuple(items);
    if (!t.is_op()) return t;

    const std::string fn = t.op_name();
    const auto& a = t.items();
    auto arg = [&](size_t i) -> const Term& { return a[i + 1]; };
    const size_t n = a.size() - 1;

    if (fn == "record") return t;  // constructor, nothing to evaluate
    if (fn == "field" && n == 2 && arg(1).kind() == Kind::Sym) {
        if (const Term* v = record_field(arg(0), arg(1).name())) return *v;
        return t;
    }
    if ((fn == "add" || fn == "sub" || fn == "mul") && n == 2 && both_int(arg(0), arg(1))) {
        long long x = arg(0).int_value(), y = arg(1).int_value();
        if (fn == "add") return Term::integer(x + y);
        if (fn == "sub") return Term::integer(x - y);
        return Term::integer(x * y);
    }
    if ((fn == "le" || fn == "lt" || fn == "ge" || fn == "gt") && n == 2 &&
        both_int(arg(0), arg(1))) {
        long long x = arg(0).int_value(), y = arg(1).int_value();
        if (fn == "le") return Term::boolean(x <= y);
        if (fn == "lt") return Term::boolean(x < y);
        if (fn == "ge") return Term::boolean(x >= y);
        return Term::boolean(x > y);
    }
    if ((fn == "eq" || fn == "ne") && n == 2 && arg(0).ground() && arg(1).ground()) {
        bool same = arg(0) == arg(1);
        return Term::boolean(fn == "eq" ? same : !same);
    }
    if ((fn == "and" || fn == "or") && n == 2 && both_bool(arg(0), arg(1))) {
        bool x = arg(0).bool_value(), y = arg(1).bool_value();
        return Term::boolean(fn == "and" ? (x && y) : (x || y));
    }
    if (fn == "not" && n == 1 && arg(0).kind() == Kind::Bool)
        return Term::boolean(!arg(0).bool_value());
    return t;
}

namespace {

const char* infix_for(const std::string& fn) {
    if (fn == "add") return " + ";
    if (fn == "sub") return " - ";
    if (fn == "mul") return " * ";
    if (fn == "le") return " <= ";
    if (fn == "lt") return " < ";
    if (fn == "ge") return " >= ";
    if (fn == "gt") return " > ";
    if (fn == "eq") return " == ";
    if (fn == "ne") return " <> ";
    if (fn == "and") return " and ";
    if (fn == "or") return " or ";
    return nullptr;
}

}  // namespace

std::string Term::text() const {
    switch (kind_) {
        case Kind::Int:
            return std::to_string(ival_);
        case Kind::Bool:
            return bval_ ? "true" : "false";
        case Kind::Sym:
        case Kind::Var:
            return name_;
        case Kind::Tuple:
            break;
    }
    std::ostringstream os;
    if (is_op()) {
        const std::string fn = op_name();
        if (fn == "record") {
            os << "{";
            for (size_t i = 1; i < items_.size(); ++i) {
                if (i > 1) os << ", ";
                os << items_[i].items()[0].name() << " = " << items_[i].items()[1].text();
            }
            os << "}";
            return os.str();
        }
        if (fn == "field") {
            os << items_[1].text() << "." << items_[2].name();
            return os.str();
        }
        if (fn == "not") {
            os << "(not " << items_[1].text() << ")";
            return os.str();
        }
        if (const char* infix = infix_for(fn); infix && items_.size() == 3) {
            os << "(" << items_[1].text() << infix << items_[2].text() << ")";
            return os.str();
        }
    }
    os << "(";
    for (size_t i = 0; i < items_.size(); ++i) {
        if (i > 0) os << ", ";
        os << items_[i].text();
    }
    if (items_.size() == 1) os << ",";
    os << ")";
    return os.str();
}

bool Term::operator==(const Term& o) const {
    if (kind_ != o.kind_) return false;
    switch (kind_) {
        case Kind::Int:
            return ival_ == o.ival_;
        case Kind::Bool:
            return bval_ == o.bval_;
        case Kind::Sym:
        case Kind::Var:
            return name_ == o.name_;
        case Kind::Tuple:
            return items_ == o.items_;
    }
    return false;
}

int Term::compare(const Term& o) const {
    if (kind_ != o.kind_) return kind_ < o.kind_ ? -1 : 1;
    switch (kind_) {
        case Kind::Int:
            return ival_ == o.ival_ ? 0 : (ival_ < o.ival_ ? -1 : 1);
        case Kind::Bool:
            return bval_ == o.bval_ ? 0 : (bval_ < o.bval_ ? -1 : 1);
        case Kind::Sym:
        case Kind::Var:
            return name_.compare(o.name_);
        case Kind::Tuple: {
            size_t n = std::min(items_.size(), o.items_.size());
            for (size_t i = 0; i < n; ++i) {
                int c = items_[i].compare(o.items_[i]);
                if (c != 0) return c;
            }
            if (items_.size() != o.items_.size())
                return items_.size() < o.items_.size() ? -1 : 1;
            return 0;
        }
    }
    return 0;
}

std::string Atom::text() const {
    if (args.empty()) return pred;
    std::ostringstream os;
    os << pred << "(";
    for (size_t i = 0; i < args.size(); ++i) {
        if (i > 0) os << ", ";
        os << args[i].text();
    }
    os << ")";
    return os.str();
}

Atom Atom::substitute(const std::map<std::string, Term>& sub) const {
    Atom out{pred, {}};
    out.args.reserve(args.size());
    for (const auto& a : args) out.args.push_back(a.substitute(sub));
    return out;
}

Atom Atom::fold() const {
    Atom out{pred, {}};
    out.args.reserve(args.size());
    for (const auto& a : args) out.args.push_back(a.fold());
    return out;
}

void Atom::collect_vars(std::set<std::string>& out) const {
    for (const auto& a : args) a.collect_vars(out);
}

bool Atom::operator<(const Atom& o) const {
    if (pred != o.pred) return pred < o.pred;
    size_t n = std::min(args.size(), o.args.size());
    for (size_t i = 0; i < n; ++i) {
        int c = args[i].compare(o.args[i]);
        if (c != 0) return c < 0;
    }
    return args.size() < o.args.size();
}

std::string substitution_text(const Substitution& s) {
    std::ostringstream os;
    os << "[";
    bool first = true;
    for (const auto& [k, v] : s) {
        if (!first) os << ", ";
        first = false;
        os << k << " := " << v.text();
    }
    os << "]";
    return os.str();
}

std::string FreshVarGen::fresh(const std::string& hint) {
    std::string base = hint.substr(0, hint.find('#'));
    if (base.empty()) base = "v";
    return base + "#" + std::to_string(++counter_);
}

}  // namespace sesscc
