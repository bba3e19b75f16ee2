#include "sesscc/utcc/engine.hpp"

#include <algorithm>

namespace sesscc::utcc {

Engine::Config Engine::start(const Proc& p, const Constraint& input) {
    Config cfg;
    cfg.store = std::make_shared<Store>();
    cfg.store->seed_arities(arities_);
    cfg.store->tell(input, fresh_);

    Proc work = expand_bounded_bang(p);
    if (opts_.eager_expand) work = expand_derived(work, fresh_);
    work = congr_normalize(work);
    if (work->kind == Process::Kind::Par) {
        cfg.threads = work->kids;
    } else if (work->kind != Process::Kind::Skip) {
        cfg.threads = {work};
    }
    return cfg;
}

void Engine::replace(Config& cfg, size_t i, Proc replacement) {
    // The old node backs memo keys; keep it alive for the rest of the unit.
    cfg.graveyard.push_back(cfg.threads[i]);
    cfg.last_fired = to_text(cfg.threads[i]);
    cfg.threads[i] = std::move(replacement);
    ++cfg.steps;

    std::vector<Proc> flat;
    Proc spine = congr_normalize(Process::par(cfg.threads));
    if (spine->kind == Process::Kind::Par) {
        flat = spine->kids;
    } else if (spine->kind != Process::Kind::Skip) {
        flat = {spine};
    }
    cfg.threads = std::move(flat);
}

bool Engine::step_internal(Config& cfg) {
    const size_t n = cfg.threads.size();
    for (size_t scan = 0; scan < n; ++scan) {
        const size_t i = opts_.reverse_scan ? n - 1 - scan : scan;
        const Proc& t = cfg.threads[i];
        switch (t->kind) {
            case Process::Kind::Skip:
            case Process::Kind::Next:
                continue;

            case Process::Kind::Par:
                // threads are kept flat by replace(); dissolve defensively
                replace(cfg, i, t);
                return true;

            case Process::Kind::Tell: {
                Constraint c = t->c;
                replace(cfg, i, Process::skip());
                cfg.store->tell(c, fresh_);
                return true;
            }

            case Process::Kind::PTell:
            case Process::Kind::Wait:
            case Process::Kind::WaitAck: {
                Proc expanded = expand_derived_node(*t, fresh_);
                replace(cfg, i, std::move(expanded));
                return true;
            }

            case Process::Kind::Local: {
                Substitution ren;
                std::vector<std::string> names;
                for (const auto& v : t->vars) {
                    std::string nv = fresh_.fresh(v);
                    ren[v] = Term::var(nv);
                    names.push_back(nv);
                }
                Constraint init = t->c.substitute(ren);
                Proc body = substitute(t->body(), ren);
                for (const auto& nv : names) {
                    cfg.store->add_hidden(nv);
                    cfg.actives.push_back(nv);
                }
                replace(cfg, i, std::move(body));
                cfg.store->tell(init, fresh_);
                return true;
            }

            case Process::Kind::Bang:
                replace(cfg, i, Process::par({t->body(), Process::next(t)}));
                return true;

            case Process::Kind::BangN:
                replace(cfg, i, expand_bounded_bang(t));
                return true;

            case Process::Kind::Unless: {
                auto memo = cfg.enablement.find(t.get());
                bool entailed;
                if (memo != cfg.enablement.end() && memo->second.first == cfg.store->version()) {
                    entailed = memo->second.second;
                } else {
                    entailed = cfg.store->entails(t->c);
                    cfg.enablement[t.get()] = {cfg.store->version(), entailed};
                }
                if (!entailed) continue;
                replace(cfg, i, Process::skip());
                return true;
            }

            case Process::Kind::Abs: {
                Substitution sigma;
                bool enabled;
                auto memo = cfg.first_match.find(t.get());
                if (memo != cfg.first_match.end() && memo->second.first == cfg.store->version()) {
                    continue;  // only disabled nodes stay memoised
                }
                auto sols = cfg.store->match(t->vars, t->c, t->exclusions);
                enabled = !sols.empty();
                if (!enabled) {
                    cfg.first_match[t.get()] = {cfg.store->version(), {}};
                    continue;
                }
                sigma = sols.front();
                auto excl = t->exclusions;
                excl.push_back(sigma);
                Proc instance = t->vars.empty() ? t->body() : substitute(t->body(), sigma);
                Proc rearmed = Process::abs(t->vars, t->c, t->body(), std::move(excl));
                replace(cfg, i, Process::par({std::move(instance), std::move(rearmed)}));
                return true;
            }
        }
    }
    return false;
}

void Engine::quiesce(Config& cfg) {
    while (step_internal(cfg)) {
        if (cfg.steps > opts_.budget) throw NonQuiescenceError(opts_.budget, cfg.last_fired);
    }
}

Proc Engine::future(const Proc& p) {
    switch (p->kind) {
        case Process::Kind::Skip:
        case Process::Kind::Abs:
            return Process::skip();
        case Process::Kind::Next:
        case Process::Kind::Unless:
            return p->body();
        case Process::Kind::Par: {
            std::vector<Proc> kids;
            kids.reserve(p->kids.size());
            for (const auto& k : p->kids) kids.push_back(future(k));
            return Process::par(std::move(kids));
        }
        case Process::Kind::Local:
            return Process::local(p->vars, future(p->body()));
        default:
            throw std::logic_error("future() applied to a non-quiescent process: " + to_text(p));
    }
}

UnitResult Engine::finish(Config& cfg) {
    std::vector<Proc> nexts;
    nexts.reserve(cfg.threads.size());
    for (const auto& t : cfg.threads) nexts.push_back(future(t));
    Proc residual = congr_normalize(Process::par(std::move(nexts)));

    // Keep only the opened names the residual still mentions.
    auto fv = free_vars(residual);
    std::vector<std::string> keep;
    for (const auto& v : cfg.actives)
        if (fv.count(v)) keep.push_back(v);
    if (!keep.empty()) residual = congr_normalize(Process::local(std::move(keep), residual));

    arities_ = cfg.store->arities();

    UnitResult r;
    r.output = cfg.store->observable();
    r.residual = std::move(residual);
    r.store = cfg.store;
    r.steps = cfg.steps;
    return r;
}

UnitResult Engine::observe(const Proc& p, const Constraint& input) {
    Config cfg = start(p, input);
    quiesce(cfg);
    return finish(cfg);
}

Trace Engine::run(const Proc& p, size_t units, const std::vector<Constraint>& inputs) {
    Trace trace;
    Proc cur = p;
    for (size_t u = 0; u < units; ++u) {
        Constraint input = u < inputs.size() ? inputs[u] : Constraint::top();
        UnitResult r = observe(cur, input);
        cur = r.residual;
        trace.units.push_back(std::move(r));
    }
    return trace;
}

Constraint erased_observable(const Store& s) {
    if (s.inconsistent()) return Constraint::bottom();
    std::vector<Constraint> parts;
    for (const auto& f : s.facts())
        if (f.pred != kBookkeepingPred) parts.push_back(Constraint::atom(f));
    for (const auto& [a, b] : s.closure().told()) parts.push_back(Constraint::eq(a, b));
    for (const auto& [a, b] : s.diseqs()) parts.push_back(Constraint::neq(a, b));
    Constraint body = Constraint::conj(std::move(parts));

    auto fv = body.free_vars();
    std::vector<std::string> binders;
    std::set<std::string> taken;
    for (const auto& h : s.hidden())
        if (fv.count(h) && taken.insert(h).second) binders.push_back(h);
    if (binders.empty()) return body;
    return Constraint::exists(std::move(binders), std::move(body));
}

bool obs_equiv_unit(const Store& a, const Store& b) {
    if (a.inconsistent() || b.inconsistent()) return a.inconsistent() == b.inconsistent();
    return a.entails(erased_observable(b)) && b.entails(erased_observable(a));
}

bool obs_equiv(const Trace& a, const Trace& b) {
    if (a.units.size() != b.units.size())
        throw std::invalid_argument("obs_equiv: traces differ in length (" +
                                    std::to_string(a.units.size()) + " vs " +
                                    std::to_string(b.units.size()) + ")");
    for (size_t i = 0; i < a.units.size(); ++i)
        if (!obs_equiv_unit(*a.units[i].store, *b.units[i].store)) return false;
    return true;
}

}  // namespace sesscc::utcc
