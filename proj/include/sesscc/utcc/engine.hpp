#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sesscc/store.hpp"
#include "sesscc/utcc/process.hpp"

namespace sesscc::utcc {

/// A time unit failed to reach quiescence within the internal step budget,
/// which for a finitely branching program means a tell/ask feedback loop.
class NonQuiescenceError : public std::runtime_error {
public:
    NonQuiescenceError(size_t budget, std::string offender_text)
        : std::runtime_error("no quiescent point within " + std::to_string(budget) +
                             " internal steps; last active: " + offender_text),
          offender(std::move(offender_text)) {}
    std::string offender;
};

struct EngineOptions {
    /// Internal steps allowed per time unit.
    size_t budget = 10000;
    /// Expand the derived persistent constructs up front instead of when
    /// they first become active. Observationally equivalent.
    bool eager_expand = false;
    /// Scan parallel components right-to-left when picking the next step;
    /// exercised by the determinism tests, since quiescent results must not
    /// depend on the scan direction.
    bool reverse_scan = false;
};

struct UnitResult {
    /// Quiescent store projected onto non-hidden names.
    Constraint output;
    /// Process carried into the next time unit.
    Proc residual;
    /// Full quiescent store (with hidden names), for tracing and checking.
    std::shared_ptr<Store> store;
    size_t steps = 0;
};

struct Trace {
    std::vector<UnitResult> units;
};

/// Runs processes one time unit at a time: assert the unit's input, fire
/// internal rules until quiescence, read the store off, carry the residual
/// forward. Deterministic: parallel components are kept in canonical order
/// and the leftmost enabled rule fires.
class Engine {
public:
    explicit Engine(EngineOptions opts = {}) : opts_(opts) {
        if (opts_.budget == 0)
            throw std::invalid_argument("engine step budget must be positive");
    }

    /// Mid-unit machine state, exposed so tests can drive single steps.
    struct Config {
        std::vector<Proc> threads;
        std::shared_ptr<Store> store;
        /// Freshened names of local scopes opened this unit, activation order.
        std::vector<std::string> actives;
        size_t steps = 0;
        std::string last_fired;
        /// Enabledness memo for ask-style nodes, keyed by node identity and
        /// store version; replaced nodes are kept alive so keys stay unique.
        std::map<const Process*, std::pair<size_t, bool>> enablement;
        std::map<const Process*, std::pair<size_t, Substitution>> first_match;
        std::vector<Proc> graveyard;
    };

    Config start(const Proc& p, const Constraint& input);
    /// One internal reduction, leftmost enabled; false when quiescent.
    bool step_internal(Config& cfg);
    /// step_internal to fixpoint; throws NonQuiescenceError past the budget.
    void quiesce(Config& cfg);
    UnitResult finish(Config& cfg);

    /// One full time unit.
    UnitResult observe(const Proc& p, const Constraint& input);
    /// `units` time units; inputs[i] is asserted at unit i (True beyond).
    Trace run(const Proc& p, size_t units, const std::vector<Constraint>& inputs = {});

    /// Next-unit projection of a quiescent process.
    static Proc future(const Proc& p);

    FreshVarGen& fresh() { return fresh_; }
    const EngineOptions& options() const { return opts_; }

private:
    void replace(Config& cfg, size_t i, Proc replacement);

    EngineOptions opts_;
    FreshVarGen fresh_;
    std::map<std::string, size_t> arities_;
};

/// Store equivalence after erasing the derived constructs' bookkeeping
/// atoms: each side must entail the other's erased content with hidden
/// names existentially closed.
bool obs_equiv_unit(const Store& a, const Store& b);
/// Unit-wise obs_equiv_unit; throws std::invalid_argument when the traces
/// differ in length.
bool obs_equiv(const Trace& a, const Trace& b);

/// Erased, hidden-projected content used by obs_equiv_unit.
Constraint erased_observable(const Store& s);

}  // namespace sesscc::utcc
