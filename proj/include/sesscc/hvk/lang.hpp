#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sesscc/hvk/ast.hpp"

namespace sesscc::hvk {

class StuckError : public HvkError {
public:
    using HvkError::HvkError;
};

/// Raised when a round admits more than one maximal pairing of complementary
/// threads and forced lowest-index pairing was not requested.
class NonDeterminismError : public HvkError {
public:
    NonDeterminismError(std::string msg, std::vector<std::string> conflicts)
        : HvkError(std::move(msg)), conflicts(std::move(conflicts)) {}
    std::vector<std::string> conflicts;
};

/// def D in new u1, ..., um in (Q1 | ... | Qn) with every Qi free of
/// top-level parallel, restriction and process-variable nodes.
struct NormalForm {
    std::vector<Decl> decls;
    std::vector<std::string> nus;
    std::vector<HProc> threads;

    HProc to_process() const;
    std::string text() const { return to_text(to_process()); }
};

/// Rebuilds the canonical flat shape: declarations merged outermost,
/// restrictions hoisted (alpha-renamed on collision), top-level calls
/// unfolded through their definitions, inert threads dropped. The generator,
/// when given, supplies the alpha-renaming names; reduction drivers share
/// one across rounds so freshness is global to the run.
NormalForm normal_form(const HProc& p, FreshVarGen* fresh = nullptr);

/// Validity window of timed sessions. A session granted with duration m
/// admits redexes on its channel for the next m rounds; kills take effect
/// the round after they fire. Channels without an entry never expire.
struct SessionTable {
    std::map<std::string, long long> remaining;
    std::set<std::string> killed;

    bool blocks(const std::string& chan) const;
};

struct Redex {
    enum class Rule { Link, Com, Pass, Label, TimedLink };
    Rule rule;
    size_t active;   // requester / sender / selector / thrower index
    size_t passive;  // acceptor / receiver / brancher / catcher index

    std::string describe() const;
};

const char* rule_name(Redex::Rule r);

struct RedexScan {
    std::vector<Redex> redexes;      // ordered by (min index, max index)
    std::set<size_t> multi_partner;  // thread indices admitting several partners
};

/// All complementary top-level pairs. Timed pairs require the acceptor's
/// precondition to hold with the duration variable bound to the requested
/// duration; sessions blocked by the table produce no pairs.
RedexScan find_redexes(const std::vector<HProc>& threads,
                       const SessionTable& sessions = {});

/// One reduction of the lowest-index event (a conditional, or the first
/// redex pair), after bringing p into normal form. Throws StuckError when
/// nothing can fire.
HProc reduce_step(const HProc& p);

/// One action fired during a round, in machine-readable form; the display
/// strings in RoundRecord::fired are derived from these.
struct FiredEvent {
    enum class Kind { Link, Com, Pass, Label, TimedLink, IfTrue, IfFalse, Kill };
    Kind kind;
    std::string service;       // Link/TimedLink
    std::string chan;          // minted session channel for links, carrier otherwise
    std::string delegated;     // Pass payload channel
    std::string label;         // Label selection
    std::vector<Term> values;  // Com payload (evaluated); TimedLink duration at [0]
};

struct RoundRecord {
    size_t round = 0;                // 1-based
    std::vector<FiredEvent> events;  // in firing order (ascending thread index)
    std::vector<std::string> fired;  // e.g. "Com(k)", "If:then", "Kill(k)"
    NormalForm state;                // after the round, renormalized
};

struct RunOptions {
    bool force_pairing = false;  // resolve ambiguous pairings at lowest index
    bool timed = false;          // maintain the session table (kills, expiry)
};

struct HvkRun {
    NormalForm initial;
    std::vector<RoundRecord> rounds;
    SessionTable sessions;
    bool stuck = false;  // threads remain but no round could fire
};

/// The round-based driver: each round simultaneously fires every top-level
/// conditional, every kill, and every complementary pair of a maximal
/// disjoint pairing, leaving unmatched threads untouched, then renormalizes.
/// Runs until `rounds` rounds complete or nothing fires. Ambiguous pairings
/// raise NonDeterminismError unless forced.
HvkRun outermost_run(const HProc& p, size_t rounds, const RunOptions& opts = {});

/// Advances only the clock bookkeeping of `sessions` as the end of a round
/// does: grants recorded this round start counting next round, older grants
/// lose one unit, kills fired this round become effective.
void session_clock_step(SessionTable& sessions, const std::set<std::string>& granted_now,
                        const std::set<std::string>& killed_now);

/// Run states up to renaming of run-minted names: threads compared as a
/// multiset after canonicalizing restriction names by first use.
std::string canonical_text(const NormalForm& nf);

}  // namespace sesscc::hvk
