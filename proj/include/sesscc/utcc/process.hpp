#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "sesscc/constraint.hpp"
#include "sesscc/syntax.hpp"

namespace sesscc::utcc {

class Process;
/// Processes are immutable trees shared by pointer; every transformation
/// builds new nodes.
using Proc = std::shared_ptr<const Process>;

/// Reserved predicate used by the derived persistent constructs for their
/// go/stop bookkeeping; erased by observable equivalence.
inline const char* kBookkeepingPred = "outp";
/// Prefix of acknowledgment predicates (one per acknowledged predicate).
inline const char* kAckPrefix = "ack_";

/// The eight core constructs plus bounded replication and the derived
/// persistent markers (PTell / Wait / WaitAck), which expand on first
/// execution unless eager expansion is requested.
class Process {
public:
    enum class Kind {
        Skip,
        Tell,
        Abs,
        Par,
        Local,
        Next,
        Unless,
        Bang,
        BangN,
        PTell,
        Wait,
        WaitAck,
    };

    Kind kind = Kind::Skip;
    Constraint c;                          // Tell/PTell payload, Abs/Wait/Unless guard, Local init
    std::vector<std::string> vars;         // Abs/Wait/WaitAck binders, Local variables
    std::vector<Proc> kids;                // Par components; single body otherwise
    int n = 0;                             // BangN bound
    std::vector<Substitution> exclusions;  // Abs only; substitutions already fired

    const Proc& body() const { return kids[0]; }

    static Proc skip();
    static Proc tell(Constraint c);
    static Proc abs(std::vector<std::string> binders, Constraint guard, Proc body,
                    std::vector<Substitution> exclusions = {});
    /// when c do P == abs with no binders
    static Proc when(Constraint guard, Proc body);
    static Proc par(std::vector<Proc> parts);
    static Proc local(std::vector<std::string> vars, Constraint init, Proc body);
    static Proc local(std::vector<std::string> vars, Proc body);
    static Proc next(Proc body);
    static Proc unless(Constraint guard, Proc body);
    static Proc bang(Proc body);
    static Proc bangn(int n, Proc body);
    static Proc ptell(Constraint c);
    static Proc wait(std::vector<std::string> binders, Constraint guard, Proc body);
    static Proc wait_ack(std::vector<std::string> binders, Constraint guard, Proc body);
    /// whenever c do P == wait_ack with no binders
    static Proc whenever(Constraint guard, Proc body);
};

bool struct_equal(const Proc& a, const Proc& b);
/// Total structural order; Par components are kept sorted under it so that
/// parallel composition is canonical up to commutativity/associativity.
int compare(const Proc& a, const Proc& b);

std::set<std::string> free_vars(const Proc& p);

/// Capture-avoiding substitution; Abs/Wait/Local binders shadow and are
/// renamed when a range term would be captured.
Proc substitute(const Proc& p, const Substitution& sub);

/// Structural-congruence normal form: Par flattened, sorted and stripped of
/// Skip units; adjacent Local scopes merged when binders are disjoint and
/// unmentioned by the outer init constraint. Idempotent.
Proc congr_normalize(const Proc& p);

/// Replaces BangN(n, P) by P || next P || ... || next^(n-1) P, everywhere.
Proc expand_bounded_bang(const Proc& p);

/// Acknowledgment constraint: ack_p applied atom-wise to the atoms of c;
/// non-atomic conjuncts are dropped.
Constraint ack_of(const Constraint& c);

/// Definitional expansion of one derived marker (go/stop freshened).
Proc expand_derived_node(const Process& p, FreshVarGen& fresh);
/// Deep expansion of every derived marker.
Proc expand_derived(const Proc& p, FreshVarGen& fresh);

/// Concrete syntax. Round-trips through parse_process for exclusion-free
/// trees; the bounded replication form reparses to its expansion.
std::string to_text(const Proc& p);

Proc parse_process(syn::Lexer& lx, const syn::TermScope& scope);
Proc parse_process_text(const std::string& src);

}  // namespace sesscc::utcc
