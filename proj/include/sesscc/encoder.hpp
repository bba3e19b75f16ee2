#pragma once

#include <stdexcept>
#include <vector>

#include "sesscc/hvk/ast.hpp"
#include "sesscc/utcc/process.hpp"

namespace sesscc::enc {

/// Translation failure: a timed construct under an untimed encoding, a
/// session duration that is not a compile-time non-negative integer, a
/// shadowed or unknown process definition, or a leftover dur_ variable.
class EncodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EncodeOptions {
    /// Accept timed constructs and emit their session-window machinery.
    bool timed = false;
    /// Deliberately swap the req/acc predicate names. Produces a wrong
    /// encoding whose decoded states diverge from the reduction semantics
    /// in the first round; used as a falsifiability control in tests.
    bool corrupt_swap_req_acc = false;
};

/// Compile a session program into a ccp process. The translation is
/// compositional: parallel compositions, conditionals and continuations map
/// one-to-one onto ccp combinators, session actions become persistent tells
/// of req/acc/out/sel/outk atoms paired with acknowledging waits, and each
/// reduction round of the source corresponds to one time unit of the result.
/// Output pretty-prints to concrete syntax that reparses (no minted '#'
/// names); bounded replication in timed output reparses to its expansion.
utcc::Proc encode(const hvk::HProc& p, const EncodeOptions& opts = {});

/// Replicated responders for a group of process definitions: one
/// !(abs params; call_X(params)) body per declaration, with call sites in
/// the bodies replaced by tells of the matching call_X atom. encode() uses
/// the same construction for def blocks; exposed for direct testing.
utcc::Proc encode_recursion(const std::vector<hvk::Decl>& decls,
                            const EncodeOptions& opts = {});

/// Guard p by d: every store effect of p (tells, clock advances, negative
/// guards) happens only when d holds at that unit, while ask guards and
/// binders are left alone. Derived persistent markers and bounded
/// replication are expanded first; binders that would capture a variable of
/// d are renamed. Used to confine a timed session's continuation to the
/// units where its activation atom holds.
utcc::Proc guard_process(const Constraint& d, const utcc::Proc& p);

}  // namespace sesscc::enc
