#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "scv/machine.hpp"

namespace scv {

// δ for a unary application `op v`. Binary primitives applied to their first
// argument yield the partial application Prim(op, v).
ValueSet delta(PrimOp op, const Value& v);

// δ for `((op a) b)`; op must be binary.
ValueSet delta2(PrimOp op, const Value& a, const Value& b);

// Applies a primitive value (possibly partial) to an argument.
ValueSet apply_prim(const Value& fn, const Value& arg);

// The exact unsafe semantics on concrete values. Non-numbers in arithmetic
// positions count as 0; `/` by zero returns 0; overflow wraps.
Value delta_concrete(PrimOp op, const Value& v);
Value delta2_concrete(PrimOp op, const Value& a, const Value& b);

// Truth of a predicate: true/false when δ is a singleton {1}/{0}.
std::optional<bool> decide(PrimOp pred, const Value& v);

// Vocabulary predicates a concrete value satisfies.
Refinements concrete_refinements(const Value& v);

// v ⊨ R: every predicate of R holds of v per δ. For opaque v this is
// refinement inclusion.
bool satisfies_all(const Value& v, Refinements r);

// Refinements of an opaque produced by arithmetic, or nullopt for operands that
// are not known to be integers.
Refinements arith_transfer(PrimOp op, Refinements a, Refinements b);

// The contract a guarded primitive carries.
ExprPtr guard_contract(PrimOp op, SourcePos pos = {});

// Guarded bindings: (op, (mon Λ user guard op)).
std::vector<std::pair<PrimOp, ExprPtr>> standard_env(const Label& user = Label::transparent("user"));

}  // namespace scv
