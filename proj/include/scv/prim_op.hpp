#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace scv {

enum class PrimOp : std::uint8_t {
  IntP,
  ProcP,
  ZeroP,
  NonzeroP,  // complement of zero?, rule-internal
  NonprocP,  // complement of proc?, rule-internal
  FlatContractP,
  DepContractP,
  Add1,
  Sub1,
  Plus,
  Minus,
  Times,
  Div,
  NumEq,
  Lt,
  Le,
  EvenP,
  OddP,
  PositiveP,
};

inline constexpr int kPrimOpCount = 19;

std::string_view prim_name(PrimOp op);

// Looks up a primitive by its surface spelling. Rule-internal complements
// (nonzero?, nonproc?) are not reachable from source text.
std::optional<PrimOp> prim_from_surface(std::string_view name);

// 1 for unary primitives, 2 for the curried binary ones.
int prim_arity(PrimOp op);

bool prim_is_predicate(PrimOp op);

// Partial operations that standard_env wraps in a guard contract.
bool prim_is_guarded(PrimOp op);

}  // namespace scv
