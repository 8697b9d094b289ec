#include "scv/prim_op.hpp"

#include <array>

namespace scv {

namespace {

struct PrimInfo {
  PrimOp op;
  std::string_view name;
  int arity;
  bool predicate;
  bool guarded;
  bool surface;
};

constexpr std::array<PrimInfo, kPrimOpCount> kPrims{{
    {PrimOp::IntP, "int?", 1, true, false, true},
    {PrimOp::ProcP, "proc?", 1, true, false, true},
    {PrimOp::ZeroP, "zero?", 1, true, false, true},
    {PrimOp::NonzeroP, "nonzero?", 1, true, false, false},
    {PrimOp::NonprocP, "nonproc?", 1, true, false, false},
    {PrimOp::FlatContractP, "flat-contract?", 1, true, false, true},
    {PrimOp::DepContractP, "dep-contract?", 1, true, false, true},
    {PrimOp::Add1, "add1", 1, false, true, true},
    {PrimOp::Sub1, "sub1", 1, false, true, true},
    {PrimOp::Plus, "+", 2, false, true, true},
    {PrimOp::Minus, "-", 2, false, true, true},
    {PrimOp::Times, "*", 2, false, true, true},
    {PrimOp::Div, "/", 2, false, true, true},
    {PrimOp::NumEq, "=", 2, false, true, true},
    {PrimOp::Lt, "<", 2, false, true, true},
    {PrimOp::Le, "<=", 2, false, true, true},
    {PrimOp::EvenP, "even?", 1, true, false, true},
    {PrimOp::OddP, "odd?", 1, true, false, true},
    {PrimOp::PositiveP, "positive?", 1, true, false, true},
}};

const PrimInfo& info(PrimOp op) { return kPrims[static_cast<std::size_t>(op)]; }

}  // namespace

std::string_view prim_name(PrimOp op) { return info(op).name; }

std::optional<PrimOp> prim_from_surface(std::string_view name) {
  if (name == "≤") name = "<=";
  if (name == "−") name = "-";
  for (const auto& p : kPrims) {
    if (p.surface && p.name == name) return p.op;
  }
  return std::nullopt;
}

int prim_arity(PrimOp op) { return info(op).arity; }
bool prim_is_predicate(PrimOp op) { return info(op).predicate; }
bool prim_is_guarded(PrimOp op) { return info(op).guarded; }

}  // namespace scv
