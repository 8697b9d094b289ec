#include "scv/primitives.hpp"

#include <limits>

namespace scv {

namespace {

Value num(std::int64_t n) { return Value::num(n); }
Value truth(bool b) { return Value::num(b ? 1 : 0); }

ValueSet both() { return {num(0), num(1)}; }

std::int64_t wrap_add(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) + static_cast<std::uint64_t>(b));
}
std::int64_t wrap_sub(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b));
}
std::int64_t wrap_mul(std::int64_t a, std::int64_t b) {
  return static_cast<std::int64_t>(static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b));
}

std::int64_t as_int(const Value& v) { return v.is_num() ? v.n : 0; }

// Opaque truth of a vocabulary predicate under refinements.
std::optional<bool> decide_refined(PrimOp pred, Refinements r) {
  r = close_refinements(r);
  auto has = [&](Refinements b) { return (r & b) != 0; };
  switch (pred) {
    case PrimOp::IntP:
      if (has(ref::kInt)) return true;
      if (has(ref::kProc)) return false;
      return std::nullopt;
    case PrimOp::ProcP:
      if (has(ref::kProc)) return true;
      if (has(ref::kInt)) return false;
      return std::nullopt;
    case PrimOp::ZeroP:
      if (has(ref::kZero)) return true;
      if (has(ref::kPositive | ref::kOdd | ref::kProc)) return false;
      return std::nullopt;
    case PrimOp::NonzeroP: {
      auto z = decide_refined(PrimOp::ZeroP, r);
      if (z) return !*z;
      return std::nullopt;
    }
    case PrimOp::NonprocP: {
      auto p = decide_refined(PrimOp::ProcP, r);
      if (p) return !*p;
      return std::nullopt;
    }
    case PrimOp::EvenP:
      if (has(ref::kEven)) return true;
      if (has(ref::kOdd | ref::kProc)) return false;
      return std::nullopt;
    case PrimOp::OddP:
      if (has(ref::kOdd)) return true;
      if (has(ref::kEven | ref::kProc)) return false;
      return std::nullopt;
    case PrimOp::PositiveP:
      if (has(ref::kPositive)) return true;
      if (has(ref::kZero | ref::kProc)) return false;
      return std::nullopt;
    case PrimOp::FlatContractP:
      if (has(ref::kInt)) return false;
      return std::nullopt;
    case PrimOp::DepContractP:
      if (has(ref::kInt | ref::kProc)) return false;
      return std::nullopt;
    default:
      return std::nullopt;
  }
}

bool decide_concrete(PrimOp pred, const Value& v) {
  switch (pred) {
    case PrimOp::IntP: return v.is_num();
    case PrimOp::ProcP: return v.is_procedure();
    case PrimOp::ZeroP: return v.is_num() && v.n == 0;
    case PrimOp::NonzeroP: return !(v.is_num() && v.n == 0);
    case PrimOp::NonprocP: return !v.is_procedure();
    case PrimOp::FlatContractP: return v.kind == ValueKind::Prim || v.kind == ValueKind::Clo;
    case PrimOp::DepContractP: return v.kind == ValueKind::Grd;
    case PrimOp::EvenP: return v.is_num() && v.n % 2 == 0;
    case PrimOp::OddP: return v.is_num() && v.n % 2 != 0;
    case PrimOp::PositiveP: return v.is_num() && v.n > 0;
    default: return false;
  }
}

// Arithmetic operand after applying the unsafe convention that non-numbers
// count as 0. Either an exact number or integer refinements.
struct IntOperand {
  bool exact = false;
  std::int64_t n = 0;
  Refinements r = ref::kInt;
};

IntOperand operand(const Value& v) {
  if (v.is_num()) return {true, v.n, 0};
  if (!v.is_opaque()) return {true, 0, 0};
  Refinements r = close_refinements(v.refs);
  if (r & (ref::kProc | ref::kZero)) return {true, 0, 0};
  if (r & ref::kInt) return {false, 0, r};
  return {false, 0, ref::kInt};
}

Refinements refinements_of_int(std::int64_t n) {
  Refinements r = ref::kInt;
  if (n == 0) r |= ref::kZero;
  if (n > 0) r |= ref::kPositive;
  r |= (n % 2 == 0) ? ref::kEven : ref::kOdd;
  return close_refinements(r);
}

}  // namespace

Refinements arith_transfer(PrimOp op, Refinements a, Refinements b) {
  a = close_refinements(a | ref::kInt);
  b = close_refinements(b | ref::kInt);
  auto parity = [](Refinements r) -> int {
    if (r & ref::kEven) return 0;
    if (r & ref::kOdd) return 1;
    return -1;
  };
  auto flip = [](int p) { return p < 0 ? p : 1 - p; };
  int pa = parity(a), pb = parity(b);
  bool posa = a & ref::kPositive, posb = b & ref::kPositive;
  bool zera = a & ref::kZero, zerb = b & ref::kZero;
  int p = -1;
  bool pos = false;
  switch (op) {
    case PrimOp::Add1:
      p = flip(pa);
      pos = posa || zera;
      break;
    case PrimOp::Sub1:
      p = flip(pa);
      break;
    case PrimOp::Plus:
      if (pa >= 0 && pb >= 0) p = pa ^ pb;
      pos = (posa && (posb || zerb)) || (zera && posb);
      break;
    case PrimOp::Minus:
      if (pa >= 0 && pb >= 0) p = pa ^ pb;
      pos = posa && zerb;
      break;
    case PrimOp::Times:
      if (pa == 0 || pb == 0) {
        p = 0;
      } else if (pa == 1 && pb == 1) {
        p = 1;
      }
      pos = posa && posb;
      break;
    default:
      break;
  }
  Refinements r = ref::kInt;
  if (p == 0) r |= ref::kEven;
  if (p == 1) r |= ref::kOdd;
  if (pos) r |= ref::kPositive;
  return r;
}

Value delta_concrete(PrimOp op, const Value& v) {
  switch (op) {
    case PrimOp::Add1: return num(wrap_add(as_int(v), 1));
    case PrimOp::Sub1: return num(wrap_sub(as_int(v), 1));
    default:
      // non-numbers count as 0, so the first argument is kept as a number
      if (prim_arity(op) == 2) return Value::prim_partial(op, v.is_num() || v.is_opaque() ? v : num(0));
      return truth(decide_concrete(op, v));
  }
}

Value delta2_concrete(PrimOp op, const Value& a, const Value& b) {
  std::int64_t x = as_int(a), y = as_int(b);
  switch (op) {
    case PrimOp::Plus: return num(wrap_add(x, y));
    case PrimOp::Minus: return num(wrap_sub(x, y));
    case PrimOp::Times: return num(wrap_mul(x, y));
    case PrimOp::Div:
      if (y == 0) return num(0);
      if (x == std::numeric_limits<std::int64_t>::min() && y == -1) return num(x);
      return num(x / y);
    case PrimOp::NumEq: return truth(x == y);
    case PrimOp::Lt: return truth(x < y);
    case PrimOp::Le: return truth(x <= y);
    default: return num(0);
  }
}

std::optional<bool> decide(PrimOp pred, const Value& v) {
  if (v.is_opaque()) return decide_refined(pred, v.refs);
  return decide_concrete(pred, v);
}

ValueSet delta(PrimOp op, const Value& v) {
  if (prim_arity(op) == 2) return {delta_concrete(op, v)};
  if (!v.is_opaque()) return {delta_concrete(op, v)};
  if (prim_is_predicate(op)) {
    auto d = decide_refined(op, v.refs);
    if (d) return {truth(*d)};
    return both();
  }
  IntOperand a = operand(v);
  if (a.exact) return {delta_concrete(op, num(a.n))};
  return {Value::opaque(arith_transfer(op, a.r, 0))};
}

ValueSet delta2(PrimOp op, const Value& a, const Value& b) {
  if (!a.is_opaque() && !b.is_opaque()) return {delta2_concrete(op, a, b)};
  IntOperand x = operand(a), y = operand(b);
  if (x.exact && y.exact) return {delta2_concrete(op, num(x.n), num(y.n))};
  switch (op) {
    case PrimOp::NumEq:
    case PrimOp::Lt:
    case PrimOp::Le:
      return both();
    case PrimOp::Times:
      if ((x.exact && x.n == 0) || (y.exact && y.n == 0)) return {num(0)};
      break;
    case PrimOp::Div:
      if (y.exact && y.n == 0) return {num(0)};
      return {Value::opaque(ref::kInt)};
    default:
      break;
  }
  Refinements ra = x.exact ? refinements_of_int(x.n) : x.r;
  Refinements rb = y.exact ? refinements_of_int(y.n) : y.r;
  return {Value::opaque(arith_transfer(op, ra, rb))};
}

ValueSet apply_prim(const Value& fn, const Value& arg) {
  if (fn.partial) return delta2(fn.op, *fn.partial, arg);
  return delta(fn.op, arg);
}

Refinements concrete_refinements(const Value& v) {
  if (v.is_opaque()) return close_refinements(v.refs);
  Refinements r = 0;
  for (PrimOp p : {PrimOp::IntP, PrimOp::ProcP, PrimOp::ZeroP, PrimOp::EvenP, PrimOp::OddP,
                   PrimOp::PositiveP}) {
    if (decide_concrete(p, v)) r |= refinement_bit(p);
  }
  return r;
}

bool satisfies_all(const Value& v, Refinements r) {
  r = close_refinements(r);
  return (concrete_refinements(v) & r) == r;
}

ExprPtr guard_contract(PrimOp op, SourcePos pos) {
  auto int_p = [&] { return mk::prim(PrimOp::IntP, pos); };
  if (prim_arity(op) == 1) return mk::depcon(int_p(), "_", int_p(), pos);
  ExprPtr second_dom = int_p();
  if (op == PrimOp::Div) {
    // divisor must be non-zero
    Label l = Label::transparent(pos.str());
    auto test = mk::app(mk::prim(PrimOp::ZeroP, pos), mk::ref("d", pos), l, pos);
    second_dom = mk::lam("d", mk::if_(test, mk::num(0, pos), mk::num(1, pos), pos), pos);
  }
  auto inner = mk::depcon(second_dom, "_", int_p(), pos);
  return mk::depcon(int_p(), "_", inner, pos);
}

std::vector<std::pair<PrimOp, ExprPtr>> standard_env(const Label& user) {
  std::vector<std::pair<PrimOp, ExprPtr>> out;
  for (int i = 0; i < kPrimOpCount; ++i) {
    auto op = static_cast<PrimOp>(i);
    if (!prim_is_guarded(op)) continue;
    out.emplace_back(op, mk::mon(Label::language(), user, guard_contract(op), mk::prim(op)));
  }
  return out;
}

}  // namespace scv
