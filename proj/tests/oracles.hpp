#pragma once

// Brute-force oracles shared by the unit tests and the acceptance binary.
// Predicate truth is restated here from the language definition rather than
// taken from the library.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scv/abstraction.hpp"
#include "scv/feasibility.hpp"
#include "scv/primitives.hpp"

namespace oracle {

using scv::Refinements;
using scv::Value;
using scv::ValueKind;

inline bool holds(Refinements bit, const Value& v) {
  namespace r = scv::ref;
  bool num = v.kind == ValueKind::Num;
  bool proc = v.kind == ValueKind::Prim || v.kind == ValueKind::Clo || v.kind == ValueKind::Arr;
  switch (bit) {
    case r::kInt: return num;
    case r::kProc: return proc;
    case r::kZero: return num && v.n == 0;
    case r::kEven: return num && v.n % 2 == 0;
    case r::kOdd: return num && v.n % 2 != 0;
    case r::kPositive: return num && v.n > 0;
  }
  return false;
}

// v ⊨ R for a concrete v.
inline bool models(const Value& v, Refinements r) {
  for (int i = 0; i < scv::ref::kCount; ++i) {
    Refinements bit = Refinements(1u << i);
    if ((r & bit) && !holds(bit, v)) return false;
  }
  return true;
}

// Concrete c lies in the concretization of the abstract set s.
inline bool covered(const Value& c, const scv::ValueSet& s) {
  for (const auto& a : s) {
    if (a.kind == ValueKind::Opaque) {
      if (models(c, a.refs)) return true;
    } else if (a == c) {
      return true;
    } else if (a.kind == ValueKind::Prim && c.kind == ValueKind::Prim && a.op == c.op && a.partial &&
               c.partial) {
      if (covered(*c.partial, {*a.partial})) return true;
    }
  }
  return false;
}

inline Value identity_closure() {
  static const scv::ExprPtr lam = scv::alpha_rename(scv::mk::lam("x", scv::mk::ref("x")));
  return Value::clo(lam, scv::env_empty(), scv::pc_empty());
}

// −3…3, primitives (two of them partial) and a closure.
inline std::vector<Value> small_universe() {
  std::vector<Value> u;
  for (int n = -3; n <= 3; ++n) u.push_back(Value::num(n));
  u.push_back(Value::prim(scv::PrimOp::Add1));
  u.push_back(Value::prim_partial(scv::PrimOp::Plus, Value::num(1)));
  u.push_back(Value::prim_partial(scv::PrimOp::Plus, Value::num(2)));
  u.push_back(identity_closure());
  return u;
}

inline std::vector<Refinements> all_refinement_sets() {
  std::vector<Refinements> rs;
  for (int r = 0; r <= scv::ref::kAll; ++r) rs.push_back(Refinements(r));
  return rs;
}

inline const std::vector<scv::PrimOp>& unary_ops() {
  using scv::PrimOp;
  static const std::vector<PrimOp> ops = {PrimOp::IntP,  PrimOp::ProcP, PrimOp::ZeroP,     PrimOp::NonzeroP,
                                          PrimOp::NonprocP, PrimOp::EvenP, PrimOp::OddP, PrimOp::PositiveP,
                                          PrimOp::Add1,  PrimOp::Sub1};
  return ops;
}

inline const std::vector<scv::PrimOp>& binary_ops() {
  using scv::PrimOp;
  static const std::vector<PrimOp> ops = {PrimOp::Plus, PrimOp::Minus, PrimOp::Times, PrimOp::Div,
                                          PrimOp::NumEq, PrimOp::Lt,   PrimOp::Le};
  return ops;
}

struct Tally {
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  std::string first;
};

// δ(p, v) ⊆ γ(δ(p, Opaque(R))) whenever v ⊨ R, for unary p, and the same for
// both argument positions of the binary primitives.
inline Tally delta_soundness() {
  Tally t;
  auto u = small_universe();
  auto rs = all_refinement_sets();
  auto note = [&](const std::string& what) {
    if (t.violations++ == 0) t.first = what;
  };
  for (auto r : rs) {
    if (scv::refinements_inconsistent(r)) continue;
    Value o = Value::opaque(r);
    for (const auto& v : u) {
      if (!models(v, r)) continue;
      for (auto op : unary_ops()) {
        ++t.checked;
        Value c = scv::delta_concrete(op, v);
        if (!covered(c, scv::delta(op, o)))
          note(std::string(scv::prim_name(op)) + " " + scv::print_value(v) + " ⊨ " + scv::print_refinements(r));
      }
      for (auto op : binary_ops()) {
        for (const auto& w : u) {
          ++t.checked;
          Value c = scv::delta2_concrete(op, v, w);
          if (!covered(c, scv::delta2(op, o, w)))
            note(std::string(scv::prim_name(op)) + " • " + scv::print_value(w));
          ++t.checked;
          Value d = scv::delta2_concrete(op, w, v);
          if (!covered(d, scv::delta2(op, w, o)))
            note(std::string(scv::prim_name(op)) + " " + scv::print_value(w) + " •");
          for (auto r2 : rs) {
            if (scv::refinements_inconsistent(r2) || !models(w, r2)) continue;
            ++t.checked;
            if (!covered(c, scv::delta2(op, o, Value::opaque(r2))))
              note(std::string(scv::prim_name(op)) + " • •");
          }
        }
      }
    }
  }
  return t;
}

// Everything in old ∪ {v} is covered by widen(old, v), for every pair drawn
// from the universe plus opaques over every refinement set.
inline Tally widening_soundness() {
  Tally t;
  auto u = small_universe();
  std::vector<Value> abstract = u;
  for (auto r : all_refinement_sets()) {
    if (!scv::refinements_inconsistent(r)) abstract.push_back(Value::opaque(r));
  }
  auto concretes_of = [&](const Value& a) {
    std::vector<Value> cs;
    for (const auto& c : u) {
      if (covered(c, {a})) cs.push_back(c);
    }
    return cs;
  };
  for (const auto& a : abstract) {
    for (const auto& b : abstract) {
      scv::ValueSet w = scv::widen({a}, b);
      for (const auto& src : {a, b}) {
        for (const auto& c : concretes_of(src)) {
          ++t.checked;
          if (!covered(c, w) && t.violations++ == 0)
            t.first = scv::print_value(a) + " ⊔ " + scv::print_value(b) + " loses " + scv::print_value(c);
        }
      }
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// path conditions

// A value of the symbolic-term language: a number, a procedure token, or a
// binary primitive waiting for its second argument.
struct TermVal {
  enum Kind { Num, Proc, Partial } kind = Num;
  std::int64_t n = 0;
  scv::PrimOp op = scv::PrimOp::IntP;
};

using Assignment = std::map<std::string, TermVal>;

inline std::int64_t as_int(const TermVal& v) { return v.kind == TermVal::Num ? v.n : 0; }

inline TermVal eval_term(const scv::Expr& e, const Assignment& a) {
  using scv::ExprKind;
  using scv::PrimOp;
  switch (e.kind) {
    case ExprKind::Num: return {TermVal::Num, e.num};
    case ExprKind::Ref: return a.at(e.var);
    case ExprKind::Prim: return {TermVal::Proc, 0, e.op};
    case ExprKind::App: {
      TermVal f = eval_term(e.kid(0), a);
      TermVal x = eval_term(e.kid(1), a);
      if (f.kind == TermVal::Partial) {
        std::int64_t l = f.n, r = as_int(x);
        switch (f.op) {
          case PrimOp::Plus: return {TermVal::Num, l + r};
          case PrimOp::Minus: return {TermVal::Num, l - r};
          case PrimOp::Times: return {TermVal::Num, l * r};
          case PrimOp::NumEq: return {TermVal::Num, l == r};
          case PrimOp::Lt: return {TermVal::Num, l < r};
          case PrimOp::Le: return {TermVal::Num, l <= r};
          default: return {TermVal::Num, 0};
        }
      }
      if (scv::prim_arity(f.op) == 2) return {TermVal::Partial, as_int(x), f.op};
      bool num = x.kind == TermVal::Num;
      bool proc = !num;
      switch (f.op) {
        case PrimOp::Add1: return {TermVal::Num, as_int(x) + 1};
        case PrimOp::Sub1: return {TermVal::Num, as_int(x) - 1};
        case PrimOp::IntP: return {TermVal::Num, num};
        case PrimOp::ProcP: return {TermVal::Num, proc};
        case PrimOp::NonprocP: return {TermVal::Num, !proc};
        case PrimOp::ZeroP: return {TermVal::Num, num && x.n == 0};
        case PrimOp::NonzeroP: return {TermVal::Num, !(num && x.n == 0)};
        case PrimOp::EvenP: return {TermVal::Num, num && x.n % 2 == 0};
        case PrimOp::OddP: return {TermVal::Num, num && x.n % 2 != 0};
        case PrimOp::PositiveP: return {TermVal::Num, num && x.n > 0};
        default: return {TermVal::Num, 0};
      }
    }
    default:
      throw std::logic_error("term outside the path-condition fragment");
  }
}

// Some assignment of −4…4 or a procedure token to each symbol makes every
// fact non-zero.
inline bool brute_force_sat(const std::vector<scv::ExprPtr>& facts, const std::vector<std::string>& symbols) {
  std::vector<TermVal> domain;
  for (int n = -4; n <= 4; ++n) domain.push_back({TermVal::Num, n});
  domain.push_back({TermVal::Proc, 0, scv::PrimOp::Add1});
  std::vector<std::size_t> idx(symbols.size(), 0);
  for (;;) {
    Assignment a;
    for (std::size_t i = 0; i < symbols.size(); ++i) a[symbols[i]] = domain[idx[i]];
    bool all = true;
    for (const auto& f : facts) {
      TermVal v = eval_term(*f, a);
      if (v.kind == TermVal::Num && v.n == 0) {
        all = false;
        break;
      }
    }
    if (all) return true;
    std::size_t i = 0;
    while (i < idx.size() && ++idx[i] == domain.size()) idx[i++] = 0;
    if (i == idx.size()) return false;
  }
}

struct PcQuery {
  std::vector<std::string> symbols;
  std::vector<scv::ExprPtr> facts;
  scv::PrimOp pred = scv::PrimOp::NonzeroP;
  scv::ExprPtr subject;
};

// Linear facts over at most three symbols, plus a query predicate on a linear
// term.
class PcGenerator {
 public:
  explicit PcGenerator(std::uint64_t seed) : rng_(seed) {}

  PcQuery next() {
    PcQuery q;
    int nsym = 1 + pick(3);
    static const char* names[] = {"x", "y", "z"};
    for (int i = 0; i < nsym; ++i) q.symbols.push_back(names[i]);
    int nfacts = 1 + pick(4);
    for (int i = 0; i < nfacts; ++i) q.facts.push_back(fact(q.symbols));
    static const scv::PrimOp preds[] = {scv::PrimOp::NonzeroP, scv::PrimOp::ZeroP, scv::PrimOp::PositiveP,
                                        scv::PrimOp::IntP, scv::PrimOp::EvenP};
    q.pred = preds[pick(5)];
    q.subject = pick(2) ? linear(q.symbols) : comparison(q.symbols);
    return q;
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  scv::ExprPtr lit() { return scv::mk::num(pick(9) - 4); }
  scv::ExprPtr sym(const std::vector<std::string>& s) { return scv::mk::ref(s[pick(int(s.size()))]); }
  static scv::ExprPtr bin(scv::PrimOp op, scv::ExprPtr a, scv::ExprPtr b) {
    auto l = scv::Label::language();
    return scv::mk::app(scv::mk::app(scv::mk::prim(op), std::move(a), l), std::move(b), l);
  }
  static scv::ExprPtr un(scv::PrimOp op, scv::ExprPtr a) {
    return scv::mk::app(scv::mk::prim(op), std::move(a), scv::Label::language());
  }

  scv::ExprPtr linear(const std::vector<std::string>& s) {
    switch (pick(6)) {
      case 0: return sym(s);
      case 1: return bin(scv::PrimOp::Plus, sym(s), sym(s));
      case 2: return bin(scv::PrimOp::Minus, sym(s), lit());
      case 3: return bin(scv::PrimOp::Times, lit(), sym(s));
      case 4: return un(scv::PrimOp::Add1, sym(s));
      default: return un(scv::PrimOp::Sub1, sym(s));
    }
  }

  scv::ExprPtr comparison(const std::vector<std::string>& s) {
    static const scv::PrimOp cmp[] = {scv::PrimOp::Lt, scv::PrimOp::Le, scv::PrimOp::NumEq};
    scv::ExprPtr a = linear(s);
    scv::ExprPtr b = pick(2) ? lit() : sym(s);
    return pick(2) ? bin(cmp[pick(3)], a, b) : bin(cmp[pick(3)], b, a);
  }

  scv::ExprPtr fact(const std::vector<std::string>& s) {
    switch (pick(5)) {
      case 0: return un(scv::PrimOp::ZeroP, comparison(s));
      case 1: return un(scv::PrimOp::IntP, sym(s));
      case 2: return un(scv::PrimOp::PositiveP, linear(s));
      default: return comparison(s);
    }
  }

  std::mt19937_64 rng_;
};

struct PcTally {
  int queries = 0;
  int infeasible = 0;
  int unsound = 0;
  std::string first;
};

// Runs `n` generated queries through feasible() and confirms every pruning by
// brute force.
inline PcTally feasibility_soundness(int n, std::uint64_t seed, bool use_solver) {
  PcTally t;
  PcGenerator gen(seed);
  scv::FeasibilityConfig cfg;
  cfg.use_solver = use_solver;
  scv::Feasibility feas(cfg);
  for (int i = 0; i < n; ++i) {
    PcQuery q = gen.next();
    scv::PathCondition pc = scv::pc_from(q.facts);
    ++t.queries;
    auto out = feas.feasible(pc, q.pred, {Value::opaque(), q.subject});
    if (out) continue;
    ++t.infeasible;
    auto all = q.facts;
    all.push_back(scv::encode(q.pred, q.subject));
    if (brute_force_sat(all, q.symbols) && t.unsound++ == 0) {
      t.first = scv::print_pc(pc) + " ∧ " + scv::print(all.back());
    }
  }
  return t;
}

}  // namespace oracle
