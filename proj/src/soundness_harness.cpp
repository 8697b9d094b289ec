#include "scv/soundness_harness.hpp"

#include <algorithm>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace scv {

// ---------------------------------------------------------------------------
// approximation

Addr AbstractionMap::operator()(const Addr& a) const {
  if (identity) return a;
  auto it = map.find(a);
  return it == map.end() ? Addr::leak() : it->second;
}

bool is_oexpr(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Num:
    case ExprKind::Prim:
    case ExprKind::Ref:
      return true;
    case ExprKind::Lam:
    case ExprKind::Set:
      return is_oexpr(e.kid(0));
    case ExprKind::App:
      return e.label.is_opaque() && is_oexpr(e.kid(0)) && is_oexpr(e.kid(1));
    case ExprKind::If:
      return is_oexpr(e.kid(0)) && is_oexpr(e.kid(1)) && is_oexpr(e.kid(2));
    default:
      return false;
  }
}

bool approx_expr(const Expr& e, const Expr& e2) {
  if (e2.kind == ExprKind::Opq) {
    switch (e.kind) {
      case ExprKind::Num:
      case ExprKind::Prim:
        return true;
      case ExprKind::Lam:
        return is_oexpr(e.kid(0)) && free_vars(e).empty();
      default:
        return false;
    }
  }
  if (e.kind != e2.kind || e.kids.size() != e2.kids.size()) return false;
  switch (e.kind) {
    case ExprKind::Num:
      return e.num == e2.num;
    case ExprKind::Prim:
      return e.op == e2.op;
    case ExprKind::Ref:
      return e.var == e2.var;
    case ExprKind::Lam:
    case ExprKind::Set:
    case ExprKind::DepCon:
      if (e.var != e2.var) return false;
      break;
    case ExprKind::App:
      if (e.label != e2.label) return false;
      // ℓ• only labels applications whose operator is drawn from a hole
      if (e.label.is_opaque() && !contains_opaque(e2.kid(0))) return false;
      break;
    case ExprKind::Mon:
      if (e.label != e2.label || e.neg != e2.neg) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < e.kids.size(); ++i) {
    if (!approx_expr(e.kid(i), e2.kid(i))) return false;
  }
  return true;
}

bool restricted(const AbstractionMap& F, const Env& env) {
  if (!env) return true;
  for (const auto& [x, a] : env->slots) {
    if (!F(a).is_leak()) return false;
  }
  return true;
}

namespace {

bool satisfies(const Value& v, Refinements r) {
  for (int i = 0; i < ref::kCount; ++i) {
    Refinements bit = Refinements(1u << i);
    if (!(r & bit)) continue;
    bool ok = false;
    if (v.is_num()) {
      switch (bit) {
        case ref::kInt: ok = true; break;
        case ref::kZero: ok = v.n == 0; break;
        case ref::kEven: ok = v.n % 2 == 0; break;
        case ref::kOdd: ok = v.n % 2 != 0; break;
        case ref::kPositive: ok = v.n > 0; break;
        default: ok = false;
      }
    } else if (v.is_opaque()) {
      ok = (v.refs & bit) != 0;
    } else {
      ok = bit == ref::kProc && v.is_procedure();
    }
    if (!ok) return false;
  }
  return true;
}

bool approx_env(const AbstractionMap& F, const Env& env, const Env& env2) {
  if (!env) return true;
  for (const auto& [x, a] : env->slots) {
    const Addr* a2 = env_find(env2, x);
    if (!a2 || !(F(a) == *a2)) return false;
  }
  return true;
}

}  // namespace

bool approx_value(const AbstractionMap& F, const Value& v, const Value& v2) {
  if (v2.is_opaque()) {
    if (!satisfies(v, v2.refs)) return false;
    switch (v.kind) {
      case ValueKind::Num:
      case ValueKind::Opaque:
        return true;
      case ValueKind::Prim:
        return !v.partial || approx_value(F, *v.partial, Value::opaque());
      case ValueKind::Clo:
        return restricted(F, v.env);
      case ValueKind::Grd:
      case ValueKind::Arr:
        return F(v.a1).is_leak() && F(v.a2).is_leak();
    }
    return false;
  }
  if (v.kind != v2.kind) return false;
  switch (v.kind) {
    case ValueKind::Num:
      return v.n == v2.n;
    case ValueKind::Prim:
      if (v.op != v2.op || bool(v.partial) != bool(v2.partial)) return false;
      return !v.partial || approx_value(F, *v.partial, *v2.partial);
    case ValueKind::Clo:
      return approx_expr(*v.lam, *v2.lam) && approx_env(F, v.env, v2.env);
    case ValueKind::Grd:
      return F(v.a1) == v2.a1 && F(v.a2) == v2.a2;
    case ValueKind::Arr:
      return v.arr->pos == v2.arr->pos && v.arr->neg == v2.arr->neg && F(v.a1) == v2.a1 &&
             F(v.a2) == v2.a2;
    case ValueKind::Opaque:
      return false;
  }
  return false;
}

namespace {

bool approx_post(const AbstractionMap& F, const PostValue& w, const PostValue& w2) {
  return approx_value(F, w.v, w2.v);
}

bool approx_control(const AbstractionMap& F, const Control& c, const Control& c2) {
  if (c.kind != c2.kind) return false;
  switch (c.kind) {
    case ControlKind::Eval:
      return approx_expr(*c.expr, *c2.expr) && approx_env(F, c.env, c2.env);
    case ControlKind::Val:
      return approx_post(F, c.w, c2.w);
    case ControlKind::Apply:
      return c.label == c2.label && approx_post(F, c.w, c2.w) && approx_post(F, c.arg, c2.arg);
    case ControlKind::Blame:
      return c.blame == c2.blame;
  }
  return false;
}

bool approx_opt_expr(const ExprPtr& e, const ExprPtr& e2) {
  if (!e || !e2) return !e && !e2;
  return approx_expr(*e, *e2);
}

bool approx_frame(const AbstractionMap& F, const Frame& f, const Frame& f2) {
  if (f.kind != f2.kind || f.app != f2.app || f.pos != f2.pos || f.neg != f2.neg) return false;
  if (!approx_opt_expr(f.expr, f2.expr)) return false;
  if (!approx_env(F, f.env, f2.env)) return false;
  if (!approx_post(F, f.w, f2.w) || !approx_post(F, f.w2, f2.w2)) return false;
  if (bool(f.pending) != bool(f2.pending)) return false;
  return !f.pending || approx_control(F, *f.pending, *f2.pending);
}

bool approx_kont(const AbstractionMap& F, const Kont& k, const Kont& k2) {
  FrameList a = k.frames, b = k2.frames;
  for (; a && b; a = a->next, b = b->next) {
    if (!approx_frame(F, a->frame, b->frame)) return false;
  }
  if (a || b) return false;
  if (bool(k.rest) != bool(k2.rest)) return false;
  if (!k.rest) return true;
  return k.rest->ctx == k2.rest->ctx && approx_opt_expr(k.rest->body, k2.rest->body) &&
         approx_env(F, k.rest->env, k2.rest->env);
}

bool approx_cache(const AbstractionMap& F, const Cache& m, const Cache& m2) {
  if (!m2) return true;
  for (const auto& [x, w2] : m2->entries) {
    if (!w2) continue;
    const PostValue* w = cache_get(m, x);
    if (!w || !approx_post(F, *w, *w2)) return false;
  }
  return true;
}

bool approx_pc(const PathCondition& pc, const PathCondition& pc2) {
  // concrete runs record no facts
  if (pc_size(pc) == 0) return true;
  if (!pc2) return true;
  for (const auto& fact : pc2->facts) {
    if (!pc_contains(pc, *fact)) return false;
  }
  return true;
}

bool approx_store(const AbstractionMap& F, StoreView sigma, StoreView sigma2) {
  if (!sigma.store) return true;
  static const ValueSet kLeak{Value::opaque()};
  for (const auto& [a, vs] : sigma.store->map) {
    Addr b = F(a);
    const ValueSet* vs2 = sigma2.find(b);
    if (!vs2 && b.is_leak()) vs2 = &kLeak;
    if (!vs2) return false;
    for (const auto& v : vs) {
      bool found = std::any_of(vs2->begin(), vs2->end(),
                               [&](const Value& v2) { return approx_value(F, v, v2); });
      if (!found) return false;
    }
  }
  return true;
}

bool restricted_kont(const AbstractionMap& F, const Kont& k) {
  for (FrameList f = k.frames; f; f = f->next) {
    if (!restricted(F, f->frame.env)) return false;
    for (const PostValue* w : {&f->frame.w, &f->frame.w2}) {
      if (w->v.kind == ValueKind::Clo && !restricted(F, w->v.env)) return false;
    }
  }
  return !k.rest || restricted(F, k.rest->env);
}

}  // namespace

bool approx_state(const AbstractionMap& F, const MachineState& s, StoreView sigma,
                  const MachineState& s2, StoreView sigma2) {
  if (!approx_store(F, sigma, sigma2)) return false;
  // unknown code running on the concrete side stands for one opaque application
  if (s2.control.kind == ControlKind::Apply && s2.control.w.v.is_opaque() &&
      restricted_kont(F, s.kont)) {
    return true;
  }
  return approx_control(F, s.control, s2.control) && approx_cache(F, s.cache, s2.cache) &&
         approx_pc(s.pc, s2.pc) && approx_kont(F, s.kont, s2.kont);
}

// ---------------------------------------------------------------------------
// instantiation

int count_holes(const Expr& e) {
  if (e.kind == ExprKind::Opq) return 1;
  int n = 0;
  for (const auto& k : e.kids) n += count_holes(*k);
  for (const auto& b : e.bindings) n += count_holes(*b.init);
  return n;
}

namespace {

ExprPtr fill_into(const ExprPtr& e, const Filling& fill, std::size_t& next) {
  if (e->kind == ExprKind::Opq) return fill.at(next++);
  if (e->kids.empty()) return e;
  std::vector<ExprPtr> kids;
  kids.reserve(e->kids.size());
  bool changed = false;
  for (const auto& k : e->kids) {
    kids.push_back(fill_into(k, fill, next));
    changed = changed || kids.back() != k;
  }
  return changed ? mk::with_kids(*e, std::move(kids)) : e;
}

const PrimOp kSurfacePrims[] = {PrimOp::IntP,  PrimOp::ProcP, PrimOp::ZeroP,     PrimOp::Add1,
                                PrimOp::Sub1,  PrimOp::Plus,  PrimOp::Minus,     PrimOp::Times,
                                PrimOp::Div,   PrimOp::NumEq, PrimOp::Lt,        PrimOp::Le,
                                PrimOp::EvenP, PrimOp::OddP,  PrimOp::PositiveP};

class OGen {
 public:
  OGen(std::mt19937_64& rng, std::string prefix) : rng_(rng), prefix_(std::move(prefix)) {}

  ExprPtr value(int budget) {
    budget_ = budget;
    switch (pick(6)) {
      case 0:
        return num();
      case 1:
        return prim();
      default:
        return lam({});
    }
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  ExprPtr num() { return mk::num(std::uniform_int_distribution<int>(-3, 3)(rng_)); }
  ExprPtr prim() { return mk::prim(kSurfacePrims[pick(std::size(kSurfacePrims))]); }
  std::string fresh() { return prefix_ + std::to_string(counter_++); }
  ExprPtr app(ExprPtr f, ExprPtr a) { return mk::app(std::move(f), std::move(a), Label::opaque()); }

  ExprPtr lam(std::vector<std::string> scope) {
    std::string x = fresh();
    scope.push_back(x);
    --budget_;
    return mk::lam(x, body(scope), {});
  }

  ExprPtr var(const std::vector<std::string>& scope) { return mk::ref(scope[pick(int(scope.size()))]); }

  ExprPtr body(const std::vector<std::string>& scope) {
    if (budget_ <= 0) return pick(3) ? var(scope) : num();
    --budget_;
    switch (pick(12)) {
      case 0:
        return num();
      case 1:
        return prim();
      case 2:
      case 3:
        return var(scope);
      case 4:
        return lam(scope);
      case 5: {
        // self-application
        ExprPtr x = var(scope);
        return app(x, x);
      }
      case 6:
      case 7:
        return app(body(scope), body(scope));
      case 8:
        return mk::if_(body(scope), body(scope), body(scope));
      case 9:
        return mk::set(scope[pick(int(scope.size()))], body(scope));
      default: {
        // a local binding the body may mutate
        std::string y = fresh();
        ExprPtr init = body(scope);
        auto inner = scope;
        inner.push_back(y);
        ExprPtr b = pick(2) ? mk::if_(mk::set(y, body(inner)), body(inner), mk::num(0)) : body(inner);
        return app(mk::lam(y, b), init);
      }
    }
  }

  std::mt19937_64& rng_;
  std::string prefix_;
  int counter_ = 0;
  int budget_ = 0;
};

}  // namespace

ExprPtr fill_holes(const ExprPtr& e, const Filling& fill) {
  std::size_t next = 0;
  return fill_into(e, fill, next);
}

ExprPtr gen_oexpr_value(std::mt19937_64& rng, int size_budget, const std::string& prefix) {
  return OGen(rng, prefix).value(size_budget);
}

Filling gen_filling(const Expr& e, std::mt19937_64& rng, int size_budget) {
  Filling fill;
  int n = count_holes(e);
  for (int i = 0; i < n; ++i) fill.push_back(gen_oexpr_value(rng, size_budget, "%o" + std::to_string(i) + "_"));
  return fill;
}

ExprPtr instantiate(const ExprPtr& e, std::uint64_t seed, int size_budget) {
  std::mt19937_64 rng(seed);
  return fill_holes(e, gen_filling(*e, rng, size_budget));
}

int count_nodes(const Expr& e) {
  int n = 1;
  for (const auto& k : e.kids) n += count_nodes(*k);
  for (const auto& b : e.bindings) n += count_nodes(*b.init);
  return n;
}

// ---------------------------------------------------------------------------
// program generators

namespace {

class SurfaceGen {
 public:
  SurfaceGen(std::mt19937_64& rng, bool holes) : rng_(rng), holes_(holes) {}

  std::string program() {
    std::ostringstream os;
    std::vector<std::string> scope;
    if (pick(5) < 3) {
      os << "(define n " << small() << ")\n";
      scope.push_back("n");
    }
    int defs = 1 + pick(2);
    for (int i = 0; i < defs; ++i) {
      std::string f = "f" + std::to_string(i);
      std::string x = fresh("x");
      auto inner = scope;
      inner.push_back(x);
      if (pick(3) < 2) {
        os << "(define/contract (" << f << " " << x << ") " << contract(2, scope) << "\n  "
           << expr(3, inner) << ")\n";
      } else {
        os << "(define (" << f << " " << x << ")\n  " << expr(3, inner) << ")\n";
      }
      scope.push_back(f);
    }
    std::string main = expr(3, scope);
    if (holes_ && holes_made_ == 0) {
      main = "(begin " + main + " (• " + scope.back() + "))";
    } else if (holes_ && pick(2)) {
      main = "(let ([h (• " + scope[pick(int(scope.size()))] + ")]) (if (proc? h) (h " +
             expr(1, scope) + ") " + main + "))";
    }
    os << main << "\n";
    return os.str();
  }

 private:
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }
  int small() { return std::uniform_int_distribution<int>(-3, 3)(rng_); }
  std::string fresh(const std::string& b) { return b + std::to_string(counter_++); }

  std::string hole() {
    ++holes_made_;
    return "•";
  }

  std::string leaf(const std::vector<std::string>& scope) {
    int k = pick(10);
    if (holes_ && k == 0) return hole();
    if (k < 6 && !scope.empty()) return scope[pick(int(scope.size()))];
    if (k == 6) return std::string(prim_name(kSurfacePrims[pick(std::size(kSurfacePrims))]));
    return std::to_string(small());
  }

  std::string contract(int depth, const std::vector<std::string>& scope) {
    static const char* flat[] = {"int?", "even?", "positive?", "proc?", "odd?"};
    int k = depth > 0 ? pick(8) : pick(5);
    if (k < 4) return flat[pick(5)];
    if (k == 4) return "(λ (r) (<= r " + std::to_string(small()) + "))";
    if (k == 5 && !scope.empty()) {
      // a predicate closing over transparent state
      return "(λ (r) (<= r " + scope[pick(int(scope.size()))] + "))";
    }
    std::string v = fresh("v");
    auto inner = scope;
    inner.push_back(v);
    std::string rng = pick(2) ? contract(depth - 1, inner) : "(λ (r) (<= " + v + " r))";
    return "(->d " + contract(depth - 1, scope) + " " + v + " " + rng + ")";
  }

  std::string expr(int depth, const std::vector<std::string>& scope) {
    if (depth <= 0) return leaf(scope);
    static const char* unary[] = {"add1", "sub1", "zero?", "even?", "int?", "proc?", "positive?"};
    static const char* binary[] = {"+", "-", "*", "/", "<", "<=", "="};
    int d = depth - 1;
    switch (pick(16)) {
      case 0:
      case 1:
        return leaf(scope);
      case 2: {
        std::string x = fresh("y");
        auto inner = scope;
        inner.push_back(x);
        return "(λ (" + x + ") " + expr(d, inner) + ")";
      }
      case 3:
      case 4:
        return "(" + expr(d, scope) + " " + expr(d, scope) + ")";
      case 5:
        return std::string("(") + unary[pick(7)] + " " + expr(d, scope) + ")";
      case 6:
        return std::string("(") + binary[pick(7)] + " " + expr(d, scope) + " " + expr(d, scope) + ")";
      case 7:
      case 8:
        return "(if " + expr(d, scope) + " " + expr(d, scope) + " " + expr(d, scope) + ")";
      case 9:
        if (scope.empty()) return leaf(scope);
        return "(set! " + scope[pick(int(scope.size()))] + " " + expr(d, scope) + ")";
      case 10:
      case 11: {
        std::string x = fresh("z");
        std::string init = expr(d, scope);
        auto inner = scope;
        inner.push_back(x);
        return "(let ([" + x + " " + init + "]) " + expr(d, inner) + ")";
      }
      case 12:
        return "(begin " + expr(d, scope) + " " + expr(d, scope) + ")";
      case 13: {
        static const char* parties[] = {"p", "q"};
        int i = pick(2);
        return std::string("(mon ") + parties[i] + " " + parties[1 - i] + " " + contract(1, scope) + " " +
               expr(d, scope) + ")";
      }
      default:
        if (holes_) return "(" + hole() + " " + expr(d, scope) + ")";
        return leaf(scope);
    }
  }

  std::mt19937_64& rng_;
  bool holes_;
  int counter_ = 0;
  int holes_made_ = 0;
};

}  // namespace

std::string gen_hole_program(std::mt19937_64& rng) { return SurfaceGen(rng, true).program(); }

std::string gen_closed_program(std::mt19937_64& rng, int max_nodes) {
  for (;;) {
    std::string text = SurfaceGen(rng, false).program();
    if (count_nodes(*load_program(text)) <= max_nodes) return text;
  }
}

// ---------------------------------------------------------------------------
// differential testing

AnalysisResult run_concrete(const ExprPtr& program, std::uint64_t steps) {
  EngineConfig cfg;
  cfg.policy = AllocPolicy::Concrete;
  cfg.step_budget = steps;
  cfg.use_solver = false;
  return run_fixpoint(program, cfg);
}

namespace {

using Parties = std::set<std::pair<std::string, std::string>>;

// The first concrete blame outside `symbolic`, if any.
std::optional<BlameInfo> missing_blame(const AnalysisResult& r, const Parties& symbolic) {
  for (const auto& b : r.blames) {
    if (!b.blame.pos.is_transparent()) continue;
    if (!symbolic.count({b.blame.pos.name, b.blame.neg.name})) return b.blame;
  }
  return std::nullopt;
}

// Replaces hole values by simpler ones while the violation persists.
Filling shrink(const ExprPtr& program, Filling fill, const Parties& symbolic, std::uint64_t steps) {
  auto still_fails = [&](const Filling& f) {
    AnalysisResult r = run_concrete(fill_holes(program, f), steps);
    return !r.inconclusive && missing_blame(r, symbolic).has_value();
  };
  const std::vector<ExprPtr> simpler = {mk::num(0), mk::num(1),
                                        mk::lam("%s", mk::ref("%s")),
                                        mk::lam("%s", mk::num(0))};
  for (std::size_t i = 0; i < fill.size(); ++i) {
    for (const auto& cand : simpler) {
      if (count_nodes(*cand) >= count_nodes(*fill[i])) continue;
      Filling next = fill;
      next[i] = cand;
      if (still_fails(next)) {
        fill = std::move(next);
        break;
      }
    }
  }
  return fill;
}

}  // namespace

DiffReport differential_check(const ExprPtr& program, const DiffConfig& cfg) {
  DiffReport rep;
  AnalysisResult sym = run_fixpoint(program, cfg.symbolic);
  rep.symbolic = sym.blame_parties();
  if (sym.inconclusive) {
    rep.symbolic_conclusive = false;
    return rep;
  }
  std::mt19937_64 rng(cfg.seed);
  for (int t = 0; t < cfg.trials; ++t) {
    Filling fill = gen_filling(*program, rng, cfg.size_budget);
    ExprPtr inst = fill_holes(program, fill);
    if (!approx_expr(*inst, *program)) ++rep.approx_failures;
    AnalysisResult r = run_concrete(inst, cfg.concrete_steps);
    ++rep.trials_run;
    if (r.inconclusive) {
      ++rep.skipped;
      continue;
    }
    if (!r.blames.empty()) ++rep.concrete_blames;
    auto miss = missing_blame(r, rep.symbolic);
    if (!miss) continue;
    if (cfg.shrink) {
      fill = shrink(program, fill, rep.symbolic, cfg.concrete_steps);
      inst = fill_holes(program, fill);
      AnalysisResult again = run_concrete(inst, cfg.concrete_steps);
      if (auto m = missing_blame(again, rep.symbolic)) miss = m;
    }
    rep.violations.push_back({print(program), inst, *miss, rep.symbolic});
  }
  return rep;
}

namespace {

struct Attempt {
  std::string text;
  DiffReport report;
};

Attempt run_attempt(const FuzzConfig& cfg, int index) {
  std::seed_seq seq{std::uint64_t(cfg.seed), std::uint64_t(index)};
  std::mt19937_64 rng(seq);
  Attempt a;
  a.text = gen_hole_program(rng);
  DiffConfig d = cfg.diff;
  d.seed = rng();
  d.symbolic.step_budget = cfg.symbolic_steps;
  a.report = differential_check(load_program(a.text), d);
  for (auto& v : a.report.violations) v.program = a.text;
  return a;
}

// Folds attempts in index order until enough conclusive programs are seen.
bool absorb(FuzzReport& rep, const FuzzConfig& cfg, Attempt& a) {
  if (rep.programs >= cfg.programs) return false;
  if (!a.report.symbolic_conclusive) {
    ++rep.inconclusive;
    return true;
  }
  ++rep.programs;
  rep.trials += a.report.trials_run;
  rep.skipped += a.report.skipped;
  rep.concrete_blames += a.report.concrete_blames;
  rep.approx_failures += a.report.approx_failures;
  for (auto& v : a.report.violations) rep.violations.push_back(std::move(v));
  return rep.programs < cfg.programs;
}

}  // namespace

FuzzReport fuzz_serial(const FuzzConfig& cfg) {
  FuzzReport rep;
  for (int i = 0; i < cfg.max_attempts; ++i) {
    Attempt a = run_attempt(cfg, i);
    if (!absorb(rep, cfg, a)) break;
  }
  return rep;
}

FuzzReport fuzz_parallel(const FuzzConfig& cfg) {
  FuzzReport rep;
  int next = 0;
  while (next < cfg.max_attempts && rep.programs < cfg.programs) {
    int batch = std::min(cfg.max_attempts - next, std::max(1, cfg.programs - rep.programs));
    std::vector<Attempt> results(batch);
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < batch; ++i) results[i] = run_attempt(cfg, next + i);
    next += batch;
    for (auto& a : results) {
      if (!absorb(rep, cfg, a)) break;
    }
  }
  return rep;
}

std::string counterexample_text(const Counterexample& c) {
  std::ostringstream os;
  os << "; soundness counterexample\n";
  os << "; concrete blame: " << c.blame.pos.name << " (by " << c.blame.neg.name << ") at "
     << c.blame.where.str() << "\n";
  os << "; symbolic blame set:";
  for (const auto& [p, n] : c.symbolic) os << " (" << p << ", " << n << ")";
  os << "\n; hole program:\n";
  std::istringstream lines(c.program);
  for (std::string line; std::getline(lines, line);) os << ";   " << line << "\n";
  os << print(c.instantiated) << "\n";
  return os.str();
}

}  // namespace scv
