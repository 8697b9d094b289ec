#include <doctest.h>

#include <random>

#include "mini_env.hpp"
#include "reference_eval.hpp"
#include "scv/abstraction.hpp"
#include "scv/semantics.hpp"
#include "scv/soundness_harness.hpp"

using namespace scv;

namespace {

struct DriveResult {
  MachineState final;
  bool deterministic = true;
  bool progress = true;
  bool finished = false;
};

DriveResult drive(const ExprPtr& program, std::uint64_t steps) {
  MiniEnv env(program);
  DriveResult r;
  MachineState s = load(program);
  for (std::uint64_t i = 0; i < steps; ++i) {
    if (s.is_final()) {
      r.finished = true;
      break;
    }
    auto succ = step(s, env);
    if (succ.empty()) {
      r.progress = false;
      break;
    }
    if (succ.size() != 1) r.deterministic = false;
    env.commit(succ[0]);
    s = succ[0].state;
  }
  r.final = s;
  return r;
}

Frame if_frame(const ExprPtr& node) {
  Frame f;
  f.kind = FrameKind::If;
  f.expr = node;
  f.env = env_empty();
  rehash(f);
  return f;
}

}  // namespace

TEST_CASE("lit") {
  ProgramInfo info;
  PostValue five = lit(mk::num(5), env_empty(), pc_empty(), info);
  CHECK(five.v == Value::num(5));
  REQUIRE(five.sym);
  CHECK(five.sym->kind == ExprKind::Num);
  CHECK(five.sym->num == 5);

  PostValue hole = lit(mk::opq(), env_empty(), pc_empty(), info);
  CHECK(hole.v == Value::opaque());
  CHECK(!hole.sym);

  ExprPtr id = alpha_rename(mk::lam("x", mk::ref("x")));
  auto pinfo = analyze_program(id);
  PostValue clo = lit(id, env_empty(), pc_empty(), *pinfo);
  CHECK(clo.v.kind == ValueKind::Clo);
  CHECK(clo.v.lam == id);
  REQUIRE(clo.sym);
  CHECK(expr_equal(*clo.sym, *id));
}

TEST_CASE("ap builds symbolic applications up to the depth limit") {
  ExprPtr add1 = mk::prim(PrimOp::Add1);
  ExprPtr x = mk::ref("x");
  ExprPtr s = ap(add1, x, 4);
  REQUIRE(s);
  CHECK(s->kind == ExprKind::App);
  CHECK(s->kid(0).op == PrimOp::Add1);
  CHECK(s->kid(1).var == "x");
  CHECK(!ap(nullptr, x, 4));
  CHECK(!ap(add1, nullptr, 4));

  // four add1 around x reach depth 5, one past the limit
  ExprPtr chain = x;
  int built = 0;
  while (chain && built < 10) {
    chain = ap(add1, chain, 4);
    ++built;
  }
  CHECK(!chain);
  CHECK(built == 4);
}

TEST_CASE("lookup: cache hit, then the store without names") {
  ExprPtr prog = alpha_rename(mk::lam("x", mk::ref("x")));
  MiniEnv env(prog);
  VarId x = prog->var_id;
  ExprPtr ref = prog->kids[0];

  Addr a{AddrKind::Var, x, 7};
  Env rho = env_extend(env_empty(), x, a);
  env.store_.map[a] = {Value::num(2), Value::num(4)};

  MachineState s = load(ref);
  s.control = Control::eval(ref, rho);
  s.cache = cache_set(cache_empty(), x, PostValue{Value::num(5), ref});
  auto hit = step(s, env);
  REQUIRE(hit.size() == 1);
  CHECK(hit[0].state.control.w.v == Value::num(5));
  CHECK(hit[0].state.control.w.sym == ref);

  s.cache = cache_set(cache_empty(), x, std::nullopt);
  auto miss = step(s, env);
  REQUIRE(miss.size() == 2);
  for (const auto& m : miss) CHECK(!m.state.control.w.sym);

  s.cache = cache_empty();
  env.store_.map[a] = {Value::opaque(ref::kInt)};
  auto absent = step(s, env);
  REQUIRE(absent.size() == 1);
  CHECK(absent[0].state.control.w.v == Value::opaque(ref::kInt));
  CHECK(!absent[0].state.control.w.sym);
}

TEST_CASE("distr focuses the first subterm") {
  ExprPtr prog = load_program("((λ (f) (f 1)) add1)");
  MiniEnv env(prog);
  auto s = step(load(prog), env);
  REQUIRE(s.size() == 1);
  CHECK(s[0].state.control.kind == ControlKind::Eval);
  CHECK(s[0].state.control.expr == prog->kids[0]);
  REQUIRE(s[0].state.kont.top());
  CHECK(s[0].state.kont.top()->kind == FrameKind::AppArg);

  ExprPtr cond = load_program("(if 1 2 3)");
  auto c = step(load(cond), env);
  REQUIRE(c.size() == 1);
  CHECK(c[0].state.kont.top()->kind == FrameKind::If);

  ExprPtr mon = load_program("(mon f g int? 5)");
  auto m = step(load(mon), env);
  REQUIRE(m.size() == 1);
  CHECK(m[0].state.control.expr == mon->kids[0]);
}

TEST_CASE("an opaque test splits the path condition") {
  ExprPtr node = mk::if_(mk::opq(), mk::num(1), mk::num(2));
  MiniEnv env(node, true);
  ExprPtr x = mk::ref("x");
  MachineState s = load(node);
  s.control = Control::val({Value::opaque(), x});
  s.kont = Kont{}.push(if_frame(node));
  auto succ = step(s, env);
  REQUIRE(succ.size() == 2);
  std::set<std::int64_t> branches;
  for (const auto& n : succ) {
    branches.insert(n.state.control.expr->num);
    ExprPtr fact = encode(n.state.control.expr->num == 1 ? PrimOp::NonzeroP : PrimOp::ZeroP, x);
    CHECK(pc_contains(n.state.pc, *fact));
    CHECK(pc_size(n.state.pc) >= pc_size(s.pc));
  }
  CHECK(branches == std::set<std::int64_t>{1, 2});
}

TEST_CASE("applying an opaque function leaks the argument") {
  ExprPtr prog = load_program("(• 5)");
  MiniEnv env(prog);
  MachineState s = load(prog);
  s.control = Control::apply({Value::opaque(), nullptr}, {Value::num(5), mk::num(5)}, Label::opaque(), {});
  auto succ = step(s, env);
  bool returned = false, leaked = false;
  for (const auto& n : succ) {
    if (n.state.control.kind == ControlKind::Val && n.state.control.w.v == Value::opaque() &&
        !n.state.control.w.sym)
      returned = true;
    for (const auto& w : n.writes) {
      if (w.addr.is_leak() && w.value == Value::num(5)) leaked = true;
    }
  }
  CHECK(returned);
  CHECK(leaked);
}

TEST_CASE("monitor golden outcomes") {
  auto run = [](const char* src) { return run_concrete(load_program(src), 100000); };

  auto flat_ok = run("(mon f g int? 5)");
  REQUIRE(flat_ok.answers.size() == 1);
  CHECK(flat_ok.answers[0].v == Value::num(5));
  CHECK(flat_ok.blames.empty());

  auto flat_bad = run("(mon f g int? add1)");
  REQUIRE(flat_bad.blames.size() == 1);
  CHECK(flat_bad.blames[0].blame.pos.name == "f");
  CHECK(flat_bad.blames[0].blame.neg.name == "g");

  auto dom_bad = run("((mon f g (->d int? x int?) add1) proc?)");
  REQUIRE(dom_bad.blames.size() == 1);
  CHECK(dom_bad.blames[0].blame.pos.name == "g");
  CHECK(dom_bad.blames[0].blame.neg.name == "f");

  auto rng_bad = run("((mon f g (->d int? x (λ (r) (< x r))) sub1) 3)");
  REQUIRE(rng_bad.blames.size() == 1);
  CHECK(rng_bad.blames[0].blame.pos.name == "f");
}

TEST_CASE("concrete stepping is deterministic and agrees with the reference evaluator") {
  std::mt19937_64 rng(2024);
  int compared = 0;
  for (int i = 0; i < 200; ++i) {
    ExprPtr prog = load_program(gen_closed_program(rng, 60));
    DriveResult d = drive(prog, 20000);
    CHECK(d.progress);
    CHECK(d.deterministic);

    ref_eval::Evaluator ev(20000);
    ref_eval::Outcome want = ev.run(*prog);
    if (!d.finished || want.out_of_fuel) continue;
    ++compared;
    const Control& c = d.final.control;
    if (want.blame) {
      REQUIRE(c.kind == ControlKind::Blame);
      CHECK(c.blame.pos == want.blame->pos);
      CHECK(c.blame.neg == want.blame->neg);
    } else {
      REQUIRE(c.kind == ControlKind::Val);
      if (want.value->kind == ref_eval::RKind::Num) {
        CHECK(c.w.v == Value::num(want.value->n));
      } else {
        CHECK(c.w.v.is_procedure());
      }
    }
  }
  CHECK(compared >= 150);
}

TEST_CASE("concrete cache agrees with the store") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 100; ++i) {
    ExprPtr prog = load_program(gen_closed_program(rng, 60));
    MiniEnv env(prog);
    MachineState s = load(prog);
    for (int n = 0; n < 5000 && !s.is_final(); ++n) {
      auto succ = step(s, env);
      REQUIRE(succ.size() == 1);
      env.commit(succ[0]);
      s = succ[0].state;
      if (s.control.kind != ControlKind::Eval || !s.cache) continue;
      for (const auto& [x, w] : s.cache->entries) {
        if (!w) continue;
        const Addr* a = env_find(s.control.env, x);
        if (!a) continue;
        const ValueSet* vs = env.store_.find(*a);
        REQUIRE(vs);
        REQUIRE(vs->size() == 1);
        CHECK(vs->front() == w->v);
      }
    }
  }
}
