#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "scv/feasibility.hpp"

using namespace scv;

namespace {

ExprPtr bin(PrimOp op, ExprPtr a, ExprPtr b) {
  auto l = Label::language();
  return mk::app(mk::app(mk::prim(op), std::move(a), l), std::move(b), l);
}
ExprPtr un(PrimOp op, ExprPtr a) { return mk::app(mk::prim(op), std::move(a), Label::language()); }

bool has_solver() {
  FeasibilityConfig c;
  Feasibility f(c);
  return f.solver_active();
}

}  // namespace

TEST_CASE("translate_pc") {
  Formula one = translate_pc(pc_from({mk::ref("x")}));
  REQUIRE(one.asserts.size() == 1);
  CHECK(one.asserts[0].find("Int 0") != std::string::npos);
  CHECK(translate_pc(pc_empty()).asserts.empty());
}

TEST_CASE("translate_expr") {
  Formula f;
  CHECK(translate_expr(*mk::num(7), f) == "(Int 7)");
  Formula g;
  std::string lam = translate_expr(*mk::lam("x", mk::ref("x")), g);
  CHECK(std::find(g.decls.begin(), g.decls.end(), lam) != g.decls.end());
  REQUIRE(g.asserts.size() == 1);
  CHECK(g.asserts[0].find("Lam") != std::string::npos);
  Formula h;
  std::string opq = translate_expr(*mk::app(mk::opq(), mk::ref("y"), Label::opaque()), h);
  CHECK(std::find(h.decls.begin(), h.decls.end(), opq) != h.decls.end());
}

TEST_CASE("feasible examples") {
  FeasibilityConfig cfg;
  Feasibility feas(cfg);
  auto five = feas.feasible(pc_empty(), PrimOp::NonzeroP, {Value::num(5), mk::num(5)});
  REQUIRE(five);

  auto proc_zero = feas.feasible(pc_empty(), PrimOp::ZeroP, {Value::opaque(ref::kProc), nullptr});
  CHECK(!proc_zero);

  ExprPtr x = mk::ref("x");
  PathCondition pc = pc_from({bin(PrimOp::Le, mk::num(1), x)});
  auto lt = feas.feasible(pc, PrimOp::NonzeroP, {Value::opaque(), bin(PrimOp::Lt, x, mk::num(1))});
  if (has_solver()) CHECK(!lt);
}

TEST_CASE("solver verdicts") {
  if (!has_solver()) return;
  FeasibilityConfig cfg;
  Feasibility feas(cfg);
  CHECK(feas.solver_check(Formula{}) == SolverVerdict::Sat);

  ExprPtr x = mk::ref("x");
  CHECK(feas.check_pc(pc_from({un(PrimOp::ZeroP, x), x})) == SolverVerdict::Unsat);

  // nonlinear products are existentialized, so the formula stays satisfiable
  ExprPtr sq = bin(PrimOp::NumEq, bin(PrimOp::Times, x, x), mk::num(2));
  CHECK(feas.check_pc(pc_from({sq})) != SolverVerdict::Unsat);
}

TEST_CASE("syntactic contradiction without a solver") {
  ExprPtr x = mk::ref("x");
  CHECK(syntactically_infeasible(pc_from({un(PrimOp::ZeroP, x), x})));
  CHECK(!syntactically_infeasible(pc_from({x})));
}

TEST_CASE("every pruning is confirmed by brute force") {
  for (bool solver : {true, false}) {
    oracle::PcTally t = oracle::feasibility_soundness(300, 11, solver);
    CHECK(t.queries == 300);
    CHECK_MESSAGE(t.unsound == 0, t.first);
  }
}

TEST_CASE("weaker path conditions prune less") {
  oracle::PcGenerator gen(5);
  FeasibilityConfig cfg;
  Feasibility feas(cfg);
  for (int i = 0; i < 150; ++i) {
    oracle::PcQuery q = gen.next();
    // machine states only ever carry satisfiable path conditions
    if (!oracle::brute_force_sat(q.facts, q.symbols)) continue;
    PostValue w{Value::opaque(), q.subject};
    std::vector<ExprPtr> prefix;
    bool earlier_pruned = false;
    for (const auto& f : q.facts) {
      prefix.push_back(f);
      bool pruned = !feas.feasible(pc_from(prefix), q.pred, w);
      // once a prefix prunes, every longer one must too
      if (earlier_pruned) CHECK(pruned);
      earlier_pruned = earlier_pruned || pruned;
    }
  }
}
