#include <doctest.h>

#include "oracles.hpp"
#include "scv/abstraction.hpp"
#include "scv/primitives.hpp"
#include "scv/soundness_harness.hpp"

using namespace scv;

TEST_CASE("δ examples") {
  CHECK(delta(PrimOp::IntP, Value::num(5)) == ValueSet{Value::num(1)});
  ValueSet both = delta(PrimOp::IntP, Value::opaque());
  CHECK(both.size() == 2);
  CHECK(value_set_contains(both, Value::num(0)));
  CHECK(value_set_contains(both, Value::num(1)));
  CHECK(delta(PrimOp::Add1, Value::num(3)) == ValueSet{Value::num(4)});

  ValueSet inc = delta(PrimOp::Add1, Value::opaque(ref::kInt));
  REQUIRE(inc.size() == 1);
  CHECK(inc[0].is_opaque());
  CHECK((inc[0].refs & ref::kInt));
}

TEST_CASE("add1 on an opaque integer covers every sampled integer") {
  ValueSet abs = delta(PrimOp::Add1, Value::opaque(ref::kInt));
  for (int n = -50; n <= 50; ++n) CHECK(oracle::covered(delta_concrete(PrimOp::Add1, Value::num(n)), abs));
}

TEST_CASE("δ on concrete values is a function") {
  for (const auto& v : oracle::small_universe()) {
    for (auto op : oracle::unary_ops()) CHECK(delta(op, v).size() == 1);
    for (auto op : oracle::binary_ops()) {
      for (const auto& w : oracle::small_universe()) CHECK(delta2(op, v, w).size() == 1);
    }
  }
}

TEST_CASE("δ refinement transfer is sound over the small universe") {
  oracle::Tally t = oracle::delta_soundness();
  CHECK(t.checked > 1000);
  CHECK_MESSAGE(t.violations == 0, t.first);
}

TEST_CASE("arith_transfer is sound on sampled integers") {
  for (auto op : {PrimOp::Add1, PrimOp::Sub1, PrimOp::Plus, PrimOp::Minus, PrimOp::Times}) {
    for (auto ra : oracle::all_refinement_sets()) {
      if (refinements_inconsistent(ra) || !(close_refinements(ra) & ref::kInt)) continue;
      for (auto rb : oracle::all_refinement_sets()) {
        if (refinements_inconsistent(rb) || !(close_refinements(rb) & ref::kInt)) continue;
        Refinements out = arith_transfer(op, ra, rb);
        for (int a = -6; a <= 6; ++a) {
          if (!oracle::models(Value::num(a), ra)) continue;
          for (int b = -6; b <= 6; ++b) {
            if (!oracle::models(Value::num(b), rb)) continue;
            Value c = prim_arity(op) == 2 ? delta2_concrete(op, Value::num(a), Value::num(b))
                                          : delta_concrete(op, Value::num(a));
            CHECK(oracle::models(c, out));
          }
        }
      }
    }
  }
}

TEST_CASE("refinement implications") {
  CHECK((close_refinements(ref::kEven) & ref::kInt));
  CHECK((close_refinements(ref::kPositive) & ref::kInt));
  CHECK((close_refinements(ref::kZero) & ref::kEven));
  CHECK(refinements_inconsistent(ref::kEven | ref::kOdd));
  CHECK(refinements_inconsistent(ref::kInt | ref::kProc));
  CHECK(refinements_inconsistent(ref::kZero | ref::kPositive));
  CHECK(!refinements_inconsistent(ref::kEven | ref::kPositive));
}

TEST_CASE("guarded primitives") {
  auto run = [](const char* src) { return run_concrete(load_program(src), 100000); };

  auto bad = run("(add1 proc?)");
  REQUIRE(bad.blames.size() == 1);
  CHECK(bad.blames[0].blame.pos.name == "main");
  CHECK(bad.blames[0].blame.neg == Label::language());

  auto ok = run("(/ 6 2)");
  REQUIRE(ok.answers.size() == 1);
  CHECK(ok.answers[0].v == Value::num(3));

  auto zero = run("(define (caller x) (/ 6 x)) (caller 0)");
  REQUIRE(zero.blames.size() == 1);
  CHECK(zero.blames[0].blame.pos.name == "caller");
  CHECK(zero.blames[0].blame.neg == Label::language());

  auto env = standard_env();
  CHECK(!env.empty());
  for (const auto& [op, e] : env) {
    CHECK(prim_is_guarded(op));
    CHECK(e->kind == ExprKind::Mon);
    CHECK(e->label == Label::language());
  }
}
