#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "scv/abstraction.hpp"
#include "scv/soundness_harness.hpp"

using namespace scv;

namespace {

std::string corpus(const std::string& name) {
  std::ifstream in(std::string(SCV_CORPUS_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("alloc") {
  std::uint32_t stamp = 0;
  VarId z = intern_var("z");
  Addr a = alloc(AddrKind::Var, z, 3, AllocPolicy::Abstract, stamp);
  Addr b = alloc(AddrKind::Var, z, 3, AllocPolicy::Abstract, stamp);
  CHECK(a == b);
  CHECK(!(alloc(AddrKind::Var, z, 4, AllocPolicy::Abstract, stamp) == a));
  Addr c = alloc(AddrKind::Var, z, 3, AllocPolicy::Concrete, stamp);
  Addr d = alloc(AddrKind::Var, z, 3, AllocPolicy::Concrete, stamp);
  CHECK(!(c == d));
}

TEST_CASE("transfer sets are interned") {
  TransferSets ts;
  ExprPtr body = mk::num(1);
  ExprPtr other = mk::num(2);
  Label site = Label::transparent("main");
  std::uint32_t h1 = ts.add(0, site, *body);
  CHECK(ts.add(0, site, *body) == h1);
  CHECK(ts.add(h1, site, *body) == h1);
  std::uint32_t h2 = ts.add(h1, site, *other);
  CHECK(h2 != h1);
  CHECK(ts.add(ts.add(0, site, *other), site, *body) == h2);
}

TEST_CASE("kont addresses") {
  ExprPtr body = mk::num(1);
  Env e1 = env_extend(env_empty(), intern_var("x"), Addr{AddrKind::Var, intern_var("x"), 1});
  Env e2 = env_extend(env_empty(), intern_var("x"), Addr{AddrKind::Var, intern_var("x"), 2});
  CHECK(KontAddr{body, e1, 0} == KontAddr{body, e1, 0});
  CHECK(!(KontAddr{body, e1, 0} == KontAddr{body, e2, 0}));
}

TEST_CASE("widen examples") {
  CHECK(widen({Value::num(2)}, Value::num(2)) == ValueSet{Value::num(2)});
  ValueSet w = widen({Value::num(2)}, Value::num(4));
  REQUIRE(w.size() == 1);
  CHECK(w[0] == Value::opaque(ref::kInt | ref::kEven | ref::kPositive));
  ValueSet e = widen({Value::opaque(ref::kInt | ref::kEven)}, Value::num(6));
  REQUIRE(e.size() == 1);
  CHECK(close_refinements(e[0].refs) == close_refinements(ref::kInt | ref::kEven));
  ValueSet mixed = widen({Value::opaque(ref::kInt)}, oracle::identity_closure());
  bool covers_both = oracle::covered(Value::num(3), mixed) && oracle::covered(oracle::identity_closure(), mixed);
  CHECK(covers_both);
}

TEST_CASE("widening concretization is sound over the small universe") {
  oracle::Tally t = oracle::widening_soundness();
  CHECK(t.checked > 1000);
  CHECK_MESSAGE(t.violations == 0, t.first);
}

TEST_CASE("run_fixpoint examples") {
  EngineConfig cfg;
  auto fact = run_fixpoint(load_program(corpus("fig3.lms")), cfg);
  CHECK(fact.verified());

  auto f2b = run_fixpoint(load_program(corpus("fig2b.lms")), cfg);
  CHECK(f2b.blame_parties() == std::set<std::pair<std::string, std::string>>{{"f", "•"}});

  EngineConfig conc;
  conc.policy = AllocPolicy::Concrete;
  auto line = run_fixpoint(load_program("(let ([a 3]) (+ a (* 2 a)))"), conc);
  REQUIRE(line.answers.size() == 1);
  CHECK(line.answers[0].v == Value::num(9));
  CHECK(line.blames.empty());
}

TEST_CASE("abstract blames include concrete blames on closed programs") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 100; ++i) {
    ExprPtr prog = load_program(gen_closed_program(rng, 60));
    AnalysisResult conc = run_concrete(prog, 50000);
    if (conc.inconclusive) continue;
    EngineConfig cfg;
    AnalysisResult abs = run_fixpoint(prog, cfg);
    REQUIRE(!abs.inconclusive);
    for (const auto& p : conc.blame_parties()) CHECK(abs.blame_parties().count(p));
  }
}
