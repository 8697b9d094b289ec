#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "scv/abstraction.hpp"
#include "scv/havoc.hpp"

using namespace scv;

namespace {

struct Heap {
  ValueStore store;
  ValueSet empty;
  StoreReader reader() {
    return [this](const Addr& a) -> const ValueSet& {
      const ValueSet* vs = store.find(a);
      return vs ? *vs : empty;
    };
  }
};

Addr var_addr(const char* name, std::uint32_t ctx = 0) { return {AddrKind::Var, intern_var(name), ctx}; }

Value closure_over(const char* x, const Addr& a) {
  static const ExprPtr lam = mk::lam("h", mk::ref("h"));
  return Value::clo(lam, env_extend(env_empty(), intern_var(x), a), pc_empty());
}

// a1 holds a closure over a2; a2 holds a guard whose domain lives at a3.
struct ThreeCells {
  Heap heap;
  Addr a1 = var_addr("c1"), a2 = var_addr("c2"), a3{AddrKind::Site, 48, 0}, a4{AddrKind::Site, 49, 0};
  Value root;
  ThreeCells() {
    heap.store.map[a1] = {closure_over("c2", a2)};
    heap.store.map[a2] = {Value::grd(a3, a4)};
    heap.store.map[a3] = {Value::prim(PrimOp::IntP)};
    heap.store.map[a4] = {Value::num(0)};
    heap.store.map[var_addr("unrelated")] = {Value::num(9)};
    root = closure_over("c1", a1);
  }
};

std::string corpus(const std::string& name) {
  std::ifstream in(std::string(SCV_CORPUS_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("leaking a value twice keeps one entry") {
  ValueSet leak{Value::opaque()};
  CHECK(value_set_insert(leak, Value::num(5)));
  CHECK(!value_set_insert(leak, Value::num(5)));
  CHECK(leak.size() == 2);
}

TEST_CASE("reachable slice follows closures and contracts") {
  ThreeCells t;
  auto slice = reachable_slice(t.root, t.heap.reader());
  std::vector<Addr> want{t.a1, t.a2, t.a3, t.a4};
  std::sort(want.begin(), want.end());
  CHECK(slice == want);
  CHECK(reachable_slice(Value::num(3), t.heap.reader()).empty());

  Value leaky = closure_over("l", Addr::leak());
  CHECK(reachable_slice(leaky, t.heap.reader()).empty());
}

TEST_CASE("fingerprint sees exactly the reachable slice") {
  ThreeCells t;
  Fingerprint before = fingerprint(t.root, t.heap.reader());
  t.heap.store.map[var_addr("unrelated")] = {Value::num(10)};
  CHECK(fingerprint(t.root, t.heap.reader()) == before);
  value_set_insert(t.heap.store.map[t.a4], Value::num(1));
  CHECK(!(fingerprint(t.root, t.heap.reader()) == before));
}

TEST_CASE("should_rerun") {
  ThreeCells t;
  HavocMemo memo;
  CHECK(memo.should_rerun(t.root, t.heap.reader()));
  CHECK(!memo.should_rerun(t.root, t.heap.reader()));
  CHECK(memo.hits() == 1);
  // a set! widened a reachable cell
  t.heap.store.map[t.a3] = {Value::opaque(ref::kProc)};
  CHECK(memo.should_rerun(t.root, t.heap.reader()));
  CHECK(memo.size() == 1);
}

TEST_CASE("a pure leaked function is explored once, then filtered") {
  EngineConfig cfg;
  auto r = run_fixpoint(load_program("(define (id x) x) (• id)"), cfg);
  CHECK(r.verified());
  CHECK(r.memo_hits >= 1);
}

TEST_CASE("havoc reaches the stateful errors") {
  EngineConfig cfg;
  for (bool memo : {true, false}) {
    cfg.havoc_memo = memo;
    auto f13 = run_fixpoint(load_program(corpus("fig13.lms")), cfg);
    CHECK(f13.blame_parties() == std::set<std::pair<std::string, std::string>>{{"f", "Λ"}});
    auto f14 = run_fixpoint(load_program(corpus("fig14.lms")), cfg);
    CHECK(f14.blame_parties() == std::set<std::pair<std::string, std::string>>{{"app", "Λ"}});
    for (const auto& b : f13.blames) CHECK(b.blame.pos.is_transparent());
    for (const auto& b : f14.blames) CHECK(b.blame.pos.is_transparent());
  }
}
