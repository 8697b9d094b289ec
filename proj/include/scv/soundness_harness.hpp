#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scv/abstraction.hpp"
#include "scv/machine.hpp"

namespace scv {

// ---------------------------------------------------------------------------
// approximation

// Maps concrete addresses to addresses of the symbolic run. Anything not in
// the map stands for unknown code and maps to the leak address.
struct AbstractionMap {
  std::map<Addr, Addr> map;
  bool identity = false;

  Addr operator()(const Addr& a) const;
  static AbstractionMap id() { return {{}, true}; }
};

// Holds when `e` may stand for `e2`: structural agreement, with • standing for
// numbers, primitives and closed λs over the instantiation grammar.
bool approx_expr(const Expr& e, const Expr& e2);

// Instantiation grammar: no •, no monitors, every application labelled ℓ•.
bool is_oexpr(const Expr& e);

struct StoreView {
  const ValueStore* store = nullptr;
  const ValueSet* find(const Addr& a) const { return store ? store->find(a) : nullptr; }
};

// Every address reached from `env` maps to the leak address under F.
bool restricted(const AbstractionMap& F, const Env& env);

bool approx_value(const AbstractionMap& F, const Value& v, const Value& v2);

bool approx_state(const AbstractionMap& F, const MachineState& s, StoreView sigma,
                  const MachineState& s2, StoreView sigma2);

// ---------------------------------------------------------------------------
// instantiation

// One value per hole, in left-to-right traversal order.
using Filling = std::vector<ExprPtr>;

int count_holes(const Expr& e);
ExprPtr fill_holes(const ExprPtr& e, const Filling& fill);

// A closed value of the instantiation grammar: a number in -3..3, a primitive,
// or a λ whose body may re-apply its parameter, mutate its own lets and
// self-apply.
ExprPtr gen_oexpr_value(std::mt19937_64& rng, int size_budget, const std::string& prefix = "%o");

Filling gen_filling(const Expr& e, std::mt19937_64& rng, int size_budget);

ExprPtr instantiate(const ExprPtr& e, std::uint64_t seed, int size_budget);

// ---------------------------------------------------------------------------
// program generators

// Surface text with definitions, contracts, mutation and at least one •.
std::string gen_hole_program(std::mt19937_64& rng);

// Surface text without •, at most `max_nodes` core nodes after loading.
std::string gen_closed_program(std::mt19937_64& rng, int max_nodes);

int count_nodes(const Expr& e);

// ---------------------------------------------------------------------------
// differential testing

struct Counterexample {
  std::string program;   // the hole program as loaded
  ExprPtr instantiated;
  BlameInfo blame;       // concrete blame missing from the symbolic set
  std::set<std::pair<std::string, std::string>> symbolic;
};

struct DiffConfig {
  int trials = 20;
  std::uint64_t seed = 1;
  int size_budget = 12;
  std::uint64_t concrete_steps = 50'000;
  EngineConfig symbolic;
  bool shrink = true;
};

struct DiffReport {
  bool symbolic_conclusive = true;
  std::set<std::pair<std::string, std::string>> symbolic;
  int trials_run = 0;
  int skipped = 0;          // concrete run hit the step cap
  int concrete_blames = 0;  // trials that blamed transparent code
  int approx_failures = 0;  // instantiations rejected by approx_expr
  std::vector<Counterexample> violations;
};

// Concrete reference run of a hole-free program.
AnalysisResult run_concrete(const ExprPtr& program, std::uint64_t steps);

DiffReport differential_check(const ExprPtr& program, const DiffConfig& cfg);

struct FuzzConfig {
  int programs = 200;
  std::uint64_t seed = 1;
  DiffConfig diff;
  std::uint64_t symbolic_steps = 200'000;
  int max_attempts = 1000;  // generated programs, including inconclusive ones
};

struct FuzzReport {
  int programs = 0;      // conclusive programs checked
  int inconclusive = 0;  // symbolic run over budget, not counted
  int trials = 0;
  int skipped = 0;
  int concrete_blames = 0;
  int approx_failures = 0;
  std::vector<Counterexample> violations;
};

FuzzReport fuzz_serial(const FuzzConfig& cfg);
// Same result as fuzz_serial; programs are checked in parallel when OpenMP is
// available.
FuzzReport fuzz_parallel(const FuzzConfig& cfg);

std::string counterexample_text(const Counterexample& c);

}  // namespace scv
