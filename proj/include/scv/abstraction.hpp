#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scv/feasibility.hpp"
#include "scv/machine.hpp"

namespace scv {

enum class AllocPolicy { Concrete, Abstract };

struct EngineConfig {
  AllocPolicy policy = AllocPolicy::Abstract;
  int sym_depth = 4;
  std::uint64_t step_budget = 1'000'000;
  bool use_solver = true;
  std::string solver_path;
  int solver_timeout_ms = 5000;
  bool havoc_memo = true;
  std::ostream* trace = nullptr;  // one line per explored state
};

struct BlameReport {
  BlameInfo blame;
  PathCondition witness;
};

struct AnalysisResult {
  std::vector<BlameReport> blames;  // transparent positive party only, sorted
  std::vector<PostValue> answers;
  std::uint64_t explored_states = 0;
  std::uint64_t steps = 0;
  bool inconclusive = false;  // step budget exhausted
  int checks = 0;             // monitors in the program
  FeasibilityStats solver;
  std::uint64_t memo_hits = 0;

  bool verified() const { return blames.empty() && !inconclusive; }
  // (positive, negative) party names of every blame.
  std::set<std::pair<std::string, std::string>> blame_parties() const;
};

// Adds `v` to `s` with the abstract widening: numbers and opaque values
// collapse to one opaque value carrying the vocabulary predicates they share,
// and curried primitives with the same operator merge their first argument.
// Returns true if `s` changed.
bool widen_into(ValueSet& s, const Value& v);
ValueSet widen(const ValueSet& old, const Value& v);

// An address for `key`: tagged with the transfer set under abstract
// allocation, with a fresh stamp under concrete allocation.
Addr alloc(AddrKind kind, std::uint64_t key, std::uint32_t history, AllocPolicy policy, std::uint32_t& stamp);

// Transfer sets: interned sets of (call-site label, callee body) pairs.
class TransferSets {
 public:
  TransferSets();
  std::uint32_t add(std::uint32_t h, const Label& site, const Expr& body);
  std::size_t size() const { return sets_.size(); }

 private:
  using Key = std::vector<std::pair<std::string, std::uint32_t>>;
  std::vector<Key> sets_;
  std::map<Key, std::uint32_t> ids_;
};

AnalysisResult run_fixpoint(const ExprPtr& program, const EngineConfig& cfg);

}  // namespace scv
