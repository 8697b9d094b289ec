#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "scv/machine.hpp"

namespace scv {

enum class SolverVerdict { Sat, Unsat, Unknown };
const char* verdict_name(SolverVerdict v);

// SMT-LIB assertions over the sort V. `decls` names constants of sort V.
struct Formula {
  std::vector<std::string> decls;
  std::vector<std::string> asserts;

  std::string text() const;  // canonical body (no datatype declaration)
};

// Incremental translation state: one constant per variable, fresh constants
// for existentialized subterms.
class Translator {
 public:
  std::string term(const Expr& e);
  void assert_nonzero(const Expr& e);
  Formula take() { return std::move(f_); }

 private:
  std::string fresh(const char* tag);
  std::string var(const std::string& name);
  std::string prim_app(PrimOp op, const Expr& arg);
  std::string prim_app2(PrimOp op, const Expr& a, const Expr& b);

  Formula f_;
  std::unordered_map<std::string, std::string> vars_;
  int next_ = 0;
};

Formula translate_pc(const PathCondition& pc);
// Translates a single expression; side declarations land in `out`.
std::string translate_expr(const Expr& e, Formula& out);

// The datatype declaration shared by all queries.
extern const char* const kValueSortDecl;

// A long-lived solver child process speaking SMT-LIB over pipes.
class SolverSession {
 public:
  explicit SolverSession(std::string path, int timeout_ms = 5000);
  ~SolverSession();
  SolverSession(const SolverSession&) = delete;
  SolverSession& operator=(const SolverSession&) = delete;

  bool alive() const { return pid_ > 0; }
  SolverVerdict check(const Formula& f);
  const std::string& last_error() const { return error_; }

 private:
  bool start();
  void stop();
  bool send(const std::string& s);
  std::optional<std::string> read_line();

  std::string path_;
  int timeout_ms_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  std::string error_;
  bool starting_ = false;
};

// The solver binary: $SCV_SOLVER if set, else "z3".
std::string default_solver_path();

// The fact recorded in φ when `pred` is assumed of a value named `s`.
ExprPtr encode(PrimOp pred, const ExprPtr& s);

// Sound, incomplete contradiction detection without a solver.
bool syntactically_infeasible(const PathCondition& pc);

struct FeasibilityConfig {
  bool use_solver = true;
  std::string solver_path;  // empty: default_solver_path()
  int sym_depth = 4;
  int timeout_ms = 5000;
  bool record_facts = true;  // false: decided tests leave φ unchanged
};

struct FeasibilityStats {
  std::uint64_t queries = 0;
  std::uint64_t solver_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t pruned = 0;
};

class Feasibility {
 public:
  explicit Feasibility(FeasibilityConfig cfg = {});
  ~Feasibility();

  // feasible(φ, pred, w, φ′): nullopt when the path is infeasible, else φ′.
  std::optional<PathCondition> feasible(const PathCondition& pc, PrimOp pred, const PostValue& w);

  // Vocabulary predicates that φ forces on the value named `sym`.
  Refinements implied_refinements(const PathCondition& pc, const ExprPtr& sym, Refinements known);

  // Satisfiability of φ alone (syntactic check, then the solver if enabled).
  SolverVerdict check_pc(const PathCondition& pc);

  SolverVerdict solver_check(const Formula& f);

  bool solver_active() const { return session_ && session_->alive(); }
  const FeasibilityConfig& config() const { return cfg_; }
  const FeasibilityStats& stats() const { return stats_; }

 private:
  FeasibilityConfig cfg_;
  std::unique_ptr<SolverSession> session_;
  std::unordered_map<std::string, SolverVerdict> cache_;
  FeasibilityStats stats_;
  bool warned_ = false;
};

}  // namespace scv
