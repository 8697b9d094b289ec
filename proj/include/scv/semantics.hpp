#pragma once

#include <cstdint>
#include <vector>

#include "scv/feasibility.hpp"
#include "scv/machine.hpp"

namespace scv {

struct StoreWrite {
  Addr addr;
  Value value;
  bool strong = false;  // set!: replaces the set under concrete allocation
};

struct KontWrite {
  KontAddr addr;
  Kont kont;
};

struct Successor {
  MachineState state;
  std::vector<StoreWrite> writes;
  std::vector<KontWrite> kont_writes;
};

// What step needs from the surrounding engine: store reads (which the engine
// may record as dependencies), allocation, and the havoc memo.
class StepEnv {
 public:
  virtual ~StepEnv() = default;
  virtual const ValueSet& read(const MachineState& s, const Addr& a) = 0;
  virtual const std::vector<Kont>& read_kont(const KontAddr& a) = 0;
  virtual Addr alloc_var(VarId x, std::uint32_t history) = 0;
  virtual Addr alloc_site(std::uint64_t key, std::uint32_t history) = 0;
  // History after recording a transfer from call site `site` to `body`.
  virtual std::uint32_t transfer(std::uint32_t history, const Label& site, const Expr& body) = 0;
  // Context for the kont address of a havoc segment.
  virtual std::uint32_t havoc_ctx(const MachineState& s) = 0;
  virtual bool should_rerun(const MachineState& s, const Value& leaked) = 0;
  virtual Feasibility& feasibility() = 0;
  virtual const ProgramInfo& program() const = 0;
  virtual int sym_depth() const = 0;
};

// ap(s, s′): the reconstructed application, or ∅.
ExprPtr ap(const ExprPtr& fn, const ExprPtr& arg, int max_depth);

// lit(u, ρ, φ) for a value literal node.
PostValue lit(const ExprPtr& u, const Env& env, const PathCondition& pc, const ProgramInfo& info);

// All successors of `s`; empty for final states.
std::vector<Successor> step(const MachineState& s, StepEnv& env);

}  // namespace scv
