#pragma once

#include "scv/feasibility.hpp"
#include "scv/semantics.hpp"

namespace scv {

// A single-store environment with fresh allocation, enough to drive step()
// by hand along one path.
class MiniEnv : public StepEnv {
 public:
  explicit MiniEnv(const ExprPtr& program, bool record_facts = false)
      : info_(analyze_program(program)), feas_(config(record_facts)) {
    store_.map[Addr::leak()] = {Value::opaque()};
  }

  const ValueSet& read(const MachineState&, const Addr& a) override {
    const ValueSet* vs = store_.find(a);
    return vs ? *vs : empty_;
  }
  const std::vector<Kont>& read_kont(const KontAddr& a) override {
    auto it = kstore_.map.find(a);
    return it == kstore_.map.end() ? no_konts_ : it->second;
  }
  Addr alloc_var(VarId x, std::uint32_t) override { return {AddrKind::Var, x, ++stamp_}; }
  Addr alloc_site(std::uint64_t key, std::uint32_t) override { return {AddrKind::Site, key, ++stamp_}; }
  std::uint32_t transfer(std::uint32_t h, const Label&, const Expr&) override { return h; }
  std::uint32_t havoc_ctx(const MachineState&) override { return 1; }
  bool should_rerun(const MachineState&, const Value&) override { return true; }
  Feasibility& feasibility() override { return feas_; }
  const ProgramInfo& program() const override { return *info_; }
  int sym_depth() const override { return 4; }

  void commit(const Successor& x) {
    for (const auto& w : x.writes) {
      if (w.strong) store_.map[w.addr] = {w.value};
      else value_set_insert(store_.map[w.addr], w.value);
    }
    for (const auto& kw : x.kont_writes) kstore_.insert(kw.addr, kw.kont);
  }

  ValueStore store_;

 private:
  static FeasibilityConfig config(bool record_facts) {
    FeasibilityConfig c;
    c.use_solver = false;
    c.record_facts = record_facts;
    return c;
  }

  std::shared_ptr<const ProgramInfo> info_;
  Feasibility feas_;
  KontStore kstore_;
  ValueSet empty_;
  std::vector<Kont> no_konts_;
  std::uint32_t stamp_ = 0;
};

}  // namespace scv
