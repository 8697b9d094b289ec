#include "scv/abstraction.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "scv/havoc.hpp"
#include "scv/primitives.hpp"
#include "scv/semantics.hpp"

namespace scv {

std::set<std::pair<std::string, std::string>> AnalysisResult::blame_parties() const {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& b : blames) out.emplace(b.blame.pos.name, b.blame.neg.name);
  return out;
}

namespace {

bool numeric(const Value& v) { return v.is_num() || v.is_opaque(); }

Refinements shared_refinements(const ValueSet& s) {
  Refinements r = 0xff;
  for (const auto& v : s) r &= concrete_refinements(v);
  return close_refinements(r);
}

}  // namespace

bool widen_into(ValueSet& s, const Value& v) {
  if (value_set_contains(s, v)) return false;
  ValueSet nums{v}, rest;
  if (!numeric(v)) nums.clear();
  if (v.kind == ValueKind::Prim && v.partial) {
    for (auto it = s.begin(); it != s.end(); ++it) {
      if (it->kind == ValueKind::Prim && it->op == v.op && it->partial) {
        ValueSet firsts{*it->partial};
        widen_into(firsts, *v.partial);
        Value merged = Value::prim_partial(v.op, firsts.front());
        if (merged == *it) return false;
        s.erase(it);
        return widen_into(s, merged) || true;
      }
    }
  }
  for (const auto& w : s) (numeric(w) ? nums : rest).push_back(w);
  if (nums.size() > 1) nums = {Value::opaque(shared_refinements(nums))};
  rest.insert(rest.end(), nums.begin(), nums.end());
  if (!numeric(v)) rest.push_back(v);
  bool changed = rest.size() != s.size();
  if (!changed) {
    for (const auto& w : rest) {
      if (!value_set_contains(s, w)) changed = true;
    }
  }
  s = std::move(rest);
  return changed;
}

Addr alloc(AddrKind kind, std::uint64_t key, std::uint32_t history, AllocPolicy policy, std::uint32_t& stamp) {
  return {kind, key, policy == AllocPolicy::Concrete ? ++stamp : history};
}

ValueSet widen(const ValueSet& old, const Value& v) {
  ValueSet s = old;
  widen_into(s, v);
  return s;
}

TransferSets::TransferSets() {
  sets_.emplace_back();
  ids_.emplace(Key{}, 0);
}

std::uint32_t TransferSets::add(std::uint32_t h, const Label& site, const Expr& body) {
  Key k = sets_.at(h);
  std::pair<std::string, std::uint32_t> t{site.name, body.id};
  auto pos = std::lower_bound(k.begin(), k.end(), t);
  if (pos != k.end() && *pos == t) return h;
  k.insert(pos, t);
  auto [it, fresh] = ids_.try_emplace(k, static_cast<std::uint32_t>(sets_.size()));
  if (fresh) sets_.push_back(std::move(k));
  return it->second;
}

namespace {

constexpr std::uint32_t kHavocCtx = 1;

class Engine final : public StepEnv {
 public:
  Engine(const ExprPtr& program, const EngineConfig& cfg)
      : cfg_(cfg), info_(analyze_program(program)), feas_(feasibility_config(cfg)) {}

  AnalysisResult run(const ExprPtr& program) {
    MachineState init = load(program);
    Value opaque = Value::opaque();
    if (concrete()) {
      auto store = std::make_shared<ValueStore>();
      store->map[Addr::leak()] = {opaque};
      init.store = store;
    } else {
      store_.map[Addr::leak()] = {opaque};
    }
    enqueue_new(init);
    while (!work_.empty()) {
      if (result_.steps >= cfg_.step_budget) {
        result_.inconclusive = true;
        break;
      }
      std::uint32_t i = work_.back();
      work_.pop_back();
      queued_[i] = false;
      process(i);
    }
    std::sort(result_.blames.begin(), result_.blames.end(),
              [](const BlameReport& a, const BlameReport& b) { return a.blame < b.blame; });
    result_.explored_states = states_.size();
    result_.checks = info_->checks;
    result_.solver = feas_.stats();
    result_.memo_hits = memo_.hits();
    return std::move(result_);
  }

  // ---- StepEnv ---------------------------------------------------------

  const ValueSet& read(const MachineState& s, const Addr& a) override {
    if (concrete()) {
      const ValueSet* vs = s.store ? s.store->find(a) : nullptr;
      return vs ? *vs : empty_;
    }
    deps_[a].insert(current_);
    const ValueSet* vs = store_.find(a);
    return vs ? *vs : empty_;
  }

  const std::vector<Kont>& read_kont(const KontAddr& a) override {
    kdeps_[a].insert(current_);
    auto it = kstore_.map.find(a);
    return it == kstore_.map.end() ? no_konts_ : it->second;
  }

  Addr alloc_var(VarId x, std::uint32_t history) override {
    return alloc(AddrKind::Var, x, history, cfg_.policy, stamp_);
  }

  Addr alloc_site(std::uint64_t key, std::uint32_t history) override {
    return alloc(AddrKind::Site, key, history, cfg_.policy, stamp_);
  }

  std::uint32_t transfer(std::uint32_t history, const Label& site, const Expr& body) override {
    if (concrete()) return 0;
    return transfers_.add(history, site, body);
  }

  std::uint32_t havoc_ctx(const MachineState&) override { return kHavocCtx; }

  bool should_rerun(const MachineState& s, const Value& leaked) override {
    if (!cfg_.havoc_memo || concrete()) return true;
    return memo_.should_rerun(leaked, [&](const Addr& a) -> const ValueSet& { return read(s, a); });
  }

  Feasibility& feasibility() override { return feas_; }
  const ProgramInfo& program() const override { return *info_; }
  int sym_depth() const override { return cfg_.sym_depth; }

 private:
  static FeasibilityConfig feasibility_config(const EngineConfig& cfg) {
    FeasibilityConfig f;
    bool concrete = cfg.policy == AllocPolicy::Concrete;
    f.use_solver = cfg.use_solver && !concrete;
    f.solver_path = cfg.solver_path;
    f.sym_depth = cfg.sym_depth;
    f.timeout_ms = cfg.solver_timeout_ms;
    f.record_facts = !concrete;
    return f;
  }

  bool concrete() const { return cfg_.policy == AllocPolicy::Concrete; }

  void wake(const std::unordered_set<std::uint32_t>& readers) {
    for (std::uint32_t r : readers) {
      if (!queued_[r]) {
        queued_[r] = true;
        work_.push_back(r);
      }
    }
  }

  void enqueue_new(MachineState s) {
    if (!concrete()) {
      auto [it, fresh] = index_.try_emplace(s, static_cast<std::uint32_t>(states_.size()));
      if (!fresh) return;
    }
    states_.push_back(std::move(s));
    queued_.push_back(true);
    work_.push_back(static_cast<std::uint32_t>(states_.size() - 1));
  }

  void finish(const MachineState& s) {
    if (s.control.kind == ControlKind::Blame) {
      const BlameInfo& b = s.control.blame;
      if (!b.pos.is_transparent()) return;
      for (const auto& r : result_.blames) {
        if (r.blame == b) return;
      }
      result_.blames.push_back({b, s.pc});
    } else {
      for (const auto& w : result_.answers) {
        if (w.v == s.control.w.v) return;
      }
      result_.answers.push_back(s.control.w);
    }
  }

  void apply_writes(Successor& x) {
    if (concrete()) {
      if (!x.writes.empty()) {
        auto store = std::make_shared<ValueStore>(*x.state.store);
        for (const auto& w : x.writes) {
          ValueSet& vs = store->map[w.addr];
          if (w.strong && !w.addr.is_leak()) vs.clear();
          value_set_insert(vs, w.value);
        }
        x.state.store = std::move(store);
      }
    } else {
      for (const auto& w : x.writes) {
        if (widen_into(store_.map[w.addr], w.value)) {
          auto it = deps_.find(w.addr);
          if (it != deps_.end()) wake(it->second);
        }
      }
    }
    for (const auto& kw : x.kont_writes) {
      if (kstore_.insert(kw.addr, kw.kont)) {
        auto it = kdeps_.find(kw.addr);
        if (it != kdeps_.end()) wake(it->second);
      }
    }
  }

  void process(std::uint32_t i) {
    current_ = i;
    MachineState s = states_[i];
    if (cfg_.trace) {
      *cfg_.trace << i << ": " << print_control(s.control) << " | " << print_kont(s.kont) << " | φ=" << print_pc(s.pc)
                  << " m=" << print_cache(s.cache) << '\n';
    }
    if (s.is_final()) {
      finish(s);
      return;
    }
    ++result_.steps;
    auto next = step(s, *this);
    for (auto& x : next) {
      apply_writes(x);
      if (!concrete()) x.state.store.reset();
      enqueue_new(std::move(x.state));
    }
    if (concrete()) states_[i].store.reset();
  }

  EngineConfig cfg_;
  std::shared_ptr<const ProgramInfo> info_;
  Feasibility feas_;
  HavocMemo memo_;
  TransferSets transfers_;
  ValueStore store_;
  KontStore kstore_;
  std::unordered_map<Addr, std::unordered_set<std::uint32_t>, AddrHash> deps_;
  std::unordered_map<KontAddr, std::unordered_set<std::uint32_t>, KontAddrHash> kdeps_;
  std::vector<MachineState> states_;
  std::unordered_map<MachineState, std::uint32_t, StateHash> index_;
  std::vector<bool> queued_;
  std::vector<std::uint32_t> work_;
  std::uint32_t current_ = 0;
  std::uint32_t stamp_ = 0;
  AnalysisResult result_;
  const ValueSet empty_{};
  const std::vector<Kont> no_konts_{};
};

}  // namespace

AnalysisResult run_fixpoint(const ExprPtr& program, const EngineConfig& cfg) {
  Engine engine(program, cfg);
  return engine.run(program);
}

}  // namespace scv
