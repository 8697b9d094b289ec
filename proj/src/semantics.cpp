#include "scv/semantics.hpp"

#include <algorithm>
#include <stdexcept>

#include "scv/primitives.hpp"

namespace scv {

ExprPtr ap(const ExprPtr& fn, const ExprPtr& arg, int max_depth) {
  if (!fn || !arg) return nullptr;
  if (1 + std::max(fn->depth, arg->depth) > max_depth) return nullptr;
  return mk::app(fn, arg, Label::language());
}

namespace {

bool mentions(const Expr& hay, const Expr& needle) {
  if (hay.hash == needle.hash && expr_equal(hay, needle)) return true;
  for (const auto& k : hay.kids) {
    if (mentions(*k, needle)) return true;
  }
  return false;
}

bool mentions_var(const Expr& e, const std::vector<VarId>& vars) {
  if (e.kind == ExprKind::Ref && std::binary_search(vars.begin(), vars.end(), e.var_id)) return true;
  for (const auto& k : e.kids) {
    if (mentions_var(*k, vars)) return true;
  }
  return false;
}

bool pc_mentions_any(const PathCondition& pc, const std::vector<VarId>& vars) {
  if (!pc) return false;
  for (const auto& f : pc->facts) {
    if (mentions_var(*f, vars)) return true;
  }
  return false;
}

PathCondition closure_pc(const PathCondition& pc, const std::vector<VarId>& free) {
  if (!pc || pc->facts.empty() || free.empty()) return pc_empty();
  std::vector<ExprPtr> keep;
  for (const auto& f : pc->facts) {
    if (mentions_var(*f, free)) keep.push_back(f);
  }
  if (keep.size() == pc->facts.size()) return pc;
  return pc_from(std::move(keep));
}

PostValue refined(const PostValue& w, Refinements add) {
  if (!w.v.is_opaque() || !add) return w;
  Refinements r = close_refinements(w.v.refs | add);
  if (r == w.v.refs || refinements_inconsistent(r)) return w;
  return {Value::opaque(r), w.sym};
}

// Refines every cache entry whose symbolic name is `sym`.
Cache refine_cache(const Cache& m, const ExprPtr& sym, Refinements add) {
  if (!sym || !add || !m) return m;
  auto entries = m->entries;
  bool changed = false;
  for (auto& [x, w] : entries) {
    if (!w || !w->sym || !w->v.is_opaque()) continue;
    if (!expr_equal(*w->sym, *sym)) continue;
    PostValue r = refined(*w, add);
    if (!(r.v == w->v)) {
      w = r;
      changed = true;
    }
  }
  return changed ? cache_from(std::move(entries)) : m;
}

Cache invalidate_mutable(const Cache& m, const ProgramInfo& info) {
  if (!m) return m;
  auto entries = m->entries;
  bool changed = false;
  for (auto& [x, w] : entries) {
    if (w && info.is_mutable(x)) {
      w.reset();
      changed = true;
    }
  }
  return changed ? cache_from(std::move(entries)) : m;
}

// Restores `saved` at a return point: entries of mutable variables survive only
// if the callee left them untouched.
Cache restore_cache(const Cache& saved, const Cache& current, const ProgramInfo& info, const VarId* param) {
  if (!saved) return saved;
  auto entries = saved->entries;
  bool changed = false;
  for (auto& [x, w] : entries) {
    if (!w) continue;
    if (param && x == *param) continue;
    if (!info.is_mutable(x)) continue;
    const PostValue* now = cache_get(current, x);
    if (!now || !(*now == *w)) {
      w.reset();
      changed = true;
    }
  }
  return changed ? cache_from(std::move(entries)) : saved;
}

const PostValue kOpaque{Value::opaque(), nullptr};

class Stepper {
 public:
  Stepper(const MachineState& s, StepEnv& env) : s_(s), env_(env), info_(env.program()) {}

  std::vector<Successor> run() {
    switch (s_.control.kind) {
      case ControlKind::Blame: break;
      case ControlKind::Eval: eval(s_.control.expr, s_.control.env); break;
      case ControlKind::Val: value(s_.control.w); break;
      case ControlKind::Apply:
        apply(s_.control.w, s_.control.arg, s_.control.label, s_.control.pos, s_.kont);
        break;
    }
    return std::move(out_);
  }

 private:
  Successor& emit(Control c, const Kont& k) {
    Successor x;
    x.state = s_;
    x.state.control = std::move(c);
    x.state.kont = k;
    out_.push_back(std::move(x));
    return out_.back();
  }

  static Frame frame(FrameKind k) {
    Frame f;
    f.kind = k;
    return f;
  }

  // ---- Eval ------------------------------------------------------------

  void eval(const ExprPtr& e, const Env& rho) {
    const Kont& k = s_.kont;
    switch (e->kind) {
      case ExprKind::Num:
      case ExprKind::Prim:
      case ExprKind::Opq:
      case ExprKind::Lam:
        emit(Control::val(lit(e, rho, s_.pc, info_)), k);
        return;
      case ExprKind::Ref: {
        if (const PostValue* w = cache_get(s_.cache, e->var_id)) {
          emit(Control::val(*w), k);
          return;
        }
        const Addr* a = env_find(rho, e->var_id);
        if (!a) throw std::logic_error("unbound variable at runtime: " + e->var);
        ValueSet vs = env_.read(s_, *a);
        for (const auto& v : vs) emit(Control::val({v, nullptr}), k);
        return;
      }
      case ExprKind::App: {
        Frame f = frame(FrameKind::AppArg);
        f.expr = e->kids[1];
        f.env = rho;
        f.app = e->label;
        f.app_pos = e->pos;
        emit(Control::eval(e->kids[0], rho), k.push(std::move(f)));
        return;
      }
      case ExprKind::If: {
        Frame f = frame(FrameKind::If);
        f.expr = e;
        f.env = rho;
        emit(Control::eval(e->kids[0], rho), k.push(std::move(f)));
        return;
      }
      case ExprKind::Set: {
        Frame f = frame(FrameKind::SetTo);
        f.expr = e;
        f.env = rho;
        emit(Control::eval(e->kids[0], rho), k.push(std::move(f)));
        return;
      }
      case ExprKind::DepCon: {
        Frame f = frame(FrameKind::GrdDom);
        f.expr = e;
        f.env = rho;
        emit(Control::eval(e->kids[0], rho), k.push(std::move(f)));
        return;
      }
      case ExprKind::Mon: {
        Frame f = frame(FrameKind::MonCon);
        f.pos = e->label;
        f.neg = e->neg;
        f.where = e->pos;
        f.site = site::base(*e);
        f.pending = std::make_shared<const Control>(Control::eval(e->kids[1], rho));
        emit(Control::eval(e->kids[0], rho), k.push(std::move(f)));
        return;
      }
      default:
        throw std::logic_error("surface form reached the machine: " + print(e));
    }
  }

  // ---- Val: pop a frame --------------------------------------------------

  void value(const PostValue& w) {
    const Kont& k = s_.kont;
    if (k.empty_frames()) {
      if (!k.rest) return;  // final
      for (const Kont& next : env_.read_kont(*k.rest)) emit(Control::val(w), next);
      return;
    }
    const Frame& f = *k.top();
    Kont rest = k.pop();
    switch (f.kind) {
      case FrameKind::AppArg: {
        Frame g = frame(FrameKind::AppFun);
        g.w = w;
        g.app = f.app;
        g.app_pos = f.app_pos;
        emit(Control::eval(f.expr, f.env), rest.push(std::move(g)));
        return;
      }
      case FrameKind::AppFun:
        apply(f.w, w, f.app, f.app_pos, rest);
        return;
      case FrameKind::If:
        branch(f, w, rest);
        return;
      case FrameKind::SetTo: {
        const Expr& node = *f.expr;
        const Addr* a = env_find(f.env, node.var_id);
        if (!a) throw std::logic_error("set! of unbound variable " + node.var);
        Successor& x = emit(Control::val({Value::num(1), nullptr}), rest);
        x.state.cache = cache_set(s_.cache, node.var_id, w);
        x.writes.push_back({*a, w.v, true});
        return;
      }
      case FrameKind::GrdDom: {
        const Expr& node = *f.expr;
        std::uint64_t b = site::base(node);
        Addr a1 = env_.alloc_site(site::slot(b, site::kGrdDom), s_.history);
        Addr a2 = env_.alloc_site(site::slot(b, site::kGrdRng), s_.history);
        const ExprPtr& maker = info_.range_maker.at(&node);
        const auto& free = info_.free_of(*maker);
        Value rng = Value::clo(maker, env_restrict(f.env, free), closure_pc(s_.pc, free));
        Successor& x = emit(Control::val({Value::grd(a1, a2), nullptr}), rest);
        x.writes.push_back({a1, w.v, false});
        x.writes.push_back({a2, rng, false});
        return;
      }
      case FrameKind::MonCon: {
        Frame g = frame(FrameKind::MonVal);
        g.pos = f.pos;
        g.neg = f.neg;
        g.where = f.where;
        g.site = f.site;
        g.w = w;
        emit(*f.pending, rest.push(std::move(g)));
        return;
      }
      case FrameKind::MonVal:
        monitor(f.w, w, f.pos, f.neg, f.where, f.site, rest);
        return;
      case FrameKind::FlatCheck: {
        if (auto pc = env_.feasibility().feasible(s_.pc, PrimOp::NonzeroP, w)) {
          PostValue result = f.w;
          Cache m = s_.cache;
          if (f.has_refine) {
            Refinements bit = refinement_bit(f.refine);
            result = refined(f.w, bit);
            m = refine_cache(m, f.w.sym, bit);
          }
          Successor& x = emit(Control::val(result), rest);
          x.state.pc = *pc;
          x.state.cache = m;
        }
        if (auto pc = env_.feasibility().feasible(s_.pc, PrimOp::ZeroP, w)) {
          Successor& x = emit(Control::blamed({f.pos, f.neg, f.where}), rest);
          x.state.pc = *pc;
        }
        return;
      }
      case FrameKind::ArrDom: {
        // w is the domain-checked argument
        std::uint64_t rng_site = site::derived(f.site, site::kRngTag);
        if (f.flag) {
          Frame g = frame(FrameKind::MonVal);
          g.pos = f.pos;
          g.neg = f.neg;
          g.where = f.where;
          g.site = rng_site;
          g.w = kOpaque;
          emit(Control::apply(f.w2, w, f.app, f.app_pos), rest.push(std::move(g)));
          return;
        }
        Frame g = frame(FrameKind::MonCon);
        g.pos = f.pos;
        g.neg = f.neg;
        g.where = f.where;
        g.site = rng_site;
        g.pending = std::make_shared<const Control>(Control::apply(f.w2, w, f.app, f.app_pos));
        emit(Control::apply(f.w, w, f.app, f.app_pos), rest.push(std::move(g)));
        return;
      }
      case FrameKind::ArrRng:
        throw std::logic_error("unexpected arr-rng frame");
      case FrameKind::Rt: {
        Successor& x = emit(Control::val({w.v, w.sym ? f.sym : nullptr}), rest);
        x.state.cache = restore_cache(f.cache, s_.cache, info_, &f.x);
        x.state.pc = f.pc;
        return;
      }
      case FrameKind::OpqRt: {
        Successor& x = emit(Control::val({w.v, nullptr}), rest);
        x.state.cache = restore_cache(f.cache, s_.cache, info_, nullptr);
        x.state.pc = f.pc;
        return;
      }
    }
  }

  void branch(const Frame& f, const PostValue& w, const Kont& rest) {
    const Expr& node = *f.expr;
    auto& feas = env_.feasibility();
    for (int taken = 1; taken >= 0; --taken) {
      auto pc = feas.feasible(s_.pc, taken ? PrimOp::NonzeroP : PrimOp::ZeroP, w);
      if (!pc) continue;
      Cache m = s_.cache;
      if (w.sym && pc_size(*pc) > pc_size(s_.pc) && m) {
        auto entries = m->entries;
        bool changed = false;
        for (auto& [x, e] : entries) {
          if (!e || !e->sym || !e->v.is_opaque()) continue;
          if (!mentions(*w.sym, *e->sym)) continue;
          Refinements r = feas.implied_refinements(*pc, e->sym, e->v.refs);
          if (r != close_refinements(e->v.refs) && !refinements_inconsistent(r)) {
            e = PostValue{Value::opaque(r), e->sym};
            changed = true;
          }
        }
        if (changed) m = cache_from(std::move(entries));
      }
      Successor& x = emit(Control::eval(node.kids[taken ? 1 : 2], f.env), rest);
      x.state.pc = *pc;
      x.state.cache = m;
    }
  }

  // ---- monitoring ----------------------------------------------------------

  void monitor(const PostValue& c, const PostValue& w, const Label& pos, const Label& neg, SourcePos where,
               std::uint64_t site_base, const Kont& k) {
    bool flat = true, fun = false;
    PathCondition fun_pc = s_.pc;
    if (c.v.kind == ValueKind::Grd) {
      flat = false;
      fun = true;
    } else if (c.v.is_opaque()) {
      if (auto pc = env_.feasibility().feasible(s_.pc, PrimOp::DepContractP, c)) {
        fun = true;
        fun_pc = *pc;
      }
    }
    if (flat) {
      Frame f = frame(FrameKind::FlatCheck);
      f.pos = pos;
      f.neg = neg;
      f.where = where;
      f.w = w;
      if (c.v.kind == ValueKind::Prim && !c.v.partial && refinement_bit(c.v.op)) {
        f.has_refine = true;
        f.refine = c.v.op;
      }
      emit(Control::apply(c, w, Label::transparent(where.str()), where), k.push(std::move(f)));
    }
    if (fun) {
      auto& feas = env_.feasibility();
      if (auto pc = feas.feasible(fun_pc, PrimOp::ProcP, w)) {
        // nested monitors share a derived site, so the contract and the
        // blamed party also pick the slots
        std::uint64_t key = site_base ^ ((c.v.hash * 0x9e3779b97f4a7c15ULL +
                                          std::hash<std::string>{}(pos.name)) << 4);
        Addr ac = env_.alloc_site(site::slot(key, site::kArrCon), s_.history);
        Addr af = env_.alloc_site(site::slot(key, site::kArrFn), s_.history);
        PostValue fn = refined(w, ref::kProc);
        Value arr = Value::arr_of(ArrInfo{pos, neg, where, site_base}, ac, af);
        Successor& x = emit(Control::val({arr, w.sym}), k);
        x.state.pc = *pc;
        x.state.cache = refine_cache(s_.cache, w.sym, ref::kProc);
        x.writes.push_back({ac, c.v, false});
        x.writes.push_back({af, fn.v, false});
      }
      if (auto pc = feas.feasible(fun_pc, PrimOp::NonprocP, w)) {
        Successor& x = emit(Control::blamed({pos, neg, where}), k);
        x.state.pc = *pc;
      }
    }
  }

  // ---- application ---------------------------------------------------------

  void apply(const PostValue& fn, const PostValue& arg, const Label& label, SourcePos pos, const Kont& k) {
    switch (fn.v.kind) {
      case ValueKind::Prim: {
        ExprPtr sym = ap(fn.sym, arg.sym, env_.sym_depth());
        for (const auto& v : apply_prim(fn.v, arg.v)) emit(Control::val({v, sym}), k);
        return;
      }
      case ValueKind::Clo: apply_closure(fn, arg, label, k); return;
      case ValueKind::Arr: apply_arr(fn, arg, label, pos, k); return;
      case ValueKind::Opaque: apply_opaque(fn, arg, label, pos, k); return;
      case ValueKind::Num:
      case ValueKind::Grd:
        emit(Control::blamed({label, Label::language(), pos}), k);
        return;
    }
  }

  void apply_closure(const PostValue& fn, const PostValue& arg, const Label& label, const Kont& k) {
    const ExprPtr& lam = fn.v.lam;
    const ExprPtr& body = lam->kids[0];
    VarId x = lam->var_id;
    std::uint32_t hist = env_.transfer(s_.history, label, *body);
    Addr a = env_.alloc_var(x, hist);
    Env rho = env_extend(fn.v.env, x, a);
    auto free = info_.lam_free.at(lam.get());

    // Caller facts carry over when the callee provably shares the caller's
    // names: a λ-term instantiated in the caller's scope, or a closed λ none
    // of whose binders the caller's φ mentions.
    const auto& bound = *info_.lam_binders.at(lam.get());
    bool same_scope = fn.sym && fn.sym->kind == ExprKind::Lam;
    bool share = same_scope || (free->empty() && !pc_mentions_any(s_.pc, bound));
    ExprPtr param_sym = info_.param_ref.at(lam.get());
    if (share && arg.sym && !mentions_var(*arg.sym, bound)) param_sym = arg.sym;

    std::vector<std::pair<VarId, std::optional<PostValue>>> entries;
    entries.emplace_back(x, PostValue{arg.v, param_sym});
    if (s_.cache) {
      for (const auto& [y, w] : s_.cache->entries) {
        if (y == x || !w) continue;
        bool is_free = std::binary_search(free->begin(), free->end(), y);
        if (same_scope && is_free) {
          entries.emplace_back(y, w);
        } else if (!info_.is_mutable(y)) {
          continue;
        } else if (is_free) {
          entries.emplace_back(y, std::nullopt);
        } else {
          entries.emplace_back(y, w);
        }
      }
    }
    PathCondition pc = fn.v.pc ? fn.v.pc : pc_empty();
    if (share) pc = pc_union(pc, s_.pc);

    Frame rt = frame(FrameKind::Rt);
    rt.x = x;
    rt.free = free;
    rt.sym = ap(fn.sym, arg.sym, env_.sym_depth());
    rt.cache = s_.cache;
    rt.pc = s_.pc;
    KontAddr ka{body, rho, 0};

    Successor& out = emit(Control::eval(body, rho), Kont{nullptr, ka});
    out.state.cache = cache_from(std::move(entries));
    out.state.pc = pc;
    out.state.history = hist;
    out.writes.push_back({a, arg.v, false});
    out.kont_writes.push_back({ka, k.push(std::move(rt))});
  }

  void apply_arr(const PostValue& fn, const PostValue& arg, const Label& label, SourcePos pos, const Kont& k) {
    const ArrInfo& info = *fn.v.arr;
    std::uint64_t dom_site = site::derived(info.site, site::kDomTag);
    ValueSet contracts = env_.read(s_, fn.v.a1);
    ValueSet fns = env_.read(s_, fn.v.a2);
    for (const auto& c : contracts) {
      std::vector<std::pair<Value, std::optional<Value>>> parts;  // (domain, range maker)
      if (c.kind == ValueKind::Grd) {
        ValueSet doms = env_.read(s_, c.a1);
        ValueSet rngs = env_.read(s_, c.a2);
        for (const auto& d : doms) {
          for (const auto& r : rngs) parts.emplace_back(d, r);
        }
      } else if (c.is_opaque()) {
        parts.emplace_back(Value::opaque(), std::nullopt);
      }
      for (const auto& f : fns) {
        for (const auto& [d, r] : parts) {
          Frame g = frame(FrameKind::ArrDom);
          g.pos = info.pos;
          g.neg = info.neg;
          g.where = info.where;
          g.site = info.site;
          g.app = label;
          g.app_pos = pos;
          g.flag = !r.has_value();
          if (r) g.w = PostValue{*r, nullptr};
          g.w2 = PostValue{f, fn.sym};
          Frame dom = frame(FrameKind::MonVal);
          dom.pos = info.neg;
          dom.neg = info.pos;
          dom.where = info.where;
          dom.site = dom_site;
          dom.w = PostValue{d, nullptr};
          emit(Control::val(arg), k.push(std::move(g)).push(std::move(dom)));
        }
      }
    }
  }

  void apply_opaque(const PostValue& fn, const PostValue& arg, const Label& label, SourcePos pos, const Kont& k) {
    auto& feas = env_.feasibility();
    if (auto pc = feas.feasible(s_.pc, PrimOp::ProcP, fn)) {
      // (a) unknown code returns an unknown value
      {
        Successor& x = emit(Control::val(kOpaque), k);
        x.state.pc = *pc;
        x.writes.push_back({Addr::leak(), arg.v, false});
      }
      // (b) unknown code re-applies leaked values
      ValueSet leaked = env_.read(s_, Addr::leak());
      value_set_insert(leaked, arg.v);
      bool filtered = false;
      std::optional<KontAddr> ka;
      for (const auto& v : leaked) {
        if (!v.is_procedure()) continue;
        if (!env_.should_rerun(s_, v)) {
          filtered = true;
          continue;
        }
        if (!ka) ka = KontAddr{nullptr, nullptr, env_.havoc_ctx(s_)};
        Frame back = frame(FrameKind::AppFun);
        back.w = kOpaque;
        back.app = Label::opaque();
        back.app_pos = pos;
        Kont seg = Kont{nullptr, *ka}.push(std::move(back));
        // unknown code knows nothing of the caller's cache or path
        Successor& x = emit(Control::apply({v, nullptr}, kOpaque, Label::opaque(), pos), seg);
        x.state.cache = cache_empty();
        x.state.pc = pc_empty();
        x.writes.push_back({Addr::leak(), arg.v, false});
        Frame ret = frame(FrameKind::OpqRt);
        ret.cache = s_.cache;
        ret.pc = *pc;
        x.kont_writes.push_back({*ka, k.push(std::move(ret))});
      }
      if (filtered) {
        // a memoized run already covers these values; only their effect on
        // mutable variables remains
        Successor& x = emit(Control::val(kOpaque), k);
        x.state.pc = *pc;
        x.state.cache = invalidate_mutable(s_.cache, info_);
        x.writes.push_back({Addr::leak(), arg.v, false});
      }
    }
    if (auto pc = feas.feasible(s_.pc, PrimOp::NonprocP, fn)) {
      Successor& x = emit(Control::blamed({label, Label::language(), pos}), k);
      x.state.pc = *pc;
    }
  }

  const MachineState& s_;
  StepEnv& env_;
  const ProgramInfo& info_;
  std::vector<Successor> out_;
};

}  // namespace

PostValue lit(const ExprPtr& u, const Env& env, const PathCondition& pc, const ProgramInfo& info) {
  switch (u->kind) {
    case ExprKind::Num: return {Value::num(u->num), u};
    case ExprKind::Prim: return {Value::prim(u->op), u};
    case ExprKind::Opq: return kOpaque;
    case ExprKind::Lam: {
      const auto& free = info.free_of(*u);
      return {Value::clo(u, env_restrict(env, free), closure_pc(pc, free)), u};
    }
    default: throw std::logic_error("lit of a non-literal");
  }
}

std::vector<Successor> step(const MachineState& s, StepEnv& env) { return Stepper(s, env).run(); }

}  // namespace scv
