#include "scv/machine.hpp"

#include <algorithm>
#include <sstream>

namespace scv {

namespace {

inline void mix(std::size_t& seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

bool sym_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return a == b;
  return expr_equal(*a, *b);
}

std::size_t sym_hash(const ExprPtr& e) { return e ? e->hash : 0x51; }

}  // namespace

// ---------------------------------------------------------------------------
// refinements

Refinements refinement_bit(PrimOp op) {
  switch (op) {
    case PrimOp::IntP: return ref::kInt;
    case PrimOp::ProcP: return ref::kProc;
    case PrimOp::ZeroP: return ref::kZero;
    case PrimOp::EvenP: return ref::kEven;
    case PrimOp::OddP: return ref::kOdd;
    case PrimOp::PositiveP: return ref::kPositive;
    default: return 0;
  }
}

Refinements close_refinements(Refinements r) {
  if (r & (ref::kZero | ref::kEven | ref::kOdd | ref::kPositive)) r |= ref::kInt;
  if (r & ref::kZero) r |= ref::kEven;
  return r;
}

bool refinements_inconsistent(Refinements r) {
  r = close_refinements(r);
  if ((r & ref::kInt) && (r & ref::kProc)) return true;
  if ((r & ref::kEven) && (r & ref::kOdd)) return true;
  if ((r & ref::kZero) && (r & (ref::kPositive | ref::kOdd))) return true;
  return false;
}

std::string print_refinements(Refinements r) {
  static const char* names[] = {"int?", "proc?", "zero?", "even?", "odd?", "positive?"};
  std::string out = "{";
  bool first = true;
  for (int i = 0; i < ref::kCount; ++i) {
    if (r & (1 << i)) {
      if (!first) out += ' ';
      out += names[i];
      first = false;
    }
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// addresses

std::size_t Addr::hash() const {
  std::size_t h = static_cast<std::size_t>(kind);
  mix(h, std::hash<std::uint64_t>{}(key));
  mix(h, ctx);
  return h;
}

std::string print_addr(const Addr& a) {
  switch (a.kind) {
    case AddrKind::Leak: return "α•";
    case AddrKind::Var: return var_name(static_cast<VarId>(a.key)) + "@" + std::to_string(a.ctx);
    case AddrKind::Site: return "site" + std::to_string(a.key) + "@" + std::to_string(a.ctx);
  }
  return "?";
}

// ---------------------------------------------------------------------------
// environments

namespace {

Env make_env(std::vector<std::pair<VarId, Addr>> slots) {
  auto d = std::make_shared<EnvData>();
  d->slots = std::move(slots);
  std::size_t h = 0xe7;
  for (const auto& [x, a] : d->slots) {
    mix(h, x);
    mix(h, a.hash());
  }
  d->hash = h;
  return d;
}

}  // namespace

Env env_empty() {
  static const Env e = make_env({});
  return e;
}

Env env_extend(const Env& env, VarId x, const Addr& a) {
  auto slots = env ? env->slots : std::vector<std::pair<VarId, Addr>>{};
  auto it = std::lower_bound(slots.begin(), slots.end(), x,
                             [](const auto& p, VarId v) { return p.first < v; });
  if (it != slots.end() && it->first == x) {
    it->second = a;
  } else {
    slots.insert(it, {x, a});
  }
  return make_env(std::move(slots));
}

Env env_restrict(const Env& env, const std::vector<VarId>& keep) {
  std::vector<std::pair<VarId, Addr>> slots;
  if (env) {
    for (const auto& s : env->slots) {
      if (std::binary_search(keep.begin(), keep.end(), s.first)) slots.push_back(s);
    }
  }
  if (env && slots.size() == env->slots.size()) return env;
  return make_env(std::move(slots));
}

const Addr* env_find(const Env& env, VarId x) {
  if (!env) return nullptr;
  auto it = std::lower_bound(env->slots.begin(), env->slots.end(), x,
                             [](const auto& p, VarId v) { return p.first < v; });
  if (it == env->slots.end() || it->first != x) return nullptr;
  return &it->second;
}

bool env_equal(const Env& a, const Env& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return a->hash == b->hash && a->slots == b->slots;
}

// ---------------------------------------------------------------------------
// path conditions

namespace {

PathCondition make_pc(std::vector<ExprPtr> facts) {
  auto d = std::make_shared<PcData>();
  d->facts = std::move(facts);
  std::size_t h = 0x9c;
  for (const auto& f : d->facts) mix(h, f->hash);
  d->hash = h;
  return d;
}

bool fact_less(const ExprPtr& a, const ExprPtr& b) { return expr_less(*a, *b); }

}  // namespace

PathCondition pc_empty() {
  static const PathCondition e = make_pc({});
  return e;
}

PathCondition pc_from(std::vector<ExprPtr> facts) {
  std::sort(facts.begin(), facts.end(), fact_less);
  facts.erase(std::unique(facts.begin(), facts.end(),
                          [](const ExprPtr& a, const ExprPtr& b) { return expr_equal(*a, *b); }),
              facts.end());
  return make_pc(std::move(facts));
}

bool pc_contains(const PathCondition& pc, const Expr& fact) {
  if (!pc) return false;
  auto it = std::lower_bound(pc->facts.begin(), pc->facts.end(), fact,
                             [](const ExprPtr& a, const Expr& b) { return expr_less(*a, b); });
  return it != pc->facts.end() && expr_equal(**it, fact);
}

PathCondition pc_add(const PathCondition& pc, const ExprPtr& fact) {
  if (pc_contains(pc, *fact)) return pc ? pc : pc_empty();
  std::vector<ExprPtr> facts = pc ? pc->facts : std::vector<ExprPtr>{};
  auto it = std::lower_bound(facts.begin(), facts.end(), fact, fact_less);
  facts.insert(it, fact);
  return make_pc(std::move(facts));
}

PathCondition pc_union(const PathCondition& a, const PathCondition& b) {
  if (!b || b->facts.empty()) return a ? a : pc_empty();
  if (!a || a->facts.empty()) return b;
  std::vector<ExprPtr> facts = a->facts;
  facts.insert(facts.end(), b->facts.begin(), b->facts.end());
  return pc_from(std::move(facts));
}

bool pc_equal(const PathCondition& a, const PathCondition& b) {
  if (a == b) return true;
  std::size_t na = pc_size(a), nb = pc_size(b);
  if (na != nb) return false;
  if (na == 0) return true;
  if (a->hash != b->hash) return false;
  for (std::size_t i = 0; i < na; ++i) {
    if (!expr_equal(*a->facts[i], *b->facts[i])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// values

namespace {

Value finish(Value v) {
  std::size_t h = static_cast<std::size_t>(v.kind) * 0x2545f491;
  switch (v.kind) {
    case ValueKind::Num: mix(h, std::hash<std::int64_t>{}(v.n)); break;
    case ValueKind::Prim:
      mix(h, static_cast<std::size_t>(v.op));
      if (v.partial) mix(h, v.partial->hash);
      break;
    case ValueKind::Clo:
      mix(h, v.lam->id);
      mix(h, env_hash(v.env));
      mix(h, pc_hash(v.pc));
      break;
    case ValueKind::Grd:
      mix(h, v.a1.hash());
      mix(h, v.a2.hash());
      break;
    case ValueKind::Arr:
      mix(h, v.a1.hash());
      mix(h, v.a2.hash());
      mix(h, std::hash<std::string>{}(v.arr->pos.name));
      mix(h, std::hash<std::string>{}(v.arr->neg.name));
      mix(h, v.arr->site);
      break;
    case ValueKind::Opaque: mix(h, v.refs); break;
  }
  v.hash = h;
  return v;
}

}  // namespace

Value Value::num(std::int64_t n) {
  Value v;
  v.kind = ValueKind::Num;
  v.n = n;
  return finish(std::move(v));
}

Value Value::prim(PrimOp op) {
  Value v;
  v.kind = ValueKind::Prim;
  v.op = op;
  return finish(std::move(v));
}

Value Value::prim_partial(PrimOp op, const Value& first) {
  Value v;
  v.kind = ValueKind::Prim;
  v.op = op;
  v.partial = std::make_shared<const Value>(first);
  return finish(std::move(v));
}

Value Value::clo(ExprPtr lam, Env env, PathCondition pc) {
  Value v;
  v.kind = ValueKind::Clo;
  v.lam = std::move(lam);
  v.env = std::move(env);
  v.pc = pc ? std::move(pc) : pc_empty();
  return finish(std::move(v));
}

Value Value::grd(Addr dom, Addr rng) {
  Value v;
  v.kind = ValueKind::Grd;
  v.a1 = dom;
  v.a2 = rng;
  return finish(std::move(v));
}

Value Value::arr_of(ArrInfo info, Addr contract, Addr fn) {
  Value v;
  v.kind = ValueKind::Arr;
  v.arr = std::make_shared<const ArrInfo>(std::move(info));
  v.a1 = contract;
  v.a2 = fn;
  return finish(std::move(v));
}

Value Value::opaque(Refinements r) {
  Value v;
  v.kind = ValueKind::Opaque;
  v.refs = close_refinements(r);
  return finish(std::move(v));
}

bool operator==(const Value& a, const Value& b) {
  if (a.hash != b.hash || a.kind != b.kind) return false;
  switch (a.kind) {
    case ValueKind::Num: return a.n == b.n;
    case ValueKind::Prim:
      if (a.op != b.op || bool(a.partial) != bool(b.partial)) return false;
      return !a.partial || *a.partial == *b.partial;
    case ValueKind::Clo:
      return a.lam == b.lam && env_equal(a.env, b.env) && pc_equal(a.pc, b.pc);
    case ValueKind::Grd: return a.a1 == b.a1 && a.a2 == b.a2;
    case ValueKind::Arr:
      return a.a1 == b.a1 && a.a2 == b.a2 && a.arr->pos == b.arr->pos &&
             a.arr->neg == b.arr->neg && a.arr->site == b.arr->site &&
             a.arr->where == b.arr->where;
    case ValueKind::Opaque: return a.refs == b.refs;
  }
  return false;
}

std::string print_value(const Value& v) {
  switch (v.kind) {
    case ValueKind::Num: return std::to_string(v.n);
    case ValueKind::Prim:
      if (v.partial) return "(" + std::string(prim_name(v.op)) + " " + print_value(*v.partial) + ")";
      return std::string(prim_name(v.op));
    case ValueKind::Clo: return "#<closure " + print(v.lam) + ">";
    case ValueKind::Grd: return "#<guard " + print_addr(v.a1) + " " + print_addr(v.a2) + ">";
    case ValueKind::Arr:
      return "#<arr " + v.arr->pos.name + "/" + v.arr->neg.name + " " + print_addr(v.a2) + ">";
    case ValueKind::Opaque: return v.refs ? "•" + print_refinements(v.refs) : "•";
  }
  return "?";
}

bool value_set_contains(const ValueSet& s, const Value& v) {
  return std::find(s.begin(), s.end(), v) != s.end();
}

bool value_set_insert(ValueSet& s, const Value& v) {
  if (value_set_contains(s, v)) return false;
  s.push_back(v);
  return true;
}

bool operator==(const PostValue& a, const PostValue& b) { return a.v == b.v && sym_equal(a.sym, b.sym); }

std::size_t post_value_hash(const PostValue& w) {
  std::size_t h = w.v.hash;
  mix(h, sym_hash(w.sym));
  return h;
}

std::string print_post_value(const PostValue& w) {
  return "(" + print_value(w.v) + ", " + print(w.sym) + ")";
}

// ---------------------------------------------------------------------------
// cache

namespace {

Cache make_cache(std::vector<std::pair<VarId, std::optional<PostValue>>> entries) {
  auto d = std::make_shared<CacheData>();
  d->entries = std::move(entries);
  std::size_t h = 0xca;
  for (const auto& [x, w] : d->entries) {
    mix(h, x);
    mix(h, w ? post_value_hash(*w) : 0x1d);
  }
  d->hash = h;
  return d;
}

}  // namespace

Cache cache_empty() {
  static const Cache c = make_cache({});
  return c;
}

Cache cache_from(std::vector<std::pair<VarId, std::optional<PostValue>>> entries) {
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return make_cache(std::move(entries));
}

const PostValue* cache_get(const Cache& m, VarId x) {
  if (!m) return nullptr;
  auto it = std::lower_bound(m->entries.begin(), m->entries.end(), x,
                             [](const auto& p, VarId v) { return p.first < v; });
  if (it == m->entries.end() || it->first != x || !it->second) return nullptr;
  return &*it->second;
}

bool cache_has_entry(const Cache& m, VarId x) {
  if (!m) return false;
  auto it = std::lower_bound(m->entries.begin(), m->entries.end(), x,
                             [](const auto& p, VarId v) { return p.first < v; });
  return it != m->entries.end() && it->first == x;
}

Cache cache_set(const Cache& m, VarId x, std::optional<PostValue> w) {
  auto entries = m ? m->entries : std::vector<std::pair<VarId, std::optional<PostValue>>>{};
  auto it = std::lower_bound(entries.begin(), entries.end(), x,
                             [](const auto& p, VarId v) { return p.first < v; });
  if (it != entries.end() && it->first == x) {
    it->second = std::move(w);
  } else {
    entries.insert(it, {x, std::move(w)});
  }
  return make_cache(std::move(entries));
}

bool cache_equal(const Cache& a, const Cache& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->entries.size() != b->entries.size()) return false;
  for (std::size_t i = 0; i < a->entries.size(); ++i) {
    const auto& [xa, wa] = a->entries[i];
    const auto& [xb, wb] = b->entries[i];
    if (xa != xb || bool(wa) != bool(wb)) return false;
    if (wa && !(*wa == *wb)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// control

Control Control::eval(ExprPtr e, Env env) {
  Control c;
  c.kind = ControlKind::Eval;
  c.expr = std::move(e);
  c.env = std::move(env);
  return c;
}

Control Control::val(PostValue w) {
  Control c;
  c.kind = ControlKind::Val;
  c.w = std::move(w);
  return c;
}

Control Control::apply(PostValue fn, PostValue arg, Label label, SourcePos pos) {
  Control c;
  c.kind = ControlKind::Apply;
  c.w = std::move(fn);
  c.arg = std::move(arg);
  c.label = std::move(label);
  c.pos = pos;
  return c;
}

Control Control::blamed(BlameInfo b) {
  Control c;
  c.kind = ControlKind::Blame;
  c.blame = std::move(b);
  return c;
}

bool operator==(const Control& a, const Control& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ControlKind::Eval: return a.expr == b.expr && env_equal(a.env, b.env);
    case ControlKind::Val: return a.w == b.w;
    case ControlKind::Apply: return a.w == b.w && a.arg == b.arg && a.label == b.label && a.pos == b.pos;
    case ControlKind::Blame: return a.blame == b.blame;
  }
  return false;
}

std::size_t control_hash(const Control& c) {
  std::size_t h = static_cast<std::size_t>(c.kind) + 0x77;
  switch (c.kind) {
    case ControlKind::Eval:
      mix(h, c.expr->id);
      mix(h, env_hash(c.env));
      break;
    case ControlKind::Val: mix(h, post_value_hash(c.w)); break;
    case ControlKind::Apply:
      mix(h, post_value_hash(c.w));
      mix(h, post_value_hash(c.arg));
      mix(h, std::hash<std::string>{}(c.label.name));
      break;
    case ControlKind::Blame:
      mix(h, std::hash<std::string>{}(c.blame.pos.name));
      mix(h, std::hash<std::string>{}(c.blame.neg.name));
      break;
  }
  return h;
}

// ---------------------------------------------------------------------------
// frames

void rehash(Frame& f) {
  std::size_t h = static_cast<std::size_t>(f.kind) * 0x9e37;
  if (f.expr) mix(h, f.expr->id);
  mix(h, env_hash(f.env));
  if (f.pending) mix(h, control_hash(*f.pending));
  mix(h, post_value_hash(f.w));
  mix(h, post_value_hash(f.w2));
  mix(h, f.flag);
  mix(h, std::hash<std::string>{}(f.app.name));
  mix(h, std::hash<std::string>{}(f.pos.name));
  mix(h, std::hash<std::string>{}(f.neg.name));
  mix(h, f.site);
  mix(h, f.has_refine ? static_cast<std::size_t>(f.refine) + 1 : 0);
  mix(h, f.x);
  mix(h, sym_hash(f.sym));
  mix(h, cache_hash(f.cache));
  mix(h, pc_hash(f.pc));
  f.hash = h;
}

bool operator==(const Frame& a, const Frame& b) {
  if (a.hash != b.hash || a.kind != b.kind) return false;
  if (a.expr != b.expr || !env_equal(a.env, b.env)) return false;
  if (bool(a.pending) != bool(b.pending)) return false;
  if (a.pending && !(*a.pending == *b.pending)) return false;
  if (!(a.w == b.w) || !(a.w2 == b.w2) || a.flag != b.flag) return false;
  if (a.app != b.app || a.app_pos != b.app_pos) return false;
  if (a.pos != b.pos || a.neg != b.neg || a.where != b.where || a.site != b.site) return false;
  if (a.has_refine != b.has_refine || (a.has_refine && a.refine != b.refine)) return false;
  if (a.x != b.x || !sym_equal(a.sym, b.sym)) return false;
  if (bool(a.free) != bool(b.free) || (a.free && *a.free != *b.free)) return false;
  return cache_equal(a.cache, b.cache) && pc_equal(a.pc, b.pc);
}

std::size_t KontAddr::hash() const {
  std::size_t h = body ? body->id : 0xab;
  mix(h, env_hash(env));
  mix(h, ctx);
  return h;
}

bool operator==(const KontAddr& a, const KontAddr& b) {
  return a.body == b.body && a.ctx == b.ctx && env_equal(a.env, b.env);
}

Kont Kont::push(Frame f) const {
  rehash(f);
  auto node = std::make_shared<FrameNode>();
  std::size_t h = f.hash;
  mix(h, frames ? frames->hash : 0x3);
  node->hash = h;
  node->frame = std::move(f);
  node->next = frames;
  return {std::move(node), rest};
}

std::size_t Kont::hash() const {
  std::size_t h = frames ? frames->hash : 0x3;
  mix(h, rest ? rest->hash() : 0x5);
  return h;
}

bool operator==(const Kont& a, const Kont& b) {
  if (bool(a.rest) != bool(b.rest)) return false;
  if (a.rest && !(*a.rest == *b.rest)) return false;
  const FrameNode* x = a.frames.get();
  const FrameNode* y = b.frames.get();
  while (x && y) {
    if (x == y) return true;
    if (x->hash != y->hash || !(x->frame == y->frame)) return false;
    x = x->next.get();
    y = y->next.get();
  }
  return x == y;
}

bool KontStore::insert(const KontAddr& a, const Kont& k) {
  auto& v = map[a];
  for (const auto& existing : v) {
    if (existing == k) return false;
  }
  v.push_back(k);
  return true;
}

// ---------------------------------------------------------------------------
// states

std::size_t MachineState::hash() const {
  std::size_t h = control_hash(control);
  mix(h, cache_hash(cache));
  mix(h, pc_hash(pc));
  mix(h, kont.hash());
  mix(h, history);
  return h;
}

bool operator==(const MachineState& a, const MachineState& b) {
  return a.history == b.history && a.control == b.control && cache_equal(a.cache, b.cache) &&
         pc_equal(a.pc, b.pc) && a.kont == b.kont;
}

MachineState load(const ExprPtr& e) {
  MachineState s;
  s.control = Control::eval(e, env_empty());
  s.cache = cache_empty();
  s.pc = pc_empty();
  return s;
}

namespace {

void analyze(const ExprPtr& e, ProgramInfo& info) {
  const Expr& n = *e;
  if (n.kind == ExprKind::Lam) {
    std::vector<VarId> fv;
    for (const auto& x : free_vars(n)) fv.push_back(intern_var(x));
    std::sort(fv.begin(), fv.end());
    info.lam_free[&n] = std::make_shared<const std::vector<VarId>>(std::move(fv));
    info.param_ref[&n] = mk::ref(n.var, n.pos);
    std::vector<VarId> bs;
    for (const auto& x : binders(n)) bs.push_back(intern_var(x));
    std::sort(bs.begin(), bs.end());
    bs.erase(std::unique(bs.begin(), bs.end()), bs.end());
    info.lam_binders[&n] = std::make_shared<const std::vector<VarId>>(std::move(bs));
  } else if (n.kind == ExprKind::DepCon) {
    auto lam = mk::lam(n.var, n.kids[1], n.pos);
    analyze(lam, info);
    info.range_maker[&n] = lam;
  } else if (n.kind == ExprKind::Set) {
    info.mutated.insert(n.var_id);
  }
  for (const auto& k : n.kids) analyze(k, info);
}

}  // namespace

std::shared_ptr<const ProgramInfo> analyze_program(const ExprPtr& e) {
  auto info = std::make_shared<ProgramInfo>();
  info->program = e;
  analyze(e, *info);
  info->checks = count_monitors(*e);
  return info;
}

// ---------------------------------------------------------------------------
// printing

std::string print_pc(const PathCondition& pc) {
  std::string out = "{";
  if (pc) {
    for (std::size_t i = 0; i < pc->facts.size(); ++i) {
      if (i) out += ", ";
      out += print(pc->facts[i]);
    }
  }
  return out + "}";
}

std::string print_cache(const Cache& m) {
  std::string out = "{";
  if (m) {
    bool first = true;
    for (const auto& [x, w] : m->entries) {
      if (!first) out += ", ";
      first = false;
      out += var_name(x) + " ↦ " + (w ? print_post_value(*w) : std::string("∅"));
    }
  }
  return out + "}";
}

std::string print_control(const Control& c) {
  switch (c.kind) {
    case ControlKind::Eval: return "eval " + print(c.expr);
    case ControlKind::Val: return "val " + print_post_value(c.w);
    case ControlKind::Apply:
      return "apply " + print_post_value(c.w) + " " + print_post_value(c.arg) + " @" + c.label.name;
    case ControlKind::Blame:
      return "blame " + c.blame.pos.name + " (by " + c.blame.neg.name + ") at " + c.blame.where.str();
  }
  return "?";
}

std::string print_kont(const Kont& k) {
  static const char* names[] = {"app-arg", "app-fun", "if", "set!", "grd-dom", "mon-con",
                                "mon-val", "flat-check", "arr-dom", "arr-rng", "rt", "opq-rt"};
  std::ostringstream os;
  os << "[";
  bool first = true;
  for (const FrameNode* n = k.frames.get(); n; n = n->next.get()) {
    if (!first) os << " ";
    first = false;
    os << names[static_cast<int>(n->frame.kind)];
  }
  os << "]";
  if (k.rest) {
    os << " ++ κ(" << (k.rest->body ? print(k.rest->body) : std::string("havoc")) << ")";
  } else {
    os << " halt";
  }
  return os.str();
}

}  // namespace scv
