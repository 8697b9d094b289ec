#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "scv/syntax.hpp"

namespace scv {

// ---------------------------------------------------------------------------
// refinements

// Bitmask over the fixed refinement vocabulary.
using Refinements = std::uint8_t;

namespace ref {
inline constexpr Refinements kInt = 1 << 0;
inline constexpr Refinements kProc = 1 << 1;
inline constexpr Refinements kZero = 1 << 2;
inline constexpr Refinements kEven = 1 << 3;
inline constexpr Refinements kOdd = 1 << 4;
inline constexpr Refinements kPositive = 1 << 5;
inline constexpr Refinements kAll = 0x3f;
inline constexpr int kCount = 6;
}  // namespace ref

// The vocabulary bit for a predicate, or 0 when `op` is not in the vocabulary.
Refinements refinement_bit(PrimOp op);
// Adds everything implied by `r` (e.g. even? implies int?).
Refinements close_refinements(Refinements r);
// True when no value can satisfy every predicate in `r`.
bool refinements_inconsistent(Refinements r);
std::string print_refinements(Refinements r);

// ---------------------------------------------------------------------------
// addresses

enum class AddrKind : std::uint8_t { Leak, Var, Site };

struct Addr {
  AddrKind kind = AddrKind::Leak;
  std::uint64_t key = 0;  // VarId for Var, site key for Site
  std::uint32_t ctx = 0;  // transfer-set id (abstract) or fresh stamp (concrete)

  static Addr leak() { return {}; }
  bool is_leak() const { return kind == AddrKind::Leak; }
  std::size_t hash() const;
  friend bool operator==(const Addr&, const Addr&) = default;
  friend auto operator<=>(const Addr&, const Addr&) = default;
};

struct AddrHash {
  std::size_t operator()(const Addr& a) const { return a.hash(); }
};

std::string print_addr(const Addr& a);

// Site keys for allocations that are not variable bindings. Layout: source
// node id, then a 2-bit derivation tag, then a 2-bit slot. Deriving twice with
// the same tag gives the same key, which keeps the key space finite.
namespace site {
inline std::uint64_t base(const Expr& e) { return std::uint64_t{e.id} << 4; }
inline std::uint64_t derived(std::uint64_t parent, std::uint64_t tag) { return (parent & ~std::uint64_t{0xf}) | (tag << 2); }
inline std::uint64_t slot(std::uint64_t base, std::uint64_t s) { return (base & ~std::uint64_t{3}) | s; }
inline constexpr std::uint64_t kDomTag = 1;
inline constexpr std::uint64_t kRngTag = 2;
inline constexpr std::uint64_t kGrdDom = 0;
inline constexpr std::uint64_t kGrdRng = 1;
inline constexpr std::uint64_t kArrCon = 2;
inline constexpr std::uint64_t kArrFn = 3;
}  // namespace site

// ---------------------------------------------------------------------------
// environments

struct EnvData {
  std::vector<std::pair<VarId, Addr>> slots;  // sorted by VarId
  std::size_t hash = 0;
};
using Env = std::shared_ptr<const EnvData>;

Env env_empty();
Env env_extend(const Env& env, VarId x, const Addr& a);
// Keeps only the variables in `keep` (sorted).
Env env_restrict(const Env& env, const std::vector<VarId>& keep);
const Addr* env_find(const Env& env, VarId x);
bool env_equal(const Env& a, const Env& b);
inline std::size_t env_hash(const Env& e) { return e ? e->hash : 0; }

// ---------------------------------------------------------------------------
// path conditions

struct PcData {
  std::vector<ExprPtr> facts;  // canonical order, no duplicates
  std::size_t hash = 0;
};
using PathCondition = std::shared_ptr<const PcData>;

PathCondition pc_empty();
PathCondition pc_add(const PathCondition& pc, const ExprPtr& fact);
PathCondition pc_union(const PathCondition& a, const PathCondition& b);
PathCondition pc_from(std::vector<ExprPtr> facts);
bool pc_contains(const PathCondition& pc, const Expr& fact);
bool pc_equal(const PathCondition& a, const PathCondition& b);
inline std::size_t pc_hash(const PathCondition& p) { return p ? p->hash : 0; }
inline std::size_t pc_size(const PathCondition& p) { return p ? p->facts.size() : 0; }

// ---------------------------------------------------------------------------
// values

enum class ValueKind : std::uint8_t { Num, Prim, Clo, Grd, Arr, Opaque };

struct Value;
using ValuePtr = std::shared_ptr<const Value>;

struct ArrInfo {
  Label pos;
  Label neg;
  SourcePos where;
  std::uint64_t site = 0;
};

struct Value {
  ValueKind kind = ValueKind::Num;
  std::int64_t n = 0;             // Num
  PrimOp op = PrimOp::IntP;       // Prim
  ValuePtr partial;               // Prim: first argument of a curried binary op
  Refinements refs = 0;           // Opaque
  ExprPtr lam;                    // Clo: the λ node
  Env env;                        // Clo
  PathCondition pc;               // Clo
  Addr a1, a2;                    // Grd: domain, range maker; Arr: contract, function
  std::shared_ptr<const ArrInfo> arr;
  std::size_t hash = 0;

  static Value num(std::int64_t n);
  static Value prim(PrimOp op);
  static Value prim_partial(PrimOp op, const Value& first);
  static Value clo(ExprPtr lam, Env env, PathCondition pc);
  static Value grd(Addr dom, Addr rng);
  static Value arr_of(ArrInfo info, Addr contract, Addr fn);
  static Value opaque(Refinements r = 0);

  bool is_num() const { return kind == ValueKind::Num; }
  bool is_opaque() const { return kind == ValueKind::Opaque; }
  bool is_procedure() const {
    return kind == ValueKind::Prim || kind == ValueKind::Clo || kind == ValueKind::Arr;
  }
};

bool operator==(const Value& a, const Value& b);
inline bool operator!=(const Value& a, const Value& b) { return !(a == b); }
struct ValueHash {
  std::size_t operator()(const Value& v) const { return v.hash; }
};

std::string print_value(const Value& v);

// A small set of values; insertion order is irrelevant.
using ValueSet = std::vector<Value>;
bool value_set_insert(ValueSet& s, const Value& v);  // true if added
bool value_set_contains(const ValueSet& s, const Value& v);

struct PostValue {
  Value v;
  ExprPtr sym;  // null is ∅
};
bool operator==(const PostValue& a, const PostValue& b);
std::size_t post_value_hash(const PostValue& w);
std::string print_post_value(const PostValue& w);

// ---------------------------------------------------------------------------
// store-cache

struct CacheData {
  // nullopt marks an invalidated entry
  std::vector<std::pair<VarId, std::optional<PostValue>>> entries;  // sorted by VarId
  std::size_t hash = 0;
};
using Cache = std::shared_ptr<const CacheData>;

Cache cache_empty();
// Missing and invalidated entries both yield null.
const PostValue* cache_get(const Cache& m, VarId x);
bool cache_has_entry(const Cache& m, VarId x);
Cache cache_set(const Cache& m, VarId x, std::optional<PostValue> w);
Cache cache_from(std::vector<std::pair<VarId, std::optional<PostValue>>> entries);
bool cache_equal(const Cache& a, const Cache& b);
inline std::size_t cache_hash(const Cache& m) { return m ? m->hash : 0; }

// ---------------------------------------------------------------------------
// control, frames, continuations

struct BlameInfo {
  Label pos;
  Label neg;
  SourcePos where;
  friend bool operator==(const BlameInfo&, const BlameInfo&) = default;
  friend auto operator<=>(const BlameInfo&, const BlameInfo&) = default;
};

// Apply is an internal redex form standing for an application whose operator
// and operand are already values.
enum class ControlKind : std::uint8_t { Eval, Val, Apply, Blame };

struct Control {
  ControlKind kind = ControlKind::Val;
  ExprPtr expr;  // Eval
  Env env;       // Eval
  PostValue w;   // Val; Apply operator
  PostValue arg; // Apply operand
  Label label;   // Apply site
  SourcePos pos; // Apply site
  BlameInfo blame;

  static Control eval(ExprPtr e, Env env);
  static Control val(PostValue w);
  static Control apply(PostValue fn, PostValue arg, Label label, SourcePos pos);
  static Control blamed(BlameInfo b);
};
bool operator==(const Control& a, const Control& b);
std::size_t control_hash(const Control& c);

enum class FrameKind : std::uint8_t {
  AppArg,     // (□ e)^ℓ with e pending under env
  AppFun,     // (w □)^ℓ
  If,         // (if □ e1 e2)
  SetTo,      // (set! x □)
  GrdDom,     // (□ → (λ (x) e))
  MonCon,     // (mon □ c): contract being evaluated, pending monitored closure
  MonVal,     // (mon w □): contract known, value being evaluated
  FlatCheck,  // (if □ w blame): result of applying a flat contract
  ArrDom,     // domain-checked argument feeds the range maker and function
  ArrRng,     // monitored application awaits the opaque range contract
  Rt,         // return from a closure body
  OpqRt,      // return from a havoc segment
};

struct Frame {
  FrameKind kind = FrameKind::AppArg;
  ExprPtr expr;   // AppArg: argument; If: the if node; SetTo: the set! node; GrdDom: dep-contract node
  Env env;
  std::shared_ptr<const Control> pending;  // MonCon
  PostValue w;    // AppFun operator; MonVal contract; FlatCheck value; ArrDom range maker
  PostValue w2;   // ArrDom function
  bool flag = false;  // ArrDom: range contract is opaque (no range maker)
  Label app;      // application site label (AppArg, AppFun, ArrDom)
  SourcePos app_pos;
  Label pos;      // positive party (monitors)
  Label neg;      // negative party
  SourcePos where;  // monitor position
  std::uint64_t site = 0;
  PrimOp refine = PrimOp::IntP;
  bool has_refine = false;
  // Rt / OpqRt
  VarId x = 0;
  std::shared_ptr<const std::vector<VarId>> free;
  ExprPtr sym;
  Cache cache;
  PathCondition pc;
  std::size_t hash = 0;
};
bool operator==(const Frame& a, const Frame& b);
void rehash(Frame& f);

struct FrameNode {
  Frame frame;
  std::shared_ptr<const FrameNode> next;
  std::size_t hash = 0;
};
using FrameList = std::shared_ptr<const FrameNode>;

struct KontAddr {
  ExprPtr body;  // null for havoc segments
  Env env;
  std::uint32_t ctx = 0;
  std::size_t hash() const;
};
bool operator==(const KontAddr& a, const KontAddr& b);
struct KontAddrHash {
  std::size_t operator()(const KontAddr& k) const { return k.hash(); }
};

struct Kont {
  FrameList frames;               // innermost first
  std::optional<KontAddr> rest;   // nullopt is Halt

  bool empty_frames() const { return !frames; }
  bool is_halt() const { return !frames && !rest; }
  const Frame* top() const { return frames ? &frames->frame : nullptr; }
  Kont pop() const { return {frames->next, rest}; }
  Kont push(Frame f) const;
  std::size_t hash() const;
};
bool operator==(const Kont& a, const Kont& b);

// ---------------------------------------------------------------------------
// stores

struct ValueStore {
  std::unordered_map<Addr, ValueSet, AddrHash> map;

  const ValueSet* find(const Addr& a) const {
    auto it = map.find(a);
    return it == map.end() ? nullptr : &it->second;
  }
};

struct KontStore {
  std::unordered_map<KontAddr, std::vector<Kont>, KontAddrHash> map;
  bool insert(const KontAddr& a, const Kont& k);  // true if new
};

// ---------------------------------------------------------------------------
// states

struct MachineState {
  Control control;
  Cache cache;
  PathCondition pc;
  Kont kont;
  std::uint32_t history = 0;
  // Concrete mode only: the per-path value store. Not part of state identity.
  std::shared_ptr<ValueStore> store;

  bool is_final() const {
    return control.kind == ControlKind::Blame ||
           (control.kind == ControlKind::Val && kont.is_halt());
  }
  std::size_t hash() const;
};
bool operator==(const MachineState& a, const MachineState& b);
struct StateHash {
  std::size_t operator()(const MachineState& s) const { return s.hash(); }
};

// Static facts about a loaded program.
struct ProgramInfo {
  ExprPtr program;
  std::unordered_map<const Expr*, std::shared_ptr<const std::vector<VarId>>> lam_free;  // sorted
  std::unordered_map<const Expr*, ExprPtr> range_maker;  // DepCon node → λ node
  std::unordered_map<const Expr*, ExprPtr> param_ref;    // λ node → (Ref param)
  std::unordered_map<const Expr*, std::shared_ptr<const std::vector<VarId>>> lam_binders;  // sorted, incl. param
  std::unordered_set<VarId> mutated;
  int checks = 0;

  const std::vector<VarId>& free_of(const Expr& lam) const { return *lam_free.at(&lam); }
  bool is_mutable(VarId x) const { return mutated.count(x) != 0; }
};

std::shared_ptr<const ProgramInfo> analyze_program(const ExprPtr& e);

// The initial state: control = Eval(e, ∅), empty cache/pc, Halt continuation.
MachineState load(const ExprPtr& e);

std::string print_control(const Control& c);
std::string print_kont(const Kont& k);
std::string print_pc(const PathCondition& pc);
std::string print_cache(const Cache& m);

}  // namespace scv
