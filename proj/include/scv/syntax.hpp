#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scv/prim_op.hpp"

namespace scv {

struct SourcePos {
  int line = 0;
  int col = 0;

  std::string str() const;
  friend bool operator==(const SourcePos&, const SourcePos&) = default;
  friend auto operator<=>(const SourcePos&, const SourcePos&) = default;
};

enum class LabelKind : std::uint8_t { Transparent, OpaqueSentinel, LanguageSentinel };

/// A blame party. Transparent labels name code under verification; the two
/// sentinels stand for unknown code (ℓ•) and the language itself (Λ).
struct Label {
  std::string name;
  LabelKind kind = LabelKind::Transparent;

  static Label transparent(std::string name) { return {std::move(name), LabelKind::Transparent}; }
  static Label opaque() { return {"•", LabelKind::OpaqueSentinel}; }
  static Label language() { return {"Λ", LabelKind::LanguageSentinel}; }

  bool is_transparent() const { return kind == LabelKind::Transparent; }
  bool is_opaque() const { return kind == LabelKind::OpaqueSentinel; }

  friend bool operator==(const Label&, const Label&) = default;
  friend auto operator<=>(const Label&, const Label&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(SourcePos pos, const std::string& what)
      : std::runtime_error(pos.str() + ": " + what), pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

class SyntaxError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExprKind : std::uint8_t {
  // core forms
  Num,
  Prim,
  Lam,
  Opq,
  Ref,
  App,
  If,
  Set,
  DepCon,
  Mon,
  // surface sugar, removed by desugar()
  Let,
  LetStar,
  Begin,
  Box,
  Unbox,
  SetBox,
};

bool is_core_kind(ExprKind k);

using VarId = std::uint32_t;
// Process-wide variable-name interning; thread-safe.
VarId intern_var(std::string_view name);
const std::string& var_name(VarId id);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Binding {
  std::string name;
  ExprPtr init;
};

/// One node of the λ_S syntax tree. Nodes are immutable once built; the
/// structural hash and nesting depth are computed at construction.
///
/// Field use per kind:
///   Num     num
///   Prim    op
///   Lam     var (parameter), kids[0] (body)
///   Ref     var
///   App     kids[0] (function), kids[1] (argument), label
///   If      kids[0..2]
///   Set     var, kids[0]
///   DepCon  kids[0] (domain), var, kids[1] (range body)
///   Mon     label (positive), neg, kids[0] (contract), kids[1] (value)
///   Let/LetStar  bindings, kids[0] (body)
///   Begin   kids (at least one)
///   Box/Unbox  kids[0];  SetBox kids[0], kids[1]
struct Expr {
  ExprKind kind = ExprKind::Num;
  SourcePos pos;
  std::int64_t num = 0;
  PrimOp op = PrimOp::IntP;
  std::string var;
  std::uint32_t var_id = 0;  // interned `var`
  std::vector<ExprPtr> kids;
  std::vector<Binding> bindings;
  Label label;
  Label neg;

  std::uint32_t id = 0;  // unique per node; allocation-site identity
  std::size_t hash = 0;
  int depth = 1;

  const Expr& kid(std::size_t i) const { return *kids[i]; }
};

// Structural equality (ignores positions and node ids).
bool expr_equal(const Expr& a, const Expr& b);
inline bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  return expr_equal(*a, *b);
}

// Same as expr_equal but application labels are not compared.
bool expr_equal_modulo_labels(const Expr& a, const Expr& b);

struct ExprHash {
  std::size_t operator()(const ExprPtr& e) const { return e ? e->hash : 0; }
};
struct ExprEq {
  bool operator()(const ExprPtr& a, const ExprPtr& b) const { return expr_equal(a, b); }
};
// Total order used to canonicalize expression sets.
bool expr_less(const Expr& a, const Expr& b);

namespace mk {
ExprPtr num(std::int64_t n, SourcePos pos = {});
ExprPtr prim(PrimOp op, SourcePos pos = {});
ExprPtr lam(std::string param, ExprPtr body, SourcePos pos = {});
ExprPtr opq(SourcePos pos = {});
ExprPtr ref(std::string name, SourcePos pos = {});
ExprPtr app(ExprPtr fn, ExprPtr arg, Label label, SourcePos pos = {});
ExprPtr if_(ExprPtr test, ExprPtr then, ExprPtr els, SourcePos pos = {});
ExprPtr set(std::string name, ExprPtr value, SourcePos pos = {});
ExprPtr depcon(ExprPtr dom, std::string var, ExprPtr rng, SourcePos pos = {});
ExprPtr mon(Label pos_party, Label neg_party, ExprPtr contract, ExprPtr value, SourcePos pos = {});
ExprPtr let(std::vector<Binding> bindings, ExprPtr body, bool sequential, SourcePos pos = {});
ExprPtr begin(std::vector<ExprPtr> items, SourcePos pos = {});
ExprPtr box(ExprPtr init, SourcePos pos = {});
ExprPtr unbox(ExprPtr b, SourcePos pos = {});
ExprPtr set_box(ExprPtr b, ExprPtr v, SourcePos pos = {});
// Rebuilds `e` with new children, keeping every other field.
ExprPtr with_kids(const Expr& e, std::vector<ExprPtr> kids);
}  // namespace mk

struct Definition {
  std::string name;
  ExprPtr value;
  ExprPtr contract;  // null for plain define
  SourcePos pos;
};

struct SurfaceProgram {
  std::vector<Definition> definitions;
  ExprPtr main;
};

SurfaceProgram parse(std::string_view text);

// Expands definitions and sugar into a single closed core expression.
// References to partial primitives become guarded monitors.
ExprPtr desugar(const SurfaceProgram& program);

ExprPtr alpha_rename(const ExprPtr& e);

std::set<std::string> free_vars(const Expr& e);

// Every binder in `e` (λ parameters and dependent-contract variables).
std::vector<std::string> binders(const Expr& e);

// Variables that appear as the target of some set!.
std::set<std::string> mutated_vars(const Expr& e);

bool contains_opaque(const Expr& e);

// Number of monitor nodes: explicit mon plus guarded primitive references.
int count_monitors(const Expr& e);

std::string print(const Expr& e);
inline std::string print(const ExprPtr& e) { return e ? print(*e) : std::string("∅"); }

// parse + desugar + alpha_rename.
ExprPtr load_program(std::string_view text);

}  // namespace scv
