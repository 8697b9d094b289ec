#include "scv/syntax.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <deque>
#include <mutex>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include "scv/primitives.hpp"

namespace scv {

std::string SourcePos::str() const { return std::to_string(line) + ":" + std::to_string(col); }

bool is_core_kind(ExprKind k) {
  switch (k) {
    case ExprKind::Let:
    case ExprKind::LetStar:
    case ExprKind::Begin:
    case ExprKind::Box:
    case ExprKind::Unbox:
    case ExprKind::SetBox:
      return false;
    default:
      return true;
  }
}

// ---------------------------------------------------------------------------
// construction

namespace {

struct VarTable {
  std::mutex mu;
  std::deque<std::string> names;
  std::unordered_map<std::string, VarId> ids;
};

VarTable& var_table() {
  static VarTable t;
  return t;
}

}  // namespace

VarId intern_var(std::string_view name) {
  auto& t = var_table();
  std::lock_guard lock(t.mu);
  auto it = t.ids.find(std::string(name));
  if (it != t.ids.end()) return it->second;
  VarId id = static_cast<VarId>(t.names.size());
  t.names.emplace_back(name);
  t.ids.emplace(t.names.back(), id);
  return id;
}

const std::string& var_name(VarId id) {
  auto& t = var_table();
  std::lock_guard lock(t.mu);
  return t.names.at(id);
}

namespace {

std::atomic<std::uint32_t> g_next_id{1};

inline void hash_mix(std::size_t& seed, std::size_t v) {
  seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

ExprPtr finish(Expr e) {
  e.id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  std::size_t h = static_cast<std::size_t>(e.kind) * 0x100000001b3ULL;
  int depth = 0;
  switch (e.kind) {
    case ExprKind::Num:
      hash_mix(h, std::hash<std::int64_t>{}(e.num));
      break;
    case ExprKind::Prim:
      hash_mix(h, static_cast<std::size_t>(e.op));
      break;
    case ExprKind::Mon:
      hash_mix(h, std::hash<std::string>{}(e.label.name));
      hash_mix(h, std::hash<std::string>{}(e.neg.name));
      break;
    default:
      break;
  }
  if (!e.var.empty()) {
    e.var_id = intern_var(e.var);
    hash_mix(h, std::hash<std::string>{}(e.var));
  }
  for (const auto& k : e.kids) {
    hash_mix(h, k->hash);
    depth = std::max(depth, k->depth);
  }
  for (const auto& b : e.bindings) {
    hash_mix(h, std::hash<std::string>{}(b.name));
    hash_mix(h, b.init->hash);
    depth = std::max(depth, b.init->depth);
  }
  e.hash = h;
  e.depth = depth + 1;
  return std::make_shared<const Expr>(std::move(e));
}

Expr base(ExprKind k, SourcePos pos) {
  Expr e;
  e.kind = k;
  e.pos = pos;
  return e;
}

}  // namespace

namespace mk {

ExprPtr num(std::int64_t n, SourcePos pos) {
  Expr e = base(ExprKind::Num, pos);
  e.num = n;
  return finish(std::move(e));
}

ExprPtr prim(PrimOp op, SourcePos pos) {
  Expr e = base(ExprKind::Prim, pos);
  e.op = op;
  return finish(std::move(e));
}

ExprPtr lam(std::string param, ExprPtr body, SourcePos pos) {
  Expr e = base(ExprKind::Lam, pos);
  e.var = std::move(param);
  e.kids = {std::move(body)};
  return finish(std::move(e));
}

ExprPtr opq(SourcePos pos) { return finish(base(ExprKind::Opq, pos)); }

ExprPtr ref(std::string name, SourcePos pos) {
  Expr e = base(ExprKind::Ref, pos);
  e.var = std::move(name);
  return finish(std::move(e));
}

ExprPtr app(ExprPtr fn, ExprPtr arg, Label label, SourcePos pos) {
  Expr e = base(ExprKind::App, pos);
  e.kids = {std::move(fn), std::move(arg)};
  e.label = std::move(label);
  return finish(std::move(e));
}

ExprPtr if_(ExprPtr test, ExprPtr then, ExprPtr els, SourcePos pos) {
  Expr e = base(ExprKind::If, pos);
  e.kids = {std::move(test), std::move(then), std::move(els)};
  return finish(std::move(e));
}

ExprPtr set(std::string name, ExprPtr value, SourcePos pos) {
  Expr e = base(ExprKind::Set, pos);
  e.var = std::move(name);
  e.kids = {std::move(value)};
  return finish(std::move(e));
}

ExprPtr depcon(ExprPtr dom, std::string var, ExprPtr rng, SourcePos pos) {
  Expr e = base(ExprKind::DepCon, pos);
  e.var = std::move(var);
  e.kids = {std::move(dom), std::move(rng)};
  return finish(std::move(e));
}

ExprPtr mon(Label pos_party, Label neg_party, ExprPtr contract, ExprPtr value, SourcePos pos) {
  Expr e = base(ExprKind::Mon, pos);
  e.label = std::move(pos_party);
  e.neg = std::move(neg_party);
  e.kids = {std::move(contract), std::move(value)};
  return finish(std::move(e));
}

ExprPtr let(std::vector<Binding> bindings, ExprPtr body, bool sequential, SourcePos pos) {
  Expr e = base(sequential ? ExprKind::LetStar : ExprKind::Let, pos);
  e.bindings = std::move(bindings);
  e.kids = {std::move(body)};
  return finish(std::move(e));
}

ExprPtr begin(std::vector<ExprPtr> items, SourcePos pos) {
  Expr e = base(ExprKind::Begin, pos);
  e.kids = std::move(items);
  return finish(std::move(e));
}

ExprPtr box(ExprPtr init, SourcePos pos) {
  Expr e = base(ExprKind::Box, pos);
  e.kids = {std::move(init)};
  return finish(std::move(e));
}

ExprPtr unbox(ExprPtr b, SourcePos pos) {
  Expr e = base(ExprKind::Unbox, pos);
  e.kids = {std::move(b)};
  return finish(std::move(e));
}

ExprPtr set_box(ExprPtr b, ExprPtr v, SourcePos pos) {
  Expr e = base(ExprKind::SetBox, pos);
  e.kids = {std::move(b), std::move(v)};
  return finish(std::move(e));
}

ExprPtr with_kids(const Expr& src, std::vector<ExprPtr> kids) {
  Expr e = src;
  e.kids = std::move(kids);
  return finish(std::move(e));
}

}  // namespace mk

// ---------------------------------------------------------------------------
// equality and ordering

namespace {

bool equal_impl(const Expr& a, const Expr& b, bool labels) {
  if (&a == &b) return true;
  if (a.hash != b.hash || a.kind != b.kind) return false;
  if (a.num != b.num || a.op != b.op || a.var != b.var) return false;
  if (a.kids.size() != b.kids.size() || a.bindings.size() != b.bindings.size()) return false;
  if (a.kind == ExprKind::Mon && (a.label != b.label || a.neg != b.neg)) return false;
  if (labels && a.kind == ExprKind::App && a.label != b.label) return false;
  for (std::size_t i = 0; i < a.kids.size(); ++i) {
    if (!equal_impl(*a.kids[i], *b.kids[i], labels)) return false;
  }
  for (std::size_t i = 0; i < a.bindings.size(); ++i) {
    if (a.bindings[i].name != b.bindings[i].name) return false;
    if (!equal_impl(*a.bindings[i].init, *b.bindings[i].init, labels)) return false;
  }
  return true;
}

}  // namespace

bool expr_equal(const Expr& a, const Expr& b) { return equal_impl(a, b, true); }
bool expr_equal_modulo_labels(const Expr& a, const Expr& b) { return equal_impl(a, b, false); }

bool expr_less(const Expr& a, const Expr& b) {
  if (&a == &b) return false;
  if (a.hash != b.hash) return a.hash < b.hash;
  if (a.kind != b.kind) return a.kind < b.kind;
  if (a.num != b.num) return a.num < b.num;
  if (a.op != b.op) return a.op < b.op;
  if (a.var != b.var) return a.var < b.var;
  if (a.label != b.label) return a.label < b.label;
  if (a.neg != b.neg) return a.neg < b.neg;
  if (a.kids.size() != b.kids.size()) return a.kids.size() < b.kids.size();
  for (std::size_t i = 0; i < a.kids.size(); ++i) {
    if (expr_less(*a.kids[i], *b.kids[i])) return true;
    if (expr_less(*b.kids[i], *a.kids[i])) return false;
  }
  return false;
}

// ---------------------------------------------------------------------------
// parsing

namespace {

struct SNode {
  bool is_list = false;
  std::string atom;
  std::vector<SNode> items;
  SourcePos pos;
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<SNode> read_all() {
    std::vector<SNode> out;
    skip_ws();
    while (i_ < text_.size()) {
      out.push_back(read());
      skip_ws();
    }
    return out;
  }

 private:
  SourcePos here() const { return {line_, col_}; }

  void advance() {
    unsigned char c = static_cast<unsigned char>(text_[i_]);
    ++i_;
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else if ((c & 0xC0) != 0x80) {
      ++col_;
    }
  }

  void skip_ws() {
    while (i_ < text_.size()) {
      char c = text_[i_];
      if (c == ';') {
        while (i_ < text_.size() && text_[i_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance();
      } else {
        break;
      }
    }
  }

  static bool delimiter(char c) {
    return c == '(' || c == ')' || c == '[' || c == ']' || c == ' ' || c == '\t' || c == '\n' ||
           c == '\r' || c == ';';
  }

  SNode read() {
    skip_ws();
    if (i_ >= text_.size()) throw ParseError(here(), "unexpected end of input");
    SNode node;
    node.pos = here();
    char c = text_[i_];
    if (c == '(' || c == '[') {
      char close = c == '(' ? ')' : ']';
      advance();
      node.is_list = true;
      skip_ws();
      while (true) {
        if (i_ >= text_.size()) throw ParseError(node.pos, "unclosed parenthesis");
        char d = text_[i_];
        if (d == ')' || d == ']') {
          if (d != close) throw ParseError(here(), "mismatched closing bracket");
          advance();
          break;
        }
        node.items.push_back(read());
        skip_ws();
      }
      return node;
    }
    if (c == ')' || c == ']') throw ParseError(here(), "unexpected closing bracket");
    std::size_t start = i_;
    while (i_ < text_.size() && !delimiter(text_[i_])) advance();
    node.atom = std::string(text_.substr(start, i_ - start));
    return node;
  }

  std::string_view text_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_number(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

const std::set<std::string>& keywords() {
  static const std::set<std::string> kw{"define", "define/contract", "λ",   "lambda", "if",
                                        "set!",   "->d",             "mon", "let",    "let*",
                                        "begin",  "box",             "unbox", "set-box!", "•"};
  return kw;
}

bool reserved_label(const std::string& s) { return s == "•" || s == "Λ" || s == "ℓ•"; }

class Converter {
 public:
  SurfaceProgram program(const std::vector<SNode>& forms) {
    SurfaceProgram p;
    std::vector<ExprPtr> mains;
    for (const auto& f : forms) {
      if (f.is_list && !f.items.empty() && !f.items[0].is_list &&
          (f.items[0].atom == "define" || f.items[0].atom == "define/contract")) {
        if (!mains.empty()) throw ParseError(f.pos, "definition after the main expression");
        p.definitions.push_back(definition(f));
        scope_.push_back(p.definitions.back().name);
      } else {
        mains.push_back(expr(f));
      }
    }
    if (mains.empty()) throw ParseError({1, 1}, "program has no main expression");
    p.main = mains.size() == 1 ? mains[0] : mk::begin(std::move(mains), forms.back().pos);
    return p;
  }

 private:
  Definition definition(const SNode& f) {
    bool contracted = f.items[0].atom == "define/contract";
    std::size_t need = contracted ? 4 : 3;
    if (f.items.size() < need) throw ParseError(f.pos, "malformed " + f.items[0].atom);
    Definition d;
    d.pos = f.pos;
    const SNode& head = f.items[1];
    if (head.is_list) {
      // (define (f x ...) body ...)
      if (head.items.empty()) throw ParseError(head.pos, "empty definition header");
      d.name = identifier(head.items[0]);
      std::vector<std::string> params;
      for (std::size_t i = 1; i < head.items.size(); ++i) params.push_back(identifier(head.items[i]));
      if (contracted) {
        d.contract = expr(f.items[2]);
      }
      std::size_t body_start = contracted ? 3 : 2;
      scope_.push_back(d.name);
      d.value = lambda(params, f, body_start, head.pos);
      scope_.pop_back();
    } else {
      d.name = identifier(head);
      if (f.items.size() != need) throw ParseError(f.pos, "malformed " + f.items[0].atom);
      scope_.push_back(d.name);
      if (contracted) {
        d.contract = expr(f.items[2]);
        d.value = expr(f.items[3]);
      } else {
        d.value = expr(f.items[2]);
      }
      scope_.pop_back();
    }
    return d;
  }

  std::string identifier(const SNode& n) {
    if (n.is_list) throw ParseError(n.pos, "expected identifier");
    std::int64_t ignored;
    if (is_number(n.atom, ignored)) throw ParseError(n.pos, "expected identifier, got number");
    if (keywords().contains(n.atom)) throw ParseError(n.pos, "keyword used as identifier: " + n.atom);
    if (n.atom.starts_with('%')) throw ParseError(n.pos, "identifiers may not start with %");
    return n.atom;
  }

  Label label(const SNode& n) {
    if (n.is_list) throw ParseError(n.pos, "expected blame label");
    if (reserved_label(n.atom)) throw ParseError(n.pos, "reserved label may not be written: " + n.atom);
    return Label::transparent(identifier(n));
  }

  bool bound(const std::string& name) const {
    return std::find(scope_.rbegin(), scope_.rend(), name) != scope_.rend();
  }

  ExprPtr body(const SNode& f, std::size_t start) {
    if (start >= f.items.size()) throw ParseError(f.pos, "missing body");
    if (start + 1 == f.items.size()) return expr(f.items[start]);
    std::vector<ExprPtr> items;
    for (std::size_t i = start; i < f.items.size(); ++i) items.push_back(expr(f.items[i]));
    return mk::begin(std::move(items), f.items[start].pos);
  }

  ExprPtr lambda(std::vector<std::string> params, const SNode& f, std::size_t body_start,
                 SourcePos pos) {
    if (params.empty()) params.push_back("_");
    for (const auto& p : params) scope_.push_back(p);
    ExprPtr e = body(f, body_start);
    for (std::size_t i = 0; i < params.size(); ++i) scope_.pop_back();
    for (auto it = params.rbegin(); it != params.rend(); ++it) e = mk::lam(*it, e, pos);
    return e;
  }

  ExprPtr expr(const SNode& n) {
    if (!n.is_list) return atom(n);
    if (n.items.empty()) throw ParseError(n.pos, "empty application");
    const SNode& head = n.items[0];
    if (!head.is_list && !bound(head.atom)) {
      const std::string& k = head.atom;
      if (k == "λ" || k == "lambda") return lambda_form(n);
      if (k == "if") {
        expect(n, 4, "if");
        return mk::if_(expr(n.items[1]), expr(n.items[2]), expr(n.items[3]), n.pos);
      }
      if (k == "set!") {
        expect(n, 3, "set!");
        return mk::set(identifier(n.items[1]), expr(n.items[2]), n.pos);
      }
      if (k == "->d") {
        expect(n, 4, "->d");
        ExprPtr dom = expr(n.items[1]);
        std::string x = identifier(n.items[2]);
        scope_.push_back(x);
        ExprPtr rng = expr(n.items[3]);
        scope_.pop_back();
        return mk::depcon(dom, x, rng, n.pos);
      }
      if (k == "mon") {
        expect(n, 5, "mon");
        Label pos = label(n.items[1]);
        Label neg = label(n.items[2]);
        return mk::mon(pos, neg, expr(n.items[3]), expr(n.items[4]), n.pos);
      }
      if (k == "let" || k == "let*") return let_form(n, k == "let*");
      if (k == "begin") {
        if (n.items.size() < 2) throw ParseError(n.pos, "empty begin");
        std::vector<ExprPtr> items;
        for (std::size_t i = 1; i < n.items.size(); ++i) items.push_back(expr(n.items[i]));
        return mk::begin(std::move(items), n.pos);
      }
      if (k == "box") {
        expect(n, 2, "box");
        return mk::box(expr(n.items[1]), n.pos);
      }
      if (k == "unbox") {
        expect(n, 2, "unbox");
        return mk::unbox(expr(n.items[1]), n.pos);
      }
      if (k == "set-box!") {
        expect(n, 3, "set-box!");
        return mk::set_box(expr(n.items[1]), expr(n.items[2]), n.pos);
      }
      if (k == "define" || k == "define/contract")
        throw ParseError(n.pos, "definitions are only allowed at top level");
    }
    // application, curried left to right; (f) applies f to 0
    ExprPtr fn = expr(head);
    Label l = Label::transparent(n.pos.str());
    if (n.items.size() == 1) return mk::app(fn, mk::num(0, n.pos), l, n.pos);
    for (std::size_t i = 1; i < n.items.size(); ++i) fn = mk::app(fn, expr(n.items[i]), l, n.pos);
    return fn;
  }

  void expect(const SNode& n, std::size_t count, const char* what) {
    if (n.items.size() != count) throw ParseError(n.pos, std::string("malformed ") + what);
  }

  ExprPtr lambda_form(const SNode& n) {
    if (n.items.size() < 3) throw ParseError(n.pos, "malformed λ");
    const SNode& ps = n.items[1];
    std::vector<std::string> params;
    if (ps.is_list) {
      for (const auto& p : ps.items) params.push_back(identifier(p));
    } else {
      params.push_back(identifier(ps));
    }
    return lambda(params, n, 2, n.pos);
  }

  ExprPtr let_form(const SNode& n, bool sequential) {
    if (n.items.size() < 3 || !n.items[1].is_list) throw ParseError(n.pos, "malformed let");
    std::vector<Binding> bs;
    std::size_t pushed = 0;
    for (const auto& b : n.items[1].items) {
      if (!b.is_list || b.items.size() != 2) throw ParseError(b.pos, "malformed let binding");
      Binding binding{identifier(b.items[0]), expr(b.items[1])};
      if (sequential) {
        scope_.push_back(binding.name);
        ++pushed;
      }
      bs.push_back(std::move(binding));
    }
    if (!sequential) {
      for (const auto& b : bs) scope_.push_back(b.name);
      pushed = bs.size();
    }
    ExprPtr e = body(n, 2);
    for (std::size_t i = 0; i < pushed; ++i) scope_.pop_back();
    return mk::let(std::move(bs), e, sequential, n.pos);
  }

  ExprPtr atom(const SNode& n) {
    std::int64_t v;
    if (is_number(n.atom, v)) return mk::num(v, n.pos);
    if (n.atom == "•") return mk::opq(n.pos);
    if (!bound(n.atom)) {
      if (auto op = prim_from_surface(n.atom)) return mk::prim(*op, n.pos);
    }
    return mk::ref(identifier(n), n.pos);
  }

  std::vector<std::string> scope_;
};

}  // namespace

SurfaceProgram parse(std::string_view text) {
  Reader reader(text);
  auto forms = reader.read_all();
  if (forms.empty()) throw ParseError({1, 1}, "empty program");
  return Converter{}.program(forms);
}

// ---------------------------------------------------------------------------
// free variables and friends

namespace {

void free_vars_into(const Expr& e, std::vector<std::string>& bound, std::set<std::string>& out) {
  auto is_bound = [&](const std::string& x) {
    return std::find(bound.begin(), bound.end(), x) != bound.end();
  };
  switch (e.kind) {
    case ExprKind::Ref:
      if (!is_bound(e.var)) out.insert(e.var);
      return;
    case ExprKind::Set:
      if (!is_bound(e.var)) out.insert(e.var);
      free_vars_into(e.kid(0), bound, out);
      return;
    case ExprKind::Lam:
      bound.push_back(e.var);
      free_vars_into(e.kid(0), bound, out);
      bound.pop_back();
      return;
    case ExprKind::DepCon:
      free_vars_into(e.kid(0), bound, out);
      bound.push_back(e.var);
      free_vars_into(e.kid(1), bound, out);
      bound.pop_back();
      return;
    case ExprKind::Let: {
      for (const auto& b : e.bindings) free_vars_into(*b.init, bound, out);
      for (const auto& b : e.bindings) bound.push_back(b.name);
      free_vars_into(e.kid(0), bound, out);
      for (std::size_t i = 0; i < e.bindings.size(); ++i) bound.pop_back();
      return;
    }
    case ExprKind::LetStar: {
      for (const auto& b : e.bindings) {
        free_vars_into(*b.init, bound, out);
        bound.push_back(b.name);
      }
      free_vars_into(e.kid(0), bound, out);
      for (std::size_t i = 0; i < e.bindings.size(); ++i) bound.pop_back();
      return;
    }
    default:
      for (const auto& k : e.kids) free_vars_into(*k, bound, out);
  }
}

template <typename F>
void walk(const Expr& e, F&& f) {
  f(e);
  for (const auto& k : e.kids) walk(*k, f);
  for (const auto& b : e.bindings) walk(*b.init, f);
}

}  // namespace

std::set<std::string> free_vars(const Expr& e) {
  std::vector<std::string> bound;
  std::set<std::string> out;
  free_vars_into(e, bound, out);
  return out;
}

std::vector<std::string> binders(const Expr& e) {
  std::vector<std::string> out;
  walk(e, [&](const Expr& n) {
    if (n.kind == ExprKind::Lam || n.kind == ExprKind::DepCon) out.push_back(n.var);
    for (const auto& b : n.bindings) out.push_back(b.name);
  });
  return out;
}

std::set<std::string> mutated_vars(const Expr& e) {
  std::set<std::string> out;
  walk(e, [&](const Expr& n) {
    if (n.kind == ExprKind::Set) out.insert(n.var);
  });
  return out;
}

bool contains_opaque(const Expr& e) {
  bool found = false;
  walk(e, [&](const Expr& n) { found = found || n.kind == ExprKind::Opq; });
  return found;
}

int count_monitors(const Expr& e) {
  int n = 0;
  walk(e, [&](const Expr& x) { n += x.kind == ExprKind::Mon; });
  return n;
}

// ---------------------------------------------------------------------------
// desugaring

namespace {

class Desugarer {
 public:
  ExprPtr program(const SurfaceProgram& p) {
    std::set<std::string> seen;
    for (const auto& d : p.definitions) {
      if (!seen.insert(d.name).second) throw SyntaxError("duplicate definition: " + d.name);
    }
    std::vector<std::string> scope;
    // definitions are visible to later definitions and the main expression
    std::vector<ExprPtr> values;
    for (const auto& d : p.definitions) {
      values.push_back(definition(d, scope));
      scope.push_back(d.name);
    }
    ExprPtr e = go(*p.main, scope);
    for (std::size_t i = p.definitions.size(); i-- > 0;) {
      const auto& d = p.definitions[i];
      e = mk::app(mk::lam(d.name, e, d.pos), values[i], owner_, d.pos);
    }
    return e;
  }

 private:
  // A recursive definition is tied through self-application:
  //   (define f e)  ==>  f = (g g)  where  g = (λ (%self) e[f := (%self %self)])
  ExprPtr definition(const Definition& d, std::vector<std::string>& scope) {
    Label outer = owner_;
    owner_ = Label::transparent(d.name);
    ExprPtr value;
    if (free_vars(*d.value).contains(d.name)) {
      std::string self = fresh("%self");
      scope.push_back(self);
      self_refs_.emplace_back(d.name, self);
      ExprPtr body = go(*d.value, scope);
      self_refs_.pop_back();
      scope.pop_back();
      Label l = owner_;
      ExprPtr gen = mk::lam(self, body, d.pos);
      value = mk::app(gen, gen, l, d.pos);
    } else {
      value = go(*d.value, scope);
    }
    owner_ = outer;
    if (d.contract) {
      ExprPtr c = go(*d.contract, scope);
      value = mk::mon(Label::transparent(d.name), Label::opaque(), c, value, d.pos);
    }
    return value;
  }

  std::string fresh(const std::string& base) { return base + std::to_string(counter_++); }

  // Code inside a definition answers to that definition's name; the main
  // expression answers to "main".
  Label site(const Expr&) const { return owner_; }

  ExprPtr go(const Expr& e, std::vector<std::string>& scope) {
    auto in_scope = [&](const std::string& x) {
      return std::find(scope.begin(), scope.end(), x) != scope.end();
    };
    switch (e.kind) {
      case ExprKind::Num:
      case ExprKind::Opq:
        return mk::with_kids(e, {});
      case ExprKind::Prim:
        if (prim_is_guarded(e.op)) {
          return mk::mon(Label::language(), site(e), guard_contract(e.op, e.pos), mk::prim(e.op, e.pos),
                         e.pos);
        }
        return mk::prim(e.op, e.pos);
      case ExprKind::Ref: {
        for (auto it = self_refs_.rbegin(); it != self_refs_.rend(); ++it) {
          if (it->first == e.var && !shadowed(e.var, scope, it->second)) {
            ExprPtr s = mk::ref(it->second, e.pos);
            return mk::app(s, s, site(e), e.pos);
          }
        }
        if (!in_scope(e.var)) throw SyntaxError(e.pos.str() + ": unbound variable " + e.var);
        return mk::ref(e.var, e.pos);
      }
      case ExprKind::Set:
        if (!in_scope(e.var)) throw SyntaxError(e.pos.str() + ": set! of unbound variable " + e.var);
        return mk::set(e.var, go(e.kid(0), scope), e.pos);
      case ExprKind::Lam: {
        scope.push_back(e.var);
        ExprPtr b = go(e.kid(0), scope);
        scope.pop_back();
        return mk::lam(e.var, b, e.pos);
      }
      case ExprKind::DepCon: {
        ExprPtr d = go(e.kid(0), scope);
        scope.push_back(e.var);
        ExprPtr r = go(e.kid(1), scope);
        scope.pop_back();
        return mk::depcon(d, e.var, r, e.pos);
      }
      case ExprKind::App: {
        ExprPtr f = go(e.kid(0), scope);
        ExprPtr a = go(e.kid(1), scope);
        // an operator drawn from unknown code makes the application unknown code
        Label l = contains_opaque(e.kid(0)) ? Label::opaque() : owner_;
        return mk::app(f, a, l, e.pos);
      }
      case ExprKind::If:
        return mk::if_(go(e.kid(0), scope), go(e.kid(1), scope), go(e.kid(2), scope), e.pos);
      case ExprKind::Mon:
        return mk::mon(e.label, e.neg, go(e.kid(0), scope), go(e.kid(1), scope), e.pos);
      case ExprKind::Let:
        return let(e, scope);
      case ExprKind::LetStar: {
        std::size_t pushed = 0;
        std::vector<std::pair<std::string, ExprPtr>> inits;
        for (const auto& b : e.bindings) {
          inits.emplace_back(b.name, go(*b.init, scope));
          scope.push_back(b.name);
          ++pushed;
        }
        ExprPtr body = go(e.kid(0), scope);
        scope.resize(scope.size() - pushed);
        for (auto it = inits.rbegin(); it != inits.rend(); ++it)
          body = mk::app(mk::lam(it->first, body, e.pos), it->second, site(e), e.pos);
        return body;
      }
      case ExprKind::Begin: {
        ExprPtr acc = go(*e.kids.back(), scope);
        for (std::size_t i = e.kids.size() - 1; i-- > 0;) {
          ExprPtr first = go(*e.kids[i], scope);
          acc = mk::app(mk::lam(fresh("%_"), acc, e.pos), first, site(e), e.pos);
        }
        return acc;
      }
      case ExprKind::Box: {
        // ((λ (c) (λ (m) (if (proc? m) ((λ (_) c) (set! c (m 0))) c))) init)
        std::string c = fresh("%cell"), m = fresh("%msg"), u = fresh("%_");
        Label l = site(e);
        ExprPtr update = mk::app(mk::lam(u, mk::ref(c, e.pos), e.pos),
                                 mk::set(c, mk::app(mk::ref(m, e.pos), mk::num(0, e.pos), l, e.pos), e.pos),
                                 l, e.pos);
        ExprPtr dispatch = mk::if_(mk::app(mk::prim(PrimOp::ProcP, e.pos), mk::ref(m, e.pos), l, e.pos),
                                   update, mk::ref(c, e.pos), e.pos);
        ExprPtr init = go(e.kid(0), scope);
        return mk::app(mk::lam(c, mk::lam(m, dispatch, e.pos), e.pos), init, l, e.pos);
      }
      case ExprKind::Unbox:
        return mk::app(go(e.kid(0), scope), mk::num(0, e.pos), site(e), e.pos);
      case ExprKind::SetBox: {
        // ((λ (v) (b (λ (_) v))) value)
        std::string v = fresh("%val"), u = fresh("%_");
        ExprPtr b = go(e.kid(0), scope);
        ExprPtr val = go(e.kid(1), scope);
        Label l = site(e);
        ExprPtr call = mk::app(b, mk::lam(u, mk::ref(v, e.pos), e.pos), l, e.pos);
        return mk::app(mk::lam(v, call, e.pos), val, l, e.pos);
      }
    }
    throw SyntaxError("unknown expression kind");
  }

  // parallel let: inits see the outer scope only
  ExprPtr let(const Expr& e, std::vector<std::string>& scope) {
    std::set<std::string> names;
    for (const auto& b : e.bindings) {
      if (!names.insert(b.name).second)
        throw SyntaxError(e.pos.str() + ": duplicate binder in let: " + b.name);
    }
    std::vector<ExprPtr> inits;
    bool capture = false;
    for (const auto& b : e.bindings) {
      inits.push_back(go(*b.init, scope));
      for (const auto& fv : free_vars(*b.init)) capture = capture || names.contains(fv);
    }
    for (const auto& b : e.bindings) scope.push_back(b.name);
    ExprPtr body = go(e.kid(0), scope);
    scope.resize(scope.size() - e.bindings.size());
    Label l = site(e);
    if (!capture || e.bindings.size() == 1) {
      for (std::size_t i = e.bindings.size(); i-- > 0;)
        body = mk::app(mk::lam(e.bindings[i].name, body, e.pos), inits[i], l, e.pos);
      return body;
    }
    // evaluate every init into a temporary before any name comes into scope
    std::vector<std::string> temps;
    for (std::size_t i = 0; i < e.bindings.size(); ++i) temps.push_back(fresh("%tmp"));
    for (std::size_t i = e.bindings.size(); i-- > 0;)
      body = mk::app(mk::lam(e.bindings[i].name, body, e.pos), mk::ref(temps[i], e.pos), l, e.pos);
    for (std::size_t i = e.bindings.size(); i-- > 0;)
      body = mk::app(mk::lam(temps[i], body, e.pos), inits[i], l, e.pos);
    return body;
  }

  bool shadowed(const std::string& name, const std::vector<std::string>& scope,
                const std::string& self) const {
    // a binder for `name` introduced after the self parameter hides the recursion
    auto self_it = std::find(scope.rbegin(), scope.rend(), self);
    auto name_it = std::find(scope.rbegin(), scope.rend(), name);
    return name_it != scope.rend() && name_it < self_it;
  }

  std::vector<std::pair<std::string, std::string>> self_refs_;
  Label owner_ = Label::transparent("main");
  int counter_ = 0;
};

}  // namespace

ExprPtr desugar(const SurfaceProgram& program) { return Desugarer{}.program(program); }

// ---------------------------------------------------------------------------
// α-renaming

namespace {

class Renamer {
 public:
  explicit Renamer(const Expr& root) {
    for (const auto& b : binders(root)) taken_.insert(b);
    for (const auto& f : free_vars(root)) taken_.insert(f);
  }

  ExprPtr go(const Expr& e, std::map<std::string, std::string>& env) {
    switch (e.kind) {
      case ExprKind::Ref: {
        auto it = env.find(e.var);
        return mk::ref(it == env.end() ? e.var : it->second, e.pos);
      }
      case ExprKind::Set: {
        auto it = env.find(e.var);
        return mk::set(it == env.end() ? e.var : it->second, go(e.kid(0), env), e.pos);
      }
      case ExprKind::Lam: {
        std::string n = fresh(e.var);
        auto saved = bind(env, e.var, n);
        ExprPtr body = go(e.kid(0), env);
        restore(env, e.var, saved);
        return mk::lam(n, body, e.pos);
      }
      case ExprKind::DepCon: {
        ExprPtr dom = go(e.kid(0), env);
        std::string n = fresh(e.var);
        auto saved = bind(env, e.var, n);
        ExprPtr rng = go(e.kid(1), env);
        restore(env, e.var, saved);
        return mk::depcon(dom, n, rng, e.pos);
      }
      default: {
        if (!e.bindings.empty()) throw SyntaxError("alpha_rename expects desugared input");
        std::vector<ExprPtr> kids;
        for (const auto& k : e.kids) kids.push_back(go(*k, env));
        return mk::with_kids(e, std::move(kids));
      }
    }
  }

 private:
  std::string fresh(const std::string& base) {
    int& k = counters_[base];
    std::string n;
    do {
      n = base + std::to_string(k++);
    } while (taken_.contains(n));
    taken_.insert(n);
    return n;
  }

  static std::optional<std::string> bind(std::map<std::string, std::string>& env,
                                         const std::string& from, const std::string& to) {
    std::optional<std::string> old;
    if (auto it = env.find(from); it != env.end()) old = it->second;
    env[from] = to;
    return old;
  }

  static void restore(std::map<std::string, std::string>& env, const std::string& name,
                      const std::optional<std::string>& old) {
    if (old) {
      env[name] = *old;
    } else {
      env.erase(name);
    }
  }

  std::set<std::string> taken_;
  std::map<std::string, int> counters_;
};

}  // namespace

ExprPtr alpha_rename(const ExprPtr& e) {
  Renamer r(*e);
  std::map<std::string, std::string> env;
  return r.go(*e, env);
}

// ---------------------------------------------------------------------------
// printing

namespace {

void print_into(const Expr& e, std::ostringstream& os) {
  switch (e.kind) {
    case ExprKind::Num:
      os << e.num;
      return;
    case ExprKind::Prim:
      os << prim_name(e.op);
      return;
    case ExprKind::Opq:
      os << "•";
      return;
    case ExprKind::Ref:
      os << e.var;
      return;
    case ExprKind::Lam:
      os << "(λ (" << e.var << ") ";
      print_into(e.kid(0), os);
      os << ")";
      return;
    case ExprKind::App:
      os << "(";
      print_into(e.kid(0), os);
      os << " ";
      print_into(e.kid(1), os);
      os << ")";
      return;
    case ExprKind::If:
      os << "(if ";
      print_into(e.kid(0), os);
      os << " ";
      print_into(e.kid(1), os);
      os << " ";
      print_into(e.kid(2), os);
      os << ")";
      return;
    case ExprKind::Set:
      os << "(set! " << e.var << " ";
      print_into(e.kid(0), os);
      os << ")";
      return;
    case ExprKind::DepCon:
      os << "(->d ";
      print_into(e.kid(0), os);
      os << " " << e.var << " ";
      print_into(e.kid(1), os);
      os << ")";
      return;
    case ExprKind::Mon:
      os << "(mon " << e.label.name << " " << e.neg.name << " ";
      print_into(e.kid(0), os);
      os << " ";
      print_into(e.kid(1), os);
      os << ")";
      return;
    case ExprKind::Let:
    case ExprKind::LetStar:
      os << (e.kind == ExprKind::Let ? "(let (" : "(let* (");
      for (std::size_t i = 0; i < e.bindings.size(); ++i) {
        if (i) os << " ";
        os << "[" << e.bindings[i].name << " ";
        print_into(*e.bindings[i].init, os);
        os << "]";
      }
      os << ") ";
      print_into(e.kid(0), os);
      os << ")";
      return;
    case ExprKind::Begin:
      os << "(begin";
      for (const auto& k : e.kids) {
        os << " ";
        print_into(*k, os);
      }
      os << ")";
      return;
    case ExprKind::Box:
      os << "(box ";
      print_into(e.kid(0), os);
      os << ")";
      return;
    case ExprKind::Unbox:
      os << "(unbox ";
      print_into(e.kid(0), os);
      os << ")";
      return;
    case ExprKind::SetBox:
      os << "(set-box! ";
      print_into(e.kid(0), os);
      os << " ";
      print_into(e.kid(1), os);
      os << ")";
      return;
  }
}

}  // namespace

std::string print(const Expr& e) {
  std::ostringstream os;
  print_into(e, os);
  return os.str();
}

ExprPtr load_program(std::string_view text) { return alpha_rename(desugar(parse(text))); }

}  // namespace scv
