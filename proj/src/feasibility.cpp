#include "scv/feasibility.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <iostream>

#include "scv/primitives.hpp"

namespace scv {

const char* verdict_name(SolverVerdict v) {
  switch (v) {
    case SolverVerdict::Sat: return "sat";
    case SolverVerdict::Unsat: return "unsat";
    case SolverVerdict::Unknown: return "unknown";
  }
  return "?";
}

const char* const kValueSortDecl =
    "(declare-datatype V ((Int (ival Int)) (Op (oid Int)) (Lam (lid Int)) (Arr (aid Int)) "
    "(Grd (gid Int))))";

std::string Formula::text() const {
  std::string out;
  for (const auto& d : decls) out += "(declare-const " + d + " V)\n";
  for (const auto& a : asserts) out += "(assert " + a + ")\n";
  return out;
}

// ---------------------------------------------------------------------------
// translation

namespace {

std::string int_lit(std::int64_t n) {
  if (n < 0) {
    // careful with the most negative value
    std::uint64_t m = 0 - static_cast<std::uint64_t>(n);
    return "(- " + std::to_string(m) + ")";
  }
  return std::to_string(n);
}

std::string is_int(const std::string& t) { return "((_ is Int) " + t + ")"; }
std::string ival(const std::string& t) { return "(ival " + t + ")"; }
// δ reads every non-number as 0
std::string num_of(const std::string& t) { return "(ite " + is_int(t) + " " + ival(t) + " 0)"; }
std::string boolean(const std::string& cond) { return "(ite " + cond + " (Int 1) (Int 0))"; }

const Expr* prim_head(const Expr& e, PrimOp& op) {
  if (e.kind == ExprKind::Prim) {
    op = e.op;
    return &e;
  }
  return nullptr;
}

}  // namespace

std::string Translator::fresh(const char* tag) {
  std::string name = std::string(tag) + "!" + std::to_string(next_++);
  f_.decls.push_back(name);
  return name;
}

std::string Translator::var(const std::string& name) {
  auto it = vars_.find(name);
  if (it != vars_.end()) return it->second;
  std::string sym = "|x:" + name + "|";
  vars_.emplace(name, sym);
  f_.decls.push_back(sym);
  return sym;
}

std::string Translator::prim_app(PrimOp op, const Expr& arg) {
  std::string t = term(arg);
  switch (op) {
    case PrimOp::Add1: return "(Int (+ " + num_of(t) + " 1))";
    case PrimOp::Sub1: return "(Int (- " + num_of(t) + " 1))";
    case PrimOp::IntP: return boolean(is_int(t));
    case PrimOp::ProcP:
      return boolean("(or ((_ is Op) " + t + ") ((_ is Lam) " + t + ") ((_ is Arr) " + t + "))");
    case PrimOp::NonprocP:
      return boolean("(not (or ((_ is Op) " + t + ") ((_ is Lam) " + t + ") ((_ is Arr) " + t + ")))");
    case PrimOp::ZeroP: return boolean("(= " + t + " (Int 0))");
    case PrimOp::NonzeroP: return boolean("(not (= " + t + " (Int 0)))");
    case PrimOp::FlatContractP: return boolean("(or ((_ is Op) " + t + ") ((_ is Lam) " + t + "))");
    case PrimOp::DepContractP: return boolean("((_ is Grd) " + t + ")");
    case PrimOp::EvenP: return boolean("(and " + is_int(t) + " (= (mod " + ival(t) + " 2) 0))");
    case PrimOp::OddP: return boolean("(and " + is_int(t) + " (= (mod " + ival(t) + " 2) 1))");
    case PrimOp::PositiveP: return boolean("(and " + is_int(t) + " (> " + ival(t) + " 0))");
    default: {
      // a partially applied binary primitive
      std::string p = fresh("t");
      f_.asserts.push_back("((_ is Op) " + p + ")");
      return p;
    }
  }
}

std::string Translator::prim_app2(PrimOp op, const Expr& a, const Expr& b) {
  std::string ta = term(a), tb = term(b);
  std::string x = num_of(ta), y = num_of(tb);
  auto arith = [&](const std::string& body) { return "(Int " + body + ")"; };
  auto cmp = [&](const char* rel) { return boolean(std::string("(") + rel + " " + x + " " + y + ")"); };
  switch (op) {
    case PrimOp::Plus: return arith("(+ " + x + " " + y + ")");
    case PrimOp::Minus: return arith("(- " + x + " " + y + ")");
    case PrimOp::Times:
      // only products with a literal factor stay linear
      if (a.kind == ExprKind::Num) return arith("(* " + int_lit(a.num) + " " + y + ")");
      if (b.kind == ExprKind::Num) return arith("(* " + x + " " + int_lit(b.num) + ")");
      return fresh("t");
    case PrimOp::NumEq: return cmp("=");
    case PrimOp::Lt: return cmp("<");
    case PrimOp::Le: return cmp("<=");
    default: return fresh("t");
  }
}

std::string Translator::term(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Num: return "(Int " + int_lit(e.num) + ")";
    case ExprKind::Prim: return "(Op " + std::to_string(static_cast<int>(e.op)) + ")";
    case ExprKind::Lam: {
      std::string l = fresh("l");
      f_.asserts.push_back("((_ is Lam) " + l + ")");
      return l;
    }
    case ExprKind::Ref: return var(e.var);
    case ExprKind::App: {
      const Expr& fn = e.kid(0);
      PrimOp op;
      if (prim_head(fn, op)) {
        return prim_app(op, e.kid(1));
      }
      if (fn.kind == ExprKind::App && prim_head(fn.kid(0), op) && prim_arity(op) == 2) {
        return prim_app2(op, fn.kid(1), e.kid(1));
      }
      return fresh("t");
    }
    default: return fresh("t");
  }
}

void Translator::assert_nonzero(const Expr& e) {
  std::string t = term(e);
  f_.asserts.push_back("(not (= " + t + " (Int 0)))");
}

Formula translate_pc(const PathCondition& pc) {
  Translator tr;
  if (pc) {
    for (const auto& f : pc->facts) tr.assert_nonzero(*f);
  }
  return tr.take();
}

std::string translate_expr(const Expr& e, Formula& out) {
  Translator tr;
  std::string t = tr.term(e);
  Formula f = tr.take();
  out.decls.insert(out.decls.end(), f.decls.begin(), f.decls.end());
  out.asserts.insert(out.asserts.end(), f.asserts.begin(), f.asserts.end());
  return t;
}

// ---------------------------------------------------------------------------
// solver process

std::string default_solver_path() {
  if (const char* env = std::getenv("SCV_SOLVER"); env && *env) return env;
  return "z3";
}

SolverSession::SolverSession(std::string path, int timeout_ms)
    : path_(std::move(path)), timeout_ms_(timeout_ms) {
  start();
}

SolverSession::~SolverSession() { stop(); }

bool SolverSession::start() {
  int in[2], out[2];
  if (pipe(in) != 0) return false;
  if (pipe(out) != 0) {
    close(in[0]);
    close(in[1]);
    return false;
  }
  std::string base = path_.substr(path_.find_last_of('/') + 1);
  std::vector<std::string> args{path_};
  if (base.find("z3") != std::string::npos) {
    args.push_back("-in");
  } else if (base.find("cvc") != std::string::npos) {
    args.push_back("--lang=smt2");
    args.push_back("--incremental");
  }
  pid_t pid = fork();
  if (pid < 0) {
    error_ = std::strerror(errno);
    return false;
  }
  if (pid == 0) {
    dup2(in[0], STDIN_FILENO);
    dup2(out[1], STDOUT_FILENO);
    int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, STDERR_FILENO);
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  pid_ = pid;
  to_child_ = in[1];
  from_child_ = out[0];
  buffer_.clear();
  signal(SIGPIPE, SIG_IGN);
  std::string init = "(set-option :print-success false)\n(set-logic ALL)\n";
  init += kValueSortDecl;
  init += "\n";
  if (!send(init)) {
    stop();
    return false;
  }
  // probe that the process is a working solver
  Formula empty;
  starting_ = true;
  SolverVerdict probe = check(empty);
  starting_ = false;
  if (probe != SolverVerdict::Sat) {
    error_ = "solver did not answer a trivial query";
    stop();
    return false;
  }
  return true;
}

void SolverSession::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
  }
  pid_ = -1;
}

bool SolverSession::send(const std::string& s) {
  std::size_t off = 0;
  while (off < s.size()) {
    ssize_t n = write(to_child_, s.data() + off, s.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      error_ = std::strerror(errno);
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

std::optional<std::string> SolverSession::read_line() {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      error_ = "timeout";
      return std::nullopt;
    }
    pollfd p{from_child_, POLLIN, 0};
    int r = poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) {
      error_ = "timeout";
      return std::nullopt;
    }
    char buf[4096];
    ssize_t n = read(from_child_, buf, sizeof buf);
    if (n <= 0) {
      error_ = "solver exited";
      return std::nullopt;
    }
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

SolverVerdict SolverSession::check(const Formula& f) {
  if (pid_ <= 0) return SolverVerdict::Unknown;
  std::string q = "(push 1)\n" + f.text() + "(check-sat)\n(pop 1)\n";
  if (!send(q)) {
    stop();
    return SolverVerdict::Unknown;
  }
  bool saw_error = false;
  for (;;) {
    auto line = read_line();
    if (!line) {
      // restart so later queries still get answers
      stop();
      if (!starting_) start();
      return SolverVerdict::Unknown;
    }
    if (line->rfind("(error", 0) == 0) {
      saw_error = true;
      error_ = *line;
      continue;
    }
    if (*line == "sat") return saw_error ? SolverVerdict::Unknown : SolverVerdict::Sat;
    if (*line == "unsat") return saw_error ? SolverVerdict::Unknown : SolverVerdict::Unsat;
    if (*line == "unknown") return SolverVerdict::Unknown;
  }
}

// ---------------------------------------------------------------------------
// syntactic reasoning

ExprPtr encode(PrimOp pred, const ExprPtr& s) {
  if (pred == PrimOp::NonzeroP) return s;
  return mk::app(mk::prim(pred), s, Label::language());
}

namespace {

// Constant folding of literal-only expressions.
std::optional<Value> fold(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Num: return Value::num(e.num);
    case ExprKind::Prim: return Value::prim(e.op);
    case ExprKind::Lam: return Value::opaque(ref::kProc);
    case ExprKind::App: {
      auto f = fold(e.kid(0));
      if (!f || f->kind != ValueKind::Prim) return std::nullopt;
      auto a = fold(e.kid(1));
      if (!a) return std::nullopt;
      ValueSet r = apply_prim(*f, *a);
      if (r.size() != 1) return std::nullopt;
      return r.front();
    }
    default: return std::nullopt;
  }
}

bool is_prim_app(const Expr& e, PrimOp op) {
  return e.kind == ExprKind::App && e.kid(0).kind == ExprKind::Prim && e.kid(0).op == op;
}

struct AtomFacts {
  bool pos = false;
  bool neg = false;
  Refinements must = 0;
  Refinements must_not = 0;
};

}  // namespace

bool syntactically_infeasible(const PathCondition& pc) {
  if (!pc) return false;
  std::unordered_map<ExprPtr, AtomFacts, ExprHash, ExprEq> atoms;
  for (const auto& fact : pc->facts) {
    bool pol = true;
    ExprPtr a = fact;
    for (;;) {
      if (is_prim_app(*a, PrimOp::ZeroP)) {
        pol = !pol;
        a = a->kids[1];
      } else if (is_prim_app(*a, PrimOp::NonzeroP)) {
        a = a->kids[1];
      } else {
        break;
      }
    }
    if (is_prim_app(*a, PrimOp::NonprocP)) {
      pol = !pol;
      a = mk::app(mk::prim(PrimOp::ProcP), a->kids[1], Label::language());
    }
    if (auto v = fold(*a)) {
      auto truthy = decide(PrimOp::NonzeroP, *v);
      if (truthy && *truthy != pol) return true;
      continue;
    }
    auto& f = atoms[a];
    (pol ? f.pos : f.neg) = true;
    if (f.pos && f.neg) return true;
    if (!pol) atoms[a].must |= ref::kZero;
    // (p e) with p in the vocabulary constrains e
    if (a->kind == ExprKind::App && a->kid(0).kind == ExprKind::Prim) {
      Refinements bit = refinement_bit(a->kid(0).op);
      if (bit) {
        auto& g = atoms[a->kids[1]];
        (pol ? g.must : g.must_not) |= bit;
      }
    }
  }
  for (const auto& [e, f] : atoms) {
    if (refinements_inconsistent(f.must)) return true;
    if (close_refinements(f.must) & f.must_not) return true;
    if (f.pos && (f.must & ref::kZero)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// feasibility

Feasibility::Feasibility(FeasibilityConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.use_solver) {
    std::string path = cfg_.solver_path.empty() ? default_solver_path() : cfg_.solver_path;
    session_ = std::make_unique<SolverSession>(path, cfg_.timeout_ms);
    if (!session_->alive()) {
      std::cerr << "scv: solver '" << path << "' unavailable (" << session_->last_error()
                << "); using syntactic feasibility only\n";
      session_.reset();
    }
  }
}

Feasibility::~Feasibility() = default;

SolverVerdict Feasibility::solver_check(const Formula& f) {
  std::string key = f.text();
  if (auto it = cache_.find(key); it != cache_.end()) {
    ++stats_.cache_hits;
    return it->second;
  }
  SolverVerdict v = SolverVerdict::Unknown;
  if (session_ && session_->alive()) {
    ++stats_.solver_calls;
    v = session_->check(f);
    if (!session_->alive() && !warned_) {
      warned_ = true;
      std::cerr << "scv: solver failed (" << session_->last_error() << "); degrading to syntactic mode\n";
    }
  }
  cache_.emplace(std::move(key), v);
  return v;
}

SolverVerdict Feasibility::check_pc(const PathCondition& pc) {
  if (syntactically_infeasible(pc)) return SolverVerdict::Unsat;
  if (!solver_active()) return SolverVerdict::Unknown;
  return solver_check(translate_pc(pc));
}

std::optional<PathCondition> Feasibility::feasible(const PathCondition& pc, PrimOp pred, const PostValue& w) {
  ++stats_.queries;
  auto d = decide(pred, w.v);
  if (d && !*d) {
    ++stats_.pruned;
    return std::nullopt;
  }
  const PathCondition base = pc ? pc : pc_empty();
  if (!w.sym || (d && !cfg_.record_facts)) return base;
  ExprKind k = w.sym->kind;
  if (k == ExprKind::Num || k == ExprKind::Prim || k == ExprKind::Lam) return base;
  ExprPtr fact = encode(pred, w.sym);
  if (fact->depth > cfg_.sym_depth + 1) return base;
  if (pc_contains(base, *fact)) return base;
  PathCondition next = pc_add(base, fact);
  if (syntactically_infeasible(next)) {
    ++stats_.pruned;
    return std::nullopt;
  }
  // Refinement-decided truths are knowledge; concrete values may be one guess
  // of a nondeterministic δ, so they still go to the solver.
  bool settled = d && w.v.is_opaque();
  if (!settled && !base->facts.empty() && solver_active()) {
    if (solver_check(translate_pc(next)) == SolverVerdict::Unsat) {
      ++stats_.pruned;
      return std::nullopt;
    }
  }
  return next;
}

namespace {

bool mentions(const Expr& hay, const Expr& needle) {
  if (hay.hash == needle.hash && expr_equal(hay, needle)) return true;
  for (const auto& k : hay.kids) {
    if (mentions(*k, needle)) return true;
  }
  return false;
}

}  // namespace

Refinements Feasibility::implied_refinements(const PathCondition& pc, const ExprPtr& sym, Refinements known) {
  known = close_refinements(known);
  if (!sym || !pc || pc->facts.empty()) return known;
  bool relevant = false;
  for (const auto& f : pc->facts) {
    if (mentions(*f, *sym)) {
      relevant = true;
      break;
    }
  }
  if (!relevant) return known;
  for (PrimOp p : {PrimOp::IntP, PrimOp::ProcP, PrimOp::ZeroP, PrimOp::EvenP, PrimOp::OddP,
                   PrimOp::PositiveP}) {
    Refinements bit = refinement_bit(p);
    if (close_refinements(known) & bit) continue;
    if (refinements_inconsistent(known | bit)) continue;
    // p holds when assuming its negation is contradictory
    ExprPtr neg = encode(PrimOp::ZeroP, encode(p, sym));
    if (neg->depth > cfg_.sym_depth + 2) continue;
    PathCondition q = pc_add(pc, neg);
    bool infeasible = syntactically_infeasible(q);
    if (!infeasible && solver_active()) infeasible = solver_check(translate_pc(q)) == SolverVerdict::Unsat;
    if (infeasible) known = close_refinements(known | bit);
  }
  return known;
}

}  // namespace scv
