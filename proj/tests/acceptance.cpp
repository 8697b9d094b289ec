#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "scv/abstraction.hpp"
#include "scv/soundness_harness.hpp"

using namespace scv;

namespace {

using Parties = std::set<std::pair<std::string, std::string>>;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string read_corpus(const std::string& name) {
  std::ifstream in(std::string(SCV_CORPUS_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string show(const Parties& p) {
  std::string s = "{";
  for (const auto& [a, b] : p) s += (s.size() > 1 ? " " : "") + std::string("(") + a + "," + b + ")";
  return s + "}";
}

struct Expected {
  const char* file;
  Parties blames;
};

// Outcomes stated for each worked example.
const std::vector<Expected> kCorpus = {
    {"fig2a.lms", {}},
    {"fig2b.lms", {{"f", "•"}}},
    {"fig3.lms", {}},
    {"fig13.lms", {{"f", "Λ"}}},
    {"fig14.lms", {{"app", "Λ"}}},
    {"fig19.lms", {}},
    {"micro_flat.lms", {{"f", "g"}}},
    {"micro_dep.lms", {{"g", "f"}}},
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << title << " | " << o.detail << std::endl;
  if (!o.pass) ++failures;
}

AnalysisResult verify(const std::string& file, bool solver = true, bool memo = true) {
  EngineConfig cfg;
  cfg.use_solver = solver;
  cfg.havoc_memo = memo;
  return run_fixpoint(load_program(read_corpus(file)), cfg);
}

Outcome corpus_outcomes() {
  Outcome o{true, ""};
  double worst = 0;
  for (const auto& e : kCorpus) {
    auto t0 = Clock::now();
    AnalysisResult r = verify(e.file);
    double s = seconds_since(t0);
    worst = std::max(worst, s);
    bool ok = !r.inconclusive && r.blame_parties() == e.blames && s < 10.0;
    if (!ok) {
      o.pass = false;
      o.detail += std::string(e.file) + " got " + show(r.blame_parties()) + (r.inconclusive ? " inconclusive" : "") +
                  " in " + std::to_string(s) + "s; ";
    }
  }
  o.detail += "8 programs, slowest " + std::to_string(worst) + "s";
  return o;
}

Outcome soundness_fuzz() {
  FuzzConfig cfg;
  cfg.programs = 200;
  cfg.diff.trials = 20;
  cfg.seed = 20240;
  auto t0 = Clock::now();
  FuzzReport r = fuzz_parallel(cfg);
  double s = seconds_since(t0);
  Outcome o;
  o.pass = r.programs >= 200 && r.trials >= 200 * 20 && r.violations.empty() && r.approx_failures == 0 && s < 600;
  std::ostringstream d;
  d << r.programs << " programs, " << r.trials << " trials (" << r.skipped << " over the step cap), "
    << r.concrete_blames << " concretely blaming, " << r.violations.size() << " violations, " << r.approx_failures
    << " approx failures, " << r.inconclusive << " programs over the symbolic budget, " << s << "s";
  if (!r.violations.empty()) d << "\n" << counterexample_text(r.violations.front());
  o.detail = d.str();
  return o;
}

Outcome termination() {
  Outcome o{true, ""};
  int done = 0;
  for (const auto& e : kCorpus) {
    if (verify(e.file).inconclusive) {
      o.pass = false;
      o.detail += std::string(e.file) + " over budget; ";
    } else {
      ++done;
    }
  }
  std::mt19937_64 rng(606);
  int random_done = 0;
  std::uint64_t most_steps = 0;
  for (int i = 0; i < 200; ++i) {
    std::string text = gen_closed_program(rng, 60);
    EngineConfig cfg;
    AnalysisResult r = run_fixpoint(load_program(text), cfg);
    most_steps = std::max(most_steps, r.steps);
    if (r.inconclusive) {
      if (o.pass) o.detail += "over budget: " + text + "; ";
      o.pass = false;
    } else {
      ++random_done;
    }
  }
  o.detail += std::to_string(done) + "/8 corpus, " + std::to_string(random_done) +
              "/200 random programs finished; most steps " + std::to_string(most_steps) + " of " +
              std::to_string(EngineConfig{}.step_budget);
  return o;
}

Outcome feasibility() {
  oracle::PcTally t = oracle::feasibility_soundness(500, 4242, true);
  Outcome o;
  o.pass = t.queries == 500 && t.unsound == 0;
  o.detail = std::to_string(t.queries) + " path conditions, " + std::to_string(t.infeasible) +
             " judged infeasible, " + std::to_string(t.unsound) + " refuted by brute force";
  if (t.unsound) o.detail += "; first: " + t.first;
  return o;
}

Outcome delta_widening() {
  oracle::Tally d = oracle::delta_soundness();
  oracle::Tally w = oracle::widening_soundness();
  Outcome o;
  o.pass = d.violations == 0 && w.violations == 0 && d.checked > 0 && w.checked > 0;
  o.detail = "δ " + std::to_string(d.checked) + " cases, " + std::to_string(d.violations) + " violations; widening " +
             std::to_string(w.checked) + " cases, " + std::to_string(w.violations) + " violations";
  if (!d.first.empty()) o.detail += "; " + d.first;
  if (!w.first.empty()) o.detail += "; " + w.first;
  return o;
}

Outcome solver_independence() {
  Outcome o{true, ""};
  std::string degraded;
  for (const auto& e : kCorpus) {
    Parties with = verify(e.file, true).blame_parties();
    AnalysisResult without = verify(e.file, false);
    Parties wo = without.blame_parties();
    for (const auto& p : with) {
      if (!wo.count(p)) {
        o.pass = false;
        o.detail += std::string(e.file) + " lost " + p.first + "; ";
      }
    }
    if (wo != with) degraded += std::string(e.file) + " " + show(wo) + " ";
  }
  o.detail += "every solver blame kept";
  if (!degraded.empty()) o.detail += "; extra potential blames without the solver: " + degraded;
  return o;
}

Outcome memo_neutrality() {
  Outcome o{true, ""};
  std::uint64_t with_states = 0, without_states = 0;
  for (const auto& e : kCorpus) {
    AnalysisResult a = verify(e.file, true, true);
    AnalysisResult b = verify(e.file, true, false);
    with_states += a.explored_states;
    without_states += b.explored_states;
    if (a.blame_parties() != b.blame_parties() || b.inconclusive) {
      o.pass = false;
      o.detail += std::string(e.file) + " " + show(a.blame_parties()) + " vs " + show(b.blame_parties()) +
                  (b.inconclusive ? " (inconclusive)" : "") + "; ";
    }
  }
  o.detail += "states with memo " + std::to_string(with_states) + ", without " + std::to_string(without_states);
  return o;
}

}  // namespace

int main() {
  report(1, "corpus outcomes", corpus_outcomes());
  report(2, "soundness fuzzing", soundness_fuzz());
  report(3, "abstract termination", termination());
  report(4, "feasibility soundness", feasibility());
  report(5, "δ/widening soundness", delta_widening());
  report(6, "solver independence", solver_independence());
  report(7, "havoc memo neutrality", memo_neutrality());
  return failures == 0 ? 0 : 1;
}
