#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scv/abstraction.hpp"
#include "scv/soundness_harness.hpp"
#include "scv/syntax.hpp"

namespace {

using json = nlohmann::json;

constexpr int kJsonSchema = 1;

struct Flags {
  std::string path;
  std::string mode;
  std::string solver;
  bool no_solver = false;
  int sym_depth = 4;
  std::uint64_t steps = 1'000'000;
  bool no_havoc_memo = false;
  std::string format = "text";
  std::string trace;
};

void add_shared(CLI::App& cmd, Flags& f, const std::string& default_mode) {
  f.mode = default_mode;
  cmd.add_option("--mode", f.mode, "concrete or abstract")->check(CLI::IsMember({"concrete", "abstract"}));
  cmd.add_option("--solver", f.solver, "SMT solver binary (default $SCV_SOLVER or z3)");
  cmd.add_flag("--no-solver", f.no_solver, "syntactic feasibility checks only");
  cmd.add_option("--sym-depth", f.sym_depth, "symbolic term depth limit");
  cmd.add_option("--steps", f.steps, "step budget");
  cmd.add_flag("--no-havoc-memo", f.no_havoc_memo, "re-run havoc on every opaque application");
  cmd.add_option("--format", f.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  cmd.add_option("--trace", f.trace, "write one line per explored state to FILE");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Session {
  scv::ExprPtr program;
  scv::EngineConfig cfg;
  std::unique_ptr<std::ofstream> trace_file;
};

Session prepare(const Flags& f) {
  Session s;
  s.program = scv::load_program(read_file(f.path));
  s.cfg.policy = f.mode == "concrete" ? scv::AllocPolicy::Concrete : scv::AllocPolicy::Abstract;
  s.cfg.sym_depth = f.sym_depth;
  s.cfg.step_budget = f.steps;
  s.cfg.use_solver = !f.no_solver;
  s.cfg.solver_path = f.solver;
  s.cfg.havoc_memo = !f.no_havoc_memo;
  if (!f.trace.empty()) {
    s.trace_file = std::make_unique<std::ofstream>(f.trace);
    if (!*s.trace_file) throw std::runtime_error("cannot write " + f.trace);
    s.cfg.trace = s.trace_file.get();
  }
  return s;
}

json pc_json(const scv::PathCondition& pc) {
  json a = json::array();
  if (pc) {
    for (const auto& fact : pc->facts) a.push_back(scv::print(fact));
  }
  return a;
}

int cmd_verify(const Flags& f) {
  Session s = prepare(f);
  scv::AnalysisResult r = scv::run_fixpoint(s.program, s.cfg);
  int potential = int(r.blames.size());
  int verified = std::max(0, r.checks - potential);
  if (f.format == "json") {
    json j;
    j["schema"] = kJsonSchema;
    j["file"] = f.path;
    j["checks"] = r.checks;
    j["verified"] = verified;
    j["potential"] = potential;
    j["inconclusive"] = r.inconclusive;
    j["states"] = r.explored_states;
    j["steps"] = r.steps;
    j["blames"] = json::array();
    for (const auto& b : r.blames) {
      j["blames"].push_back({{"positive", b.blame.pos.name},
                             {"negative", b.blame.neg.name},
                             {"position", b.blame.where.str()},
                             {"path_condition", pc_json(b.witness)}});
    }
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& b : r.blames) {
      std::cout << "blame " << b.blame.pos.name << " (by " << b.blame.neg.name << ") at "
                << b.blame.where.str() << "\n";
      std::cout << "  path condition: " << scv::print_pc(b.witness) << "\n";
    }
    if (r.inconclusive) std::cout << "inconclusive: step budget exhausted\n";
    std::cout << "checks: " << r.checks << ", verified: " << verified << ", potential: " << potential
              << "\n";
  }
  return potential == 0 && !r.inconclusive ? 0 : 1;
}

int cmd_run(const Flags& f) {
  Session s = prepare(f);
  if (scv::contains_opaque(*s.program) && s.cfg.policy == scv::AllocPolicy::Concrete) {
    std::cerr << "error: run needs a program without •\n";
    return 2;
  }
  scv::AnalysisResult r = scv::run_fixpoint(s.program, s.cfg);
  if (r.blames.empty() && r.answers.empty()) {
    if (f.format == "json") {
      std::cout << json{{"schema", kJsonSchema}, {"answer", nullptr}, {"budget", true}}.dump() << "\n";
    } else {
      std::cout << "no answer (budget)\n";
    }
    return 2;
  }
  if (f.format == "json") {
    json j{{"schema", kJsonSchema}};
    if (!r.blames.empty()) {
      const auto& b = r.blames.front().blame;
      j["blame"] = {{"positive", b.pos.name}, {"negative", b.neg.name}, {"position", b.where.str()}};
    } else {
      j["answer"] = scv::print_value(r.answers.front().v);
    }
    std::cout << j.dump() << "\n";
  } else if (!r.blames.empty()) {
    const auto& b = r.blames.front().blame;
    std::cout << "blame " << b.pos.name << " (by " << b.neg.name << ")\n";
  } else {
    std::cout << scv::print_value(r.answers.front().v) << "\n";
  }
  return r.blames.empty() ? 0 : 1;
}

int cmd_dump_trace(const Flags& f) {
  Session s = prepare(f);
  if (!s.cfg.trace) s.cfg.trace = &std::cout;
  scv::AnalysisResult r = scv::run_fixpoint(s.program, s.cfg);
  std::cerr << "states: " << r.explored_states << ", steps: " << r.steps << "\n";
  return 0;
}

struct FuzzFlags {
  int programs = 200;
  int trials = 20;
  std::uint64_t seed = 1;
  std::string out;
  bool serial = false;
  bool no_solver = false;
};

int cmd_fuzz(const FuzzFlags& f) {
  scv::FuzzConfig cfg;
  cfg.programs = f.programs;
  cfg.seed = f.seed;
  cfg.diff.trials = f.trials;
  cfg.diff.symbolic.use_solver = !f.no_solver;
  scv::FuzzReport r = f.serial ? scv::fuzz_serial(cfg) : scv::fuzz_parallel(cfg);
  std::cout << "programs: " << r.programs << ", trials: " << r.trials << ", skipped: " << r.skipped
            << ", concrete blames: " << r.concrete_blames << ", inconclusive programs: " << r.inconclusive
            << ", violations: " << r.violations.size() << "\n";
  if (!f.out.empty() && !r.violations.empty()) {
    std::filesystem::create_directories(f.out);
    for (std::size_t i = 0; i < r.violations.size(); ++i) {
      auto p = std::filesystem::path(f.out) / ("counterexample_" + std::to_string(i) + ".lms");
      std::ofstream(p) << scv::counterexample_text(r.violations[i]);
      std::cout << "wrote " << p.string() << "\n";
    }
  }
  return r.violations.empty() && r.approx_failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"soft contract verifier"};
  app.require_subcommand(1);

  Flags verify_flags, run_flags, trace_flags;
  auto* verify = app.add_subcommand("verify", "verify a program against its contracts");
  verify->add_option("file", verify_flags.path)->required();
  add_shared(*verify, verify_flags, "abstract");

  auto* run = app.add_subcommand("run", "run a program without • concretely");
  run->add_option("file", run_flags.path)->required();
  add_shared(*run, run_flags, "concrete");

  auto* dump = app.add_subcommand("dump-trace", "print every explored state");
  dump->add_option("file", trace_flags.path)->required();
  add_shared(*dump, trace_flags, "abstract");

  FuzzFlags fuzz_flags;
  auto* fuzz = app.add_subcommand("fuzz", "differential soundness testing on generated programs");
  fuzz->add_option("--programs", fuzz_flags.programs, "hole programs to check");
  fuzz->add_option("--trials", fuzz_flags.trials, "instantiations per program");
  fuzz->add_option("--seed", fuzz_flags.seed, "generator seed");
  fuzz->add_option("--out", fuzz_flags.out, "directory for counterexample .lms files");
  fuzz->add_flag("--serial", fuzz_flags.serial, "disable parallel trials");
  fuzz->add_flag("--no-solver", fuzz_flags.no_solver, "syntactic feasibility checks only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*verify) return cmd_verify(verify_flags);
    if (*run) return cmd_run(run_flags);
    if (*dump) return cmd_dump_trace(trace_flags);
    if (*fuzz) return cmd_fuzz(fuzz_flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
