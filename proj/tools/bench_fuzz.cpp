#include <chrono>
#include <cstdlib>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "scv/soundness_harness.hpp"

int main(int argc, char** argv) {
  scv::FuzzConfig cfg;
  cfg.programs = argc > 1 ? std::atoi(argv[1]) : 50;
  cfg.diff.trials = argc > 2 ? std::atoi(argv[2]) : 20;
  cfg.seed = 11;

  auto time = [&](auto fn) {
    auto t0 = std::chrono::steady_clock::now();
    scv::FuzzReport r = fn(cfg);
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::make_pair(r, s);
  };
  auto [serial, ts] = time(scv::fuzz_serial);
  auto [parallel, tp] = time(scv::fuzz_parallel);

  int threads = 1;
#ifdef _OPENMP
  threads = omp_get_max_threads();
#endif
  bool same = serial.trials == parallel.trials && serial.skipped == parallel.skipped &&
              serial.concrete_blames == parallel.concrete_blames &&
              serial.violations.size() == parallel.violations.size();
  std::cout << "programs " << cfg.programs << ", trials " << serial.trials << ", threads " << threads << "\n"
            << "serial   " << ts << " s\n"
            << "parallel " << tp << " s (speedup " << ts / tp << ")\n"
            << "reports " << (same ? "identical" : "DIFFER") << "\n";
  return same ? 0 : 1;
}
