#pragma once

// Pipeline stage drivers and report emission (plot-ready CSV and JSON).
// Stages communicate through immutable cached files in the output
// directory; every floating-point reduction uses a fixed order so reports
// are byte-identical across thread counts.

#include <filesystem>
#include <functional>

#include "cuspidal/scenario.hpp"

namespace cuspidal {

// Static-partition parallel map with deterministic slot assignment.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

int default_thread_count();  // CUSPIDAL_THREADS, else hardware concurrency

std::string format_g17(double v);

struct StageContext {
  ScenarioFile sf;
  std::filesystem::path out_dir;
  int threads = 1;
  bool quiet = false;
};

// Each stage writes its report files, updates out/cache.json, and throws
// InvariantViolation (with the violated invariant named) when its checks
// fail.  `run_stages` executes the scenario's stage list in order.
void stage_sweep(StageContext& ctx);
void stage_scan(StageContext& ctx);
void stage_residues(StageContext& ctx);
void stage_ms(StageContext& ctx);
void stage_classify(StageContext& ctx);
void run_stages(StageContext& ctx, const std::vector<std::string>& stages);

// Reads the scan cache for this scenario; throws NumericError with an
// instructive message when missing or stale.
PoleScanResult load_scan_cache(const StageContext& ctx);

}  // namespace cuspidal
