#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tcflow/runtime.hpp"

namespace tcflow {

// Desk-scale synthetic workloads: an option-pricing pipeline with serial
// read/write chains, a non-linear processing pipeline with block-sized
// tasks, and a skewed-duration workload that exercises stealing.
struct BenchOptions {
  std::vector<uint32_t> pes = {1, 2, 4};
  uint32_t runs = 5;  // median-of-N, per point
  bool stealing = true;

  // blackscholes_lite
  uint32_t bs_tasks = 8;
  uint32_t bs_opts_per_task = 150000;

  // pipeline_lite
  uint32_t pl_items = 60;
  uint32_t pl_block = 5;  // items per task
  double pl_cost_ms = 1.0;

  // imbalance
  uint32_t imb_tasks = 24;
  double imb_base_ms = 24.0;
  double imb_ratio = 0.82;
};

struct BenchPoint {
  uint32_t n_pes = 1;
  double median_ms = 0.0;
  double speedup = 1.0;
  uint64_t steals = 0;
  uint64_t fired = 0;
};

struct BenchReport {
  std::string workload;
  std::vector<BenchPoint> points;
  std::string result_line;  // identical across every run by construction

  std::string table() const;
  std::string csv() const;
};

extern const std::vector<std::string> kBenchWorkloads;

// Compiled workload: template graph, native registrations, fixed task
// count and the placement override the workload wants (if any).
struct Workload {
  std::shared_ptr<const GraphIR> graph;
  Registry registry;
  uint32_t n_tasks = 1;
  bool place_all_on_pe0 = false;  // imbalance: serialize without stealing
};

// Builds a workload from source the same way cmd_build would. Throws
// CompileError for unknown names (message lists the known ones).
Workload build_workload(const std::string& name, const BenchOptions& opt);

// The annotated source text of a workload (also used by tests).
std::string workload_source(const std::string& name, const BenchOptions& opt);

// One measured run; result-checks against `expect_result` when non-empty.
RunOutcome run_workload_once(const Workload& w, uint32_t n_pes, bool stealing, uint64_t seed);

BenchReport run_bench(const std::string& name, const BenchOptions& opt);

}  // namespace tcflow
