#pragma once

// Batch drivers: wire a validated configuration into populations, the greedy
// loop and the continuation sweeps, and emit every artifact (model, grid,
// trace, diagnostics, report, checkpoint, summary) into the output
// directory.  All files are deterministic functions of config + seed.

#include <memory>
#include <string>
#include <vector>

#include "fekl/config.hpp"
#include "fekl/context.hpp"

namespace fekl {

struct RunOutcome {
  // 0 converged (or requested stop honored), 2 optimization budget
  // exhausted before the gain tolerance was met.  Numerical failures and
  // config errors leave via exceptions; the CLI maps those to codes 3 and 4.
  int exit_code = 0;
  std::string status;   // "converged" | "budget_exhausted" | "interrupted"
  std::string output_dir;
};

// The sampling context for a configured system plus presentation metadata.
struct BuiltContext {
  std::unique_ptr<SamplingContext> ctx;
  std::vector<std::string> axis_names;
  // The bare reaction-coordinate system for kinds that have one (used by the
  // spring-stiffness continuation); null for purely alchemical systems.
  std::shared_ptr<const ReactionCoordinateSystem> inner_rc;
};
BuiltContext make_context(const RunConfig& cfg);

// Config output_dir unless the FEKL_OUTPUT_DIR environment variable is set.
std::string resolve_output_dir(const RunConfig& cfg);

// Single-temperature estimation (greedy loop at cfg.beta).  `resume_path`
// continues a checkpointed run; the finished artifacts are then identical to
// an uninterrupted run's.
RunOutcome run_single_temperature(const RunConfig& cfg, const std::string& resume_path = "");

// Temperature (or spring-stiffness) continuation: cold-start greedy loop at
// cfg.beta, then the configured sweep, emitting one model + grid per
// intermediate parameter value and the parameter-sequence table.
RunOutcome run_temper_sweep(const RunConfig& cfg);

}  // namespace fekl
