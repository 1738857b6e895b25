#pragma once

// Complete run state for interrupt/resume.  Everything that influences a
// single future draw is captured: the model, the smoothed gradient, every
// particle with its random-stream state, the coordinator stream, the
// adapted MALA step sizes and the accumulated report/trace rows, so a
// resumed run continues the exact sample path and reproduces the final
// output files byte for byte.

#include <cstdint>
#include <string>
#include <vector>

#include "fekl/greedy.hpp"
#include "fekl/kernel_model.hpp"
#include "fekl/optimizer.hpp"
#include "fekl/smc/mala.hpp"
#include "fekl/smc/particle.hpp"

namespace fekl {

struct CheckpointState {
  std::string config_hash;
  std::string phase = "stages";  // "stages" while the greedy loop runs, "done" after
  FreeEnergyModel model;
  OptimizerState opt_state;
  Population pop;
  double dt_q = 0.0;  // adapted MALA step sizes at the moment of the snapshot
  double dt_z = 0.0;
  std::vector<StageReport> stages;
  std::vector<DescentTraceRow> trace;
  int total_iterations = 0;

  explicit CheckpointState(FreeEnergyModel m) : model(std::move(m)) {}
};

void save_checkpoint(const CheckpointState& state, const std::string& path);
CheckpointState load_checkpoint(const std::string& path);

}  // namespace fekl
