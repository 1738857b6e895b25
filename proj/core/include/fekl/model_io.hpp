#pragma once

// Model (de)serialization.  The on-disk form is JSON:
//   { "beta": ..., "anchor": [...],
//     "kernels": [ {"center": [...], "bandwidth": [...], "theta": ...}, ... ] }
// Doubles are emitted with shortest-round-trip precision, so load(save(m))
// reproduces the model bit for bit.

#include <string>

#include "fekl/kernel_model.hpp"

namespace fekl {

std::string model_to_json(const FreeEnergyModel& model);
FreeEnergyModel model_from_json(const std::string& text);

void save_model(const FreeEnergyModel& model, const std::string& path);
FreeEnergyModel load_model(const std::string& path);

}  // namespace fekl
