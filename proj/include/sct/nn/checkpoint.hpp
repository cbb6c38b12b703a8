#pragma once

#include <filesystem>

#include "sct/nn/model.hpp"

namespace sct::nn {

// A checkpoint is a pair of files sharing a stem:
//   <stem>.json  {"descriptor": {...}, "manifest": [{"name", "shape", "offset"}, ...]}
//   <stem>.bin   little-endian float32 values, offsets counted in elements
// Parameters are rounded to float32 on save.

void save_checkpoint(const ModelParams& params, const std::filesystem::path& stem);
ModelParams load_checkpoint(const std::filesystem::path& stem);

/// Round every parameter to float32 precision, matching what a save/load cycle produces.
void round_to_float(ModelParams& params);

}  // namespace sct::nn
