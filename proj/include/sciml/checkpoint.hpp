#pragma once

#include <cstdint>
#include <filesystem>

#include "sciml/models.hpp"

namespace sciml {

/// Saved model = JSON envelope {kind, known rates, init seed} wrapping one
/// checkpoint per network {widths, activation, seed, count, params} with the
/// flat parameter layout; lossless decimal encoding.
void save_model_checkpoint(const std::filesystem::path& path, const DiffModel& m,
                           const ParamVector& params, std::uint64_t seed);

struct LoadedModel {
  DiffModel model;
  ParamVector params;
  std::uint64_t seed = 0;
};

LoadedModel load_model_checkpoint(const std::filesystem::path& path);

}  // namespace sciml
