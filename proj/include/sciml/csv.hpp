#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sciml/lotka_volterra.hpp"
#include "sciml/optim.hpp"

namespace sciml {

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Writes the `t,x,y` schema, one row per time point, lossless formatting.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
std::string trajectory_csv(const Trajectory& traj);

Trajectory read_trajectory_csv(const std::filesystem::path& path);
Trajectory parse_trajectory_csv(const std::string& text);

/// `phase,iteration,loss` per logged step.
void write_loss_trace_csv(const std::filesystem::path& path,
                          const std::vector<TraceRow>& trace);

}  // namespace sciml
