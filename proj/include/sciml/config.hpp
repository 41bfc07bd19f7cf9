#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sciml/lotka_volterra.hpp"
#include "sciml/models.hpp"
#include "sciml/optim.hpp"

namespace sciml {

enum class Budget { Desk, Paper };
Budget budget_from_string(std::string_view name);
std::string_view to_string(Budget b);

/// Every tunable default in one place, loadable from a flat `key = value`
/// text file (dotted keys, `#` comments). Unknown keys are rejected;
/// dump_config emits the full reference.
struct RunConfig {
  // ground-truth system
  double lv_alpha = 1.5, lv_beta = 1.0, lv_gamma = 0.5, lv_delta = 2.0;

  // dataset grid and noise
  double data_t0 = 0.0, data_t1 = 10.0;
  int data_points = 101;
  double data_x0 = 1.0, data_y0 = 1.0;
  double data_sigma = 0.0;
  std::uint64_t data_noise_seed = 9001;

  // adaptive-solver tolerances (ground truth and adjoint cross-checks)
  double tol_reltol = 1e-8, tol_abstol = 1e-8;
  double tol_dt_init = 1e-3, tol_dt_min = 1e-12;
  long tol_max_steps = 10'000'000;

  // training rollout
  int train_substeps = 4;
  std::uint64_t train_seed = 1;
  int train_log_every = 10;

  // model architectures
  std::vector<int> node_widths = {2, 100, 100, 100, 2};
  std::string node_activation = "rbf";
  std::vector<int> ude_widths = {2, 10, 10, 10, 1};
  std::string ude_activation = "relu";

  // full-budget schedules
  int node_adam_iters = 400;
  double node_adam_lr = 1e-3;
  int node_lbfgs_iters = 100;
  int ude_adam_iters = 20'000;
  double ude_adam_lr = 1e-2;
  int ude_rmsprop_iters = 5'000;
  double ude_rmsprop_lr = 1e-3;
  double ude_rmsprop_rho = 0.9;
  double ude_rmsprop_eps = 1e-8;

  // reduced budgets for sweeps
  int node_desk_adam_iters = 300;
  int node_desk_lbfgs_iters = 50;
  int ude_desk_adam_iters = 2'000;
  int ude_desk_rmsprop_iters = 500;

  // studies
  std::vector<double> sweep_fractions = {0.9, 0.5, 0.4, 0.35, 0.31, 0.3};
  double sweep_threshold = 1.0;
  std::vector<std::uint64_t> sweep_seeds = {1, 2, 3};
  std::vector<double> sweep_sigmas = {0.0, 0.05, 0.1, 0.3};
  double sweep_noise_split = 0.5;
  std::vector<int> sweep_hidden_units = {5, 10, 25, 50, 100};
  std::vector<std::string> sweep_activations = {"rbf", "relu", "tanh", "sigmoid"};
  std::vector<double> sweep_step_sizes = {1e-4, 1e-3, 1e-2};
  int sweep_jobs = 0;  // 0 = hardware concurrency

  double forecast_t_end = 20.0;
  std::string out_dir = "out";
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
void apply_config_line(RunConfig& cfg, const std::string& line);
std::string dump_config(const RunConfig& cfg);

// Derived objects.
LvParams lv_params(const RunConfig& cfg);
StateVec initial_state(const RunConfig& cfg);
ToleranceSpec tolerance(const RunConfig& cfg);
DiffModel build_model(const RunConfig& cfg, ModelKind kind);
TrainSchedule build_schedule(const RunConfig& cfg, ModelKind kind, Budget budget);

}  // namespace sciml
