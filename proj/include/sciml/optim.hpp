#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "sciml/objective.hpp"

namespace sciml {

/// Global-norm clip applied to gradients before first-order steps; keeps the
/// sentinel-loss regions from poisoning the moment estimates.
inline constexpr double kGradClipNorm = 1e3;

struct AdamState {
  Vec m, v;
  long t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(std::size_t n, double lr = 1e-3);

/// Bias-corrected Adam update. Returns false (params and state untouched)
/// when the gradient contains non-finite entries.
bool adam_step(AdamState& st, ParamVector& params, const ParamVector& grad);

struct RmsPropState {
  Vec v;
  double lr = 1e-3;
  double rho = 0.9;
  double eps = 1e-8;
};

RmsPropState make_rmsprop(std::size_t n, double lr = 1e-3, double rho = 0.9,
                          double eps = 1e-8);

/// v <- rho*v + (1-rho)*g^2; params <- params - lr*g/(sqrt(v)+eps).
bool rmsprop_step(RmsPropState& st, ParamVector& params, const ParamVector& grad);

struct LbfgsOptions {
  int memory = 10;
  double c1 = 1e-4;            // Armijo sufficient-decrease constant
  double backtrack = 0.5;
  int max_ls_evals = 25;
  double curvature_min = 1e-10;  // skip (s,y) pairs with s'y below this
};

struct LbfgsResult {
  ParamVector params;
  std::vector<double> losses;  // accepted losses, monotone non-increasing
  bool line_search_failed = false;
  int iterations = 0;
};

/// Two-loop-recursion L-BFGS with Armijo backtracking. A failed line search
/// falls back to a tiny steepest-descent step; a second consecutive failure
/// terminates the run with the flag set. `loss_only`, when provided, is used
/// for line-search trial evaluations.
LbfgsResult lbfgs_run(const Objective& objective, ParamVector params,
                      const LbfgsOptions& opts, int iters,
                      const LossFn* loss_only = nullptr);

enum class PhaseKind { Adam, RmsProp, Lbfgs };

PhaseKind phase_kind_from_string(std::string_view name);
std::string_view to_string(PhaseKind k);

struct Phase {
  PhaseKind kind = PhaseKind::Adam;
  int iters = 100;
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999;  // Adam
  double rho = 0.9;                   // RMSProp
  double eps = 1e-8;
};

struct TrainSchedule {
  std::vector<Phase> phases;
  int log_every = 1;
};

struct TraceRow {
  int phase = 0;  // 0 is the pre-training evaluation
  int iteration = 0;
  double loss = 0.0;
};

struct TrainResult {
  ParamVector params;
  std::vector<TraceRow> trace;
  double initial_loss = 0.0;  // post-initialization loss
  double final_loss = 0.0;
  bool failed = false;
  std::string error;
  std::uint64_t seed = 0;
};

void validate(const TrainSchedule& schedule);

/// Executes the phases in order, threading parameters through and logging the
/// loss per iteration at the schedule's cadence. Unrecoverable phase errors
/// are reported with the partial trace preserved.
TrainResult run_schedule(const Objective& objective, const LossFn& loss_only,
                         ParamVector params0, const TrainSchedule& schedule,
                         std::uint64_t seed);

}  // namespace sciml
