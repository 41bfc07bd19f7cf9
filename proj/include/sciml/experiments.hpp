#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sciml/config.hpp"
#include "sciml/sensitivity.hpp"

namespace sciml {

struct SplitSpec {
  double train_fraction = 0.9;
  bool allow_empty_test = false;  // required to accept train_fraction == 1
};

/// Prefix/suffix split by index on an N-point grid: the training prefix gets
/// floor(fraction*(N-1)) + 1 points. Train and test reconstruct the input.
std::pair<Trajectory, Trajectory> split_train_forecast(const Trajectory& traj,
                                                       const SplitSpec& spec);

struct RmseTriple {
  double x = 0.0, y = 0.0, total = 0.0;  // total over the stacked 2N residuals
};

RmseTriple rmse(const Trajectory& pred, const Trajectory& actual);

/// Rollout on a uniform grid with the given spacing out to t_end.
Trajectory forecast_extended(const DiffModel& m, const ParamVector& params,
                             const StateVec& init, double t_end, double spacing,
                             int substeps);

// ---------------------------------------------------------------------------
// Study reports. JSON schemas are versioned and field names frozen; infinite
// values (diverged forecasts) serialize as null.
// ---------------------------------------------------------------------------

struct BreakdownCell {
  ModelKind kind = ModelKind::NeuralOde;
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double train_loss = 0.0;
  double forecast_rmse = 0.0;
  bool broken = false;
  bool ok = true;
  std::string error;
};

struct KindBreakdownSummary {
  ModelKind kind = ModelKind::NeuralOde;
  std::vector<double> median_rmse;  // aligned with fractions
  std::vector<bool> broken;         // median > threshold
  double breakdown_fraction = 0.0;  // largest flagged fraction; 0 when none
};

struct BreakdownReport {
  std::string schema = "breakdown-report/v1";
  double threshold = 1.0;
  std::vector<double> fractions;  // strictly decreasing sweep order
  std::vector<std::uint64_t> seeds;
  std::vector<BreakdownCell> cells;
  std::vector<KindBreakdownSummary> summary;
};

struct NoiseCell {
  ModelKind kind = ModelKind::NeuralOde;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t noise_seed = 0;
  double final_loss = 0.0;
  double rmse_x = 0.0, rmse_y = 0.0, rmse_total = 0.0;
  double loss_increase_pct = 0.0;  // vs the sigma = 0 cell of the same kind/seed
  bool ok = true;
  std::string error;
};

struct NoiseReport {
  std::string schema = "noise-report/v1";
  double split_fraction = 0.5;
  std::vector<double> sigmas;
  std::vector<std::uint64_t> seeds;
  std::vector<ModelKind> kinds;
  std::vector<NoiseCell> cells;
};

struct SweepCell {
  std::string value;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
  bool ok = true;
  std::string error;
};

struct SweepReport {
  std::string schema = "sweep-report/v1";
  std::string axis;  // hidden_units | activation | step_size
  ModelKind kind = ModelKind::NeuralOde;
  std::vector<std::string> values;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCell> cells;
};

std::string to_json_string(const BreakdownReport& r);
std::string to_json_string(const NoiseReport& r);
std::string to_json_string(const SweepReport& r);
BreakdownReport parse_breakdown_report(const std::string& text);
NoiseReport parse_noise_report(const std::string& text);
SweepReport parse_sweep_report(const std::string& text);

/// Flattened rows: kind,fraction,seed,train_loss,forecast_rmse,broken
std::string to_csv(const BreakdownReport& r);
/// kind,sigma,seed,noise_seed,final_loss,rmse_total,loss_increase_pct
std::string to_csv(const NoiseReport& r);
/// kind,axis,value,seed,final_loss
std::string to_csv(const SweepReport& r);

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

/// One end-to-end training cell: split, init, schedule, forecast evaluation.
struct TrainRun {
  DiffModel model;
  TrainResult result;
  RmseTriple forecast_rmse;      // held-out suffix vs clean truth (inf if diverged)
  double loss_decrease_pct = 0;  // vs the post-initialization loss
  int n_train = 0;
};

/// Trains `kind` on the prefix of `data` (noisy or clean) and evaluates the
/// forecast on the suffix against `truth`. `data` and `truth` share a grid.
TrainRun train_and_evaluate(const RunConfig& cfg, ModelKind kind, const Trajectory& data,
                            const Trajectory& truth, double fraction,
                            std::uint64_t seed, Budget budget);

/// Trains at every (fraction, seed) with the kind's default schedule; flags a
/// fraction broken when the median forecast RMSE over seeds exceeds the
/// threshold. Per-cell failures are recorded and the sweep continues.
BreakdownReport breakdown_sweep(ModelKind kind, const std::vector<double>& fractions,
                                double threshold,
                                const std::vector<std::uint64_t>& seeds,
                                const RunConfig& cfg, Budget budget);

/// Combines per-kind reports over the same grid into one.
BreakdownReport merge_breakdown(const BreakdownReport& a, const BreakdownReport& b);

/// Per (sigma, kind, seed): fresh noisy dataset, default-schedule training,
/// final loss, forecast RMSE on the held-out half, loss-increase vs the
/// sigma = 0 baseline (inserted automatically when missing).
NoiseReport noise_study(std::vector<double> sigmas, const std::vector<ModelKind>& kinds,
                        const std::vector<std::uint64_t>& seeds, const RunConfig& cfg,
                        Budget budget);

/// Grid sweep over one axis (hidden_units widths, activation, or first-order
/// step size) at desk-scale budgets, recording the final training loss.
SweepReport hyperparam_sweep(const std::string& axis,
                             const std::vector<std::string>& values, ModelKind kind,
                             const std::vector<std::uint64_t>& seeds,
                             const RunConfig& cfg, Budget budget);

/// Runs fn(0..n-1) on up to `jobs` threads (0 = hardware concurrency).
/// Results must be written to disjoint slots; cell order in reports is fixed
/// regardless of scheduling.
void run_parallel(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

double median(std::vector<double> v);

}  // namespace sciml
