#include "sciml/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "sciml/rng.hpp"

namespace sciml {

using nlohmann::json;

std::pair<Trajectory, Trajectory> split_train_forecast(const Trajectory& traj,
                                                       const SplitSpec& spec) {
  validate(traj);
  const std::size_t n = traj.size();
  if (!(spec.train_fraction > 0.0) || spec.train_fraction > 1.0)
    throw std::invalid_argument("split: train_fraction must lie in (0, 1]");

  std::size_t n_train;
  if (spec.train_fraction == 1.0) {
    if (!spec.allow_empty_test)
      throw std::invalid_argument("split: empty test requires allow_empty_test");
    n_train = n;
  } else {
    n_train = static_cast<std::size_t>(
                  std::floor(spec.train_fraction * static_cast<double>(n - 1))) +
              1;
  }
  if (n_train < 2) throw std::invalid_argument("split: needs at least 2 training points");

  Trajectory train{{traj.times.begin(), traj.times.begin() + n_train},
                   {traj.states.begin(), traj.states.begin() + n_train}};
  Trajectory test{{traj.times.begin() + n_train, traj.times.end()},
                  {traj.states.begin() + n_train, traj.states.end()}};
  return {std::move(train), std::move(test)};
}

RmseTriple rmse(const Trajectory& pred, const Trajectory& actual) {
  if (pred.times != actual.times)
    throw std::invalid_argument("rmse: time grids differ");
  if (pred.times.empty()) throw std::invalid_argument("rmse: empty trajectories");

  const auto n = static_cast<double>(pred.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred.states[i].x - actual.states[i].x;
    const double dy = pred.states[i].y - actual.states[i].y;
    sx += dx * dx;
    sy += dy * dy;
  }
  return {std::sqrt(sx / n), std::sqrt(sy / n), std::sqrt((sx + sy) / (2.0 * n))};
}

Trajectory forecast_extended(const DiffModel& m, const ParamVector& params,
                             const StateVec& init, double t_end, double spacing,
                             int substeps) {
  if (!(t_end > 0.0) || !(spacing > 0.0))
    throw std::invalid_argument("forecast_extended: t_end and spacing must be > 0");
  const int n = static_cast<int>(std::llround(t_end / spacing)) + 1;
  RolloutConfig cfg{substeps, uniform_grid(0.0, t_end, n)};
  return rollout(m, params, init, cfg);
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

namespace {

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double null_or_num(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

json cell_json(const BreakdownCell& c) {
  return {{"kind", to_string(c.kind)},     {"fraction", c.fraction},
          {"seed", c.seed},                {"train_loss", num_or_null(c.train_loss)},
          {"forecast_rmse", num_or_null(c.forecast_rmse)}, {"broken", c.broken},
          {"ok", c.ok},                    {"error", c.error}};
}

BreakdownCell cell_from_json(const json& j) {
  BreakdownCell c;
  c.kind = model_kind_from_string(j.at("kind").get<std::string>());
  c.fraction = j.at("fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.train_loss = null_or_num(j.at("train_loss"));
  c.forecast_rmse = null_or_num(j.at("forecast_rmse"));
  c.broken = j.at("broken").get<bool>();
  c.ok = j.at("ok").get<bool>();
  c.error = j.at("error").get<std::string>();
  return c;
}

}  // namespace

std::string to_json_string(const BreakdownReport& r) {
  json doc;
  doc["schema"] = r.schema;
  doc["threshold"] = r.threshold;
  doc["fractions"] = r.fractions;
  doc["seeds"] = r.seeds;
  doc["cells"] = json::array();
  for (const BreakdownCell& c : r.cells) doc["cells"].push_back(cell_json(c));
  doc["summary"] = json::array();
  for (const KindBreakdownSummary& s : r.summary) {
    json medians = json::array();
    for (double v : s.median_rmse) medians.push_back(num_or_null(v));
    doc["summary"].push_back({{"kind", to_string(s.kind)},
                              {"median_rmse", medians},
                              {"broken", s.broken},
                              {"breakdown_fraction", s.breakdown_fraction}});
  }
  return doc.dump(2) + "\n";
}

BreakdownReport parse_breakdown_report(const std::string& text) {
  const json doc = json::parse(text);
  BreakdownReport r;
  r.schema = doc.at("schema").get<std::string>();
  if (r.schema != "breakdown-report/v1")
    throw std::runtime_error("breakdown report: unknown schema " + r.schema);
  r.threshold = doc.at("threshold").get<double>();
  r.fractions = doc.at("fractions").get<std::vector<double>>();
  r.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  for (const json& j : doc.at("cells")) r.cells.push_back(cell_from_json(j));
  for (const json& j : doc.at("summary")) {
    KindBreakdownSummary s;
    s.kind = model_kind_from_string(j.at("kind").get<std::string>());
    for (const json& v : j.at("median_rmse")) s.median_rmse.push_back(null_or_num(v));
    s.broken = j.at("broken").get<std::vector<bool>>();
    s.breakdown_fraction = j.at("breakdown_fraction").get<double>();
    r.summary.push_back(std::move(s));
  }
  return r;
}

std::string to_json_string(const NoiseReport& r) {
  json doc;
  doc["schema"] = r.schema;
  doc["split_fraction"] = r.split_fraction;
  doc["sigmas"] = r.sigmas;
  doc["seeds"] = r.seeds;
  doc["kinds"] = json::array();
  for (ModelKind k : r.kinds) doc["kinds"].push_back(to_string(k));
  doc["cells"] = json::array();
  for (const NoiseCell& c : r.cells)
    doc["cells"].push_back({{"kind", to_string(c.kind)},
                            {"sigma", c.sigma},
                            {"seed", c.seed},
                            {"noise_seed", c.noise_seed},
                            {"final_loss", num_or_null(c.final_loss)},
                            {"rmse_x", num_or_null(c.rmse_x)},
                            {"rmse_y", num_or_null(c.rmse_y)},
                            {"rmse_total", num_or_null(c.rmse_total)},
                            {"loss_increase_pct", num_or_null(c.loss_increase_pct)},
                            {"ok", c.ok},
                            {"error", c.error}});
  return doc.dump(2) + "\n";
}

NoiseReport parse_noise_report(const std::string& text) {
  const json doc = json::parse(text);
  NoiseReport r;
  r.schema = doc.at("schema").get<std::string>();
  if (r.schema != "noise-report/v1")
    throw std::runtime_error("noise report: unknown schema " + r.schema);
  r.split_fraction = doc.at("split_fraction").get<double>();
  r.sigmas = doc.at("sigmas").get<std::vector<double>>();
  r.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  for (const json& j : doc.at("kinds"))
    r.kinds.push_back(model_kind_from_string(j.get<std::string>()));
  for (const json& j : doc.at("cells")) {
    NoiseCell c;
    c.kind = model_kind_from_string(j.at("kind").get<std::string>());
    c.sigma = j.at("sigma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.noise_seed = j.at("noise_seed").get<std::uint64_t>();
    c.final_loss = null_or_num(j.at("final_loss"));
    c.rmse_x = null_or_num(j.at("rmse_x"));
    c.rmse_y = null_or_num(j.at("rmse_y"));
    c.rmse_total = null_or_num(j.at("rmse_total"));
    c.loss_increase_pct = null_or_num(j.at("loss_increase_pct"));
    c.ok = j.at("ok").get<bool>();
    c.error = j.at("error").get<std::string>();
    r.cells.push_back(std::move(c));
  }
  return r;
}

std::string to_json_string(const SweepReport& r) {
  json doc;
  doc["schema"] = r.schema;
  doc["axis"] = r.axis;
  doc["kind"] = to_string(r.kind);
  doc["values"] = r.values;
  doc["seeds"] = r.seeds;
  doc["cells"] = json::array();
  for (const SweepCell& c : r.cells)
    doc["cells"].push_back({{"value", c.value},
                            {"seed", c.seed},
                            {"final_loss", num_or_null(c.final_loss)},
                            {"ok", c.ok},
                            {"error", c.error}});
  return doc.dump(2) + "\n";
}

SweepReport parse_sweep_report(const std::string& text) {
  const json doc = json::parse(text);
  SweepReport r;
  r.schema = doc.at("schema").get<std::string>();
  if (r.schema != "sweep-report/v1")
    throw std::runtime_error("sweep report: unknown schema " + r.schema);
  r.axis = doc.at("axis").get<std::string>();
  r.kind = model_kind_from_string(doc.at("kind").get<std::string>());
  r.values = doc.at("values").get<std::vector<std::string>>();
  r.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
  for (const json& j : doc.at("cells")) {
    SweepCell c;
    c.value = j.at("value").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.final_loss = null_or_num(j.at("final_loss"));
    c.ok = j.at("ok").get<bool>();
    c.error = j.at("error").get<std::string>();
    r.cells.push_back(std::move(c));
  }
  return r;
}

namespace {

std::string csv_num(double v) {
  return std::isfinite(v) ? nlohmann::json(v).dump() : std::string("inf");
}

}  // namespace

std::string to_csv(const BreakdownReport& r) {
  std::string out = "kind,fraction,seed,train_loss,forecast_rmse,broken\n";
  for (const BreakdownCell& c : r.cells) {
    out += std::string(to_string(c.kind)) + ',' + csv_num(c.fraction) + ',' +
           std::to_string(c.seed) + ',' + csv_num(c.train_loss) + ',' +
           csv_num(c.forecast_rmse) + ',' + (c.broken ? "1" : "0") + '\n';
  }
  return out;
}

std::string to_csv(const NoiseReport& r) {
  std::string out = "kind,sigma,seed,noise_seed,final_loss,rmse_total,loss_increase_pct\n";
  for (const NoiseCell& c : r.cells) {
    out += std::string(to_string(c.kind)) + ',' + csv_num(c.sigma) + ',' +
           std::to_string(c.seed) + ',' + std::to_string(c.noise_seed) + ',' +
           csv_num(c.final_loss) + ',' + csv_num(c.rmse_total) + ',' +
           csv_num(c.loss_increase_pct) + '\n';
  }
  return out;
}

std::string to_csv(const SweepReport& r) {
  std::string out = "kind,axis,value,seed,final_loss\n";
  for (const SweepCell& c : r.cells) {
    out += std::string(to_string(r.kind)) + ',' + r.axis + ',' + c.value + ',' +
           std::to_string(c.seed) + ',' + csv_num(c.final_loss) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

void run_parallel(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  std::size_t workers = jobs > 0 ? static_cast<std::size_t>(jobs)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& t : pool) t.join();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

TrainRun train_and_evaluate(const RunConfig& cfg, ModelKind kind, const Trajectory& data,
                            const Trajectory& truth, double fraction,
                            std::uint64_t seed, Budget budget) {
  if (data.times != truth.times)
    throw std::invalid_argument("train_and_evaluate: data/truth grids differ");

  TrainRun run;
  run.model = build_model(cfg, kind);

  SplitSpec split{fraction, fraction == 1.0};
  auto [train, test] = split_train_forecast(data, split);
  run.n_train = static_cast<int>(train.size());

  const RolloutConfig rollout_cfg{cfg.train_substeps, train.times};
  const DiffModel& model = run.model;
  const Objective objective = [&model, &train, &rollout_cfg](const ParamVector& p) {
    return loss_and_grad_discrete(model, p, train, rollout_cfg);
  };
  const LossFn loss_only = [&model, &train, &rollout_cfg](const ParamVector& p) {
    return loss_discrete(model, p, train, rollout_cfg);
  };

  run.result = run_schedule(objective, loss_only, model_init(model, seed),
                            build_schedule(cfg, kind, budget), seed);
  run.loss_decrease_pct =
      run.result.initial_loss > 0.0
          ? 100.0 * (run.result.initial_loss - run.result.final_loss) /
                run.result.initial_loss
          : 0.0;

  // Forecast over the full grid; a divergent rollout counts as an infinite
  // forecast error, not a failed cell.
  const double inf = std::numeric_limits<double>::infinity();
  if (!test.times.empty() && !run.result.failed) {
    try {
      RolloutConfig full_cfg{cfg.train_substeps, data.times};
      const Trajectory pred = rollout(model, run.result.params, data.states[0], full_cfg);
      Trajectory pred_tail{{pred.times.begin() + run.n_train, pred.times.end()},
                           {pred.states.begin() + run.n_train, pred.states.end()}};
      Trajectory truth_tail{{truth.times.begin() + run.n_train, truth.times.end()},
                            {truth.states.begin() + run.n_train, truth.states.end()}};
      run.forecast_rmse = rmse(pred_tail, truth_tail);
    } catch (const IntegrationError&) {
      run.forecast_rmse = {inf, inf, inf};
    }
  } else if (run.result.failed) {
    run.forecast_rmse = {inf, inf, inf};
  }
  return run;
}

namespace {

void check_fractions(const std::vector<double>& fractions) {
  if (fractions.empty()) throw std::invalid_argument("breakdown_sweep: no fractions");
  for (double f : fractions)
    if (!(f > 0.0) || !(f < 1.0))
      throw std::invalid_argument("breakdown_sweep: fractions must lie in (0, 1)");
  for (std::size_t i = 1; i < fractions.size(); ++i)
    if (!(fractions[i] < fractions[i - 1]))
      throw std::invalid_argument("breakdown_sweep: fractions must be strictly decreasing");
}

KindBreakdownSummary summarize_kind(ModelKind kind, const BreakdownReport& r) {
  KindBreakdownSummary s;
  s.kind = kind;
  for (double f : r.fractions) {
    std::vector<double> vals;
    for (const BreakdownCell& c : r.cells)
      if (c.kind == kind && c.fraction == f && c.ok) vals.push_back(c.forecast_rmse);
    const double med = median(std::move(vals));
    s.median_rmse.push_back(med);
    s.broken.push_back(!(med <= r.threshold));  // NaN (no data) counts as broken
  }
  s.breakdown_fraction = 0.0;
  for (std::size_t i = 0; i < r.fractions.size(); ++i)
    if (s.broken[i])
      s.breakdown_fraction = std::max(s.breakdown_fraction, r.fractions[i]);
  return s;
}

}  // namespace

BreakdownReport breakdown_sweep(ModelKind kind, const std::vector<double>& fractions,
                                double threshold,
                                const std::vector<std::uint64_t>& seeds,
                                const RunConfig& cfg, Budget budget) {
  check_fractions(fractions);
  if (seeds.empty()) throw std::invalid_argument("breakdown_sweep: no seeds");

  const Trajectory truth =
      generate_truth(lv_params(cfg), initial_state(cfg), cfg.data_t0, cfg.data_t1,
                     cfg.data_points, tolerance(cfg));

  BreakdownReport report;
  report.threshold = threshold;
  report.fractions = fractions;
  report.seeds = seeds;
  report.cells.resize(fractions.size() * seeds.size());

  run_parallel(report.cells.size(), cfg.sweep_jobs, [&](std::size_t idx) {
    const std::size_t fi = idx / seeds.size();
    const std::size_t si = idx % seeds.size();
    BreakdownCell& cell = report.cells[idx];
    cell.kind = kind;
    cell.fraction = fractions[fi];
    cell.seed = seeds[si];
    try {
      const TrainRun run =
          train_and_evaluate(cfg, kind, truth, truth, fractions[fi], seeds[si], budget);
      cell.train_loss = run.result.final_loss;
      cell.forecast_rmse = run.forecast_rmse.total;
      cell.broken = !(cell.forecast_rmse <= threshold);
      if (run.result.failed) {
        cell.ok = false;
        cell.error = run.result.error;
      }
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
      cell.forecast_rmse = std::numeric_limits<double>::infinity();
      cell.broken = true;
    }
  });

  report.summary.push_back(summarize_kind(kind, report));
  return report;
}

BreakdownReport merge_breakdown(const BreakdownReport& a, const BreakdownReport& b) {
  if (a.fractions != b.fractions || a.threshold != b.threshold || a.seeds != b.seeds)
    throw std::invalid_argument("merge_breakdown: mismatched sweep grids");
  BreakdownReport r = a;
  r.cells.insert(r.cells.end(), b.cells.begin(), b.cells.end());
  r.summary.insert(r.summary.end(), b.summary.begin(), b.summary.end());
  return r;
}

NoiseReport noise_study(std::vector<double> sigmas, const std::vector<ModelKind>& kinds,
                        const std::vector<std::uint64_t>& seeds, const RunConfig& cfg,
                        Budget budget) {
  if (sigmas.empty() || kinds.empty() || seeds.empty())
    throw std::invalid_argument("noise_study: empty axis");
  for (double s : sigmas)
    if (s < 0.0) throw std::invalid_argument("noise_study: sigma must be >= 0");
  // The loss-increase baseline is the sigma = 0 cell.
  if (std::find(sigmas.begin(), sigmas.end(), 0.0) == sigmas.end())
    sigmas.insert(sigmas.begin(), 0.0);

  const Trajectory truth =
      generate_truth(lv_params(cfg), initial_state(cfg), cfg.data_t0, cfg.data_t1,
                     cfg.data_points, tolerance(cfg));

  NoiseReport report;
  report.split_fraction = cfg.sweep_noise_split;
  report.sigmas = sigmas;
  report.seeds = seeds;
  report.kinds = kinds;
  report.cells.resize(kinds.size() * sigmas.size() * seeds.size());

  run_parallel(report.cells.size(), cfg.sweep_jobs, [&](std::size_t idx) {
    const std::size_t ki = idx / (sigmas.size() * seeds.size());
    const std::size_t gi = (idx / seeds.size()) % sigmas.size();
    const std::size_t si = idx % seeds.size();
    NoiseCell& cell = report.cells[idx];
    cell.kind = kinds[ki];
    cell.sigma = sigmas[gi];
    cell.seed = seeds[si];
    cell.noise_seed = Rng::derive(cfg.data_noise_seed, gi * 1000 + si);
    try {
      const Trajectory data = add_noise(truth, cell.sigma, cell.noise_seed);
      const TrainRun run = train_and_evaluate(cfg, cell.kind, data, truth,
                                              cfg.sweep_noise_split, cell.seed, budget);
      cell.final_loss = run.result.final_loss;
      cell.rmse_x = run.forecast_rmse.x;
      cell.rmse_y = run.forecast_rmse.y;
      cell.rmse_total = run.forecast_rmse.total;
      if (run.result.failed) {
        cell.ok = false;
        cell.error = run.result.error;
      }
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });

  // Loss-increase percentages against the sigma = 0 cell of the same
  // (kind, seed); zero for the baseline cells themselves.
  for (NoiseCell& cell : report.cells) {
    if (!cell.ok) continue;
    for (const NoiseCell& base : report.cells) {
      if (base.kind == cell.kind && base.seed == cell.seed && base.sigma == 0.0 &&
          base.ok && base.final_loss > 0.0) {
        cell.loss_increase_pct =
            100.0 * (cell.final_loss - base.final_loss) / base.final_loss;
        break;
      }
    }
  }
  return report;
}

SweepReport hyperparam_sweep(const std::string& axis,
                             const std::vector<std::string>& values, ModelKind kind,
                             const std::vector<std::uint64_t>& seeds,
                             const RunConfig& cfg, Budget budget) {
  if (values.size() < 2)
    throw std::invalid_argument("hyperparam_sweep: need at least 2 axis values");
  if (axis != "hidden_units" && axis != "activation" && axis != "step_size")
    throw std::invalid_argument("hyperparam_sweep: unknown axis " + axis);
  if (seeds.empty()) throw std::invalid_argument("hyperparam_sweep: no seeds");

  const Trajectory truth =
      generate_truth(lv_params(cfg), initial_state(cfg), cfg.data_t0, cfg.data_t1,
                     cfg.data_points, tolerance(cfg));

  SweepReport report;
  report.axis = axis;
  report.kind = kind;
  report.values = values;
  report.seeds = seeds;
  report.cells.resize(values.size() * seeds.size());

  run_parallel(report.cells.size(), cfg.sweep_jobs, [&](std::size_t idx) {
    const std::size_t vi = idx / seeds.size();
    const std::size_t si = idx % seeds.size();
    SweepCell& cell = report.cells[idx];
    cell.value = values[vi];
    cell.seed = seeds[si];
    try {
      RunConfig cell_cfg = cfg;
      auto& widths = kind == ModelKind::NeuralOde ? cell_cfg.node_widths
                                                  : cell_cfg.ude_widths;
      if (axis == "hidden_units") {
        const int h = std::stoi(cell.value);
        if (h < 1) throw std::invalid_argument("hidden_units must be >= 1");
        for (std::size_t i = 1; i + 1 < widths.size(); ++i) widths[i] = h;
      } else if (axis == "activation") {
        activation_from_string(cell.value);  // validate
        (kind == ModelKind::NeuralOde ? cell_cfg.node_activation
                                      : cell_cfg.ude_activation) = cell.value;
      } else {
        const double lr = std::stod(cell.value);
        if (!(lr > 0.0)) throw std::invalid_argument("step_size must be > 0");
        (kind == ModelKind::NeuralOde ? cell_cfg.node_adam_lr : cell_cfg.ude_adam_lr) = lr;
      }
      const TrainRun run =
          train_and_evaluate(cell_cfg, kind, truth, truth, 1.0, cell.seed, budget);
      cell.final_loss = run.result.final_loss;
      if (run.result.failed) {
        cell.ok = false;
        cell.error = run.result.error;
      }
    } catch (const std::exception& e) {
      cell.ok = false;
      cell.error = e.what();
    }
  });
  return report;
}

}  // namespace sciml
