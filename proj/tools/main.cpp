#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sciml/checkpoint.hpp"
#include "sciml/config.hpp"
#include "sciml/csv.hpp"
#include "sciml/experiments.hpp"
#include "sciml/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sciml;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

json rmse_json(const RmseTriple& r) {
  const auto val = [](double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
  };
  return {{"rmse_x", val(r.x)}, {"rmse_y", val(r.y)}, {"rmse_total", val(r.total)}};
}

Trajectory config_truth(const RunConfig& cfg) {
  return generate_truth(lv_params(cfg), initial_state(cfg), cfg.data_t0, cfg.data_t1,
                        cfg.data_points, tolerance(cfg));
}

double grid_spacing(const RunConfig& cfg) {
  return (cfg.data_t1 - cfg.data_t0) / (cfg.data_points - 1.0);
}

int cmd_generate(const RunConfig& cfg, std::optional<double> sigma,
                 std::optional<std::uint64_t> seed, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const Trajectory truth = config_truth(cfg);
  write_trajectory_csv(out_dir / "truth.csv", truth);

  const double sig = sigma.value_or(cfg.data_sigma);
  const std::uint64_t noise_seed = seed.value_or(cfg.data_noise_seed);
  json meta = {{"schema", "generate-meta/v1"},
               {"alpha", cfg.lv_alpha},
               {"beta", cfg.lv_beta},
               {"gamma", cfg.lv_gamma},
               {"delta", cfg.lv_delta},
               {"t0", cfg.data_t0},
               {"t1", cfg.data_t1},
               {"points", cfg.data_points},
               {"x0", cfg.data_x0},
               {"y0", cfg.data_y0},
               {"sigma", sig},
               {"seed", noise_seed},
               {"files", json::array({"truth.csv"})}};

  if (sigma.has_value()) {
    write_trajectory_csv(out_dir / "noisy.csv", add_noise(truth, sig, noise_seed));
    meta["files"].push_back("noisy.csv");
  }
  write_text(out_dir / "generate_meta.json", meta.dump(2) + "\n");
  std::cout << "wrote " << (out_dir / "truth.csv").string() << " (" << truth.size()
            << " rows)\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& model_name,
              const fs::path& data_path, double fraction, Budget budget,
              std::uint64_t seed, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const ModelKind kind = model_kind_from_string(model_name);
  const Trajectory data = read_trajectory_csv(data_path);

  // Held-out error is measured against the provided dataset itself; clean
  // truth is only available to the sweep studies.
  const TrainRun run = train_and_evaluate(cfg, kind, data, data, fraction, seed, budget);

  save_model_checkpoint(out_dir / "checkpoint.json", run.model, run.result.params, seed);
  write_loss_trace_csv(out_dir / "trace.csv", run.result.trace);

  json summary = {{"schema", "train-summary/v1"},
                  {"kind", to_string(kind)},
                  {"budget", to_string(budget)},
                  {"train_fraction", fraction},
                  {"n_train", run.n_train},
                  {"seed", seed},
                  {"initial_loss", run.result.initial_loss},
                  {"final_loss", run.result.final_loss},
                  {"loss_decrease_pct", run.loss_decrease_pct},
                  {"failed", run.result.failed},
                  {"error", run.result.error}};
  if (fraction < 1.0) summary["forecast_rmse_vs_data"] = rmse_json(run.forecast_rmse);
  write_text(out_dir / "summary.json", summary.dump(2) + "\n");

  std::cout << "final loss " << format_double(run.result.final_loss) << " ("
            << format_double(run.loss_decrease_pct) << "% decrease)\n";
  if (run.result.failed) {
    std::cerr << "training failed: " << run.result.error << "\n";
    return 2;
  }
  return 0;
}

int cmd_forecast(const RunConfig& cfg, const fs::path& checkpoint_path, double t_end,
                 const std::optional<fs::path>& truth_path, bool svg,
                 const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const LoadedModel loaded = load_model_checkpoint(checkpoint_path);
  const Trajectory pred =
      forecast_extended(loaded.model, loaded.params, initial_state(cfg), t_end,
                        grid_spacing(cfg), cfg.train_substeps);
  write_trajectory_csv(out_dir / "forecast.csv", pred);

  std::optional<Trajectory> truth;
  if (truth_path) {
    truth = read_trajectory_csv(*truth_path);
    // RMSE over the exactly-matching time points.
    Trajectory a, b;
    std::size_t j = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      while (j < truth->size() && truth->times[j] < pred.times[i]) ++j;
      if (j < truth->size() && truth->times[j] == pred.times[i]) {
        a.times.push_back(pred.times[i]);
        a.states.push_back(pred.states[i]);
        b.times.push_back(truth->times[j]);
        b.states.push_back(truth->states[j]);
      }
    }
    if (!a.times.empty()) {
      json out = rmse_json(rmse(a, b));
      out["schema"] = "forecast-rmse/v1";
      out["overlap_points"] = a.size();
      write_text(out_dir / "rmse.json", out.dump(2) + "\n");
    } else {
      std::cerr << "no overlapping time points with truth; rmse.json omitted\n";
    }
  }

  if (svg) {
    std::vector<SvgSeries> series;
    SvgSeries px{"prey (model)", pred.times, {}, "#1f6fb2", false};
    SvgSeries py{"predator (model)", pred.times, {}, "#c23b22", false};
    for (const StateVec& s : pred.states) {
      px.ys.push_back(s.x);
      py.ys.push_back(s.y);
    }
    series.push_back(std::move(px));
    series.push_back(std::move(py));
    if (truth) {
      SvgSeries tx{"prey (truth)", truth->times, {}, "#1f6fb2", true};
      SvgSeries ty{"predator (truth)", truth->times, {}, "#c23b22", true};
      for (const StateVec& s : truth->states) {
        tx.ys.push_back(s.x);
        ty.ys.push_back(s.y);
      }
      series.push_back(std::move(tx));
      series.push_back(std::move(ty));
    }
    write_text(out_dir / "forecast.svg",
               line_chart_svg("Forecast", "t", "population", series));
  }
  std::cout << "wrote " << (out_dir / "forecast.csv").string() << " (" << pred.size()
            << " rows)\n";
  return 0;
}

std::vector<double> kind_medians(const BreakdownReport& r, ModelKind kind) {
  for (const KindBreakdownSummary& s : r.summary)
    if (s.kind == kind) return s.median_rmse;
  return {};
}

int cmd_sweep(const RunConfig& cfg, const std::string& study, Budget budget,
              const fs::path& out_dir, bool verbose) {
  fs::create_directories(out_dir);
  const std::vector<ModelKind> kinds{ModelKind::NeuralOde, ModelKind::Ude};

  if (study == "breakdown") {
    if (verbose) std::cerr << "breakdown sweep, " << to_string(budget) << " budget\n";
    BreakdownReport node = breakdown_sweep(ModelKind::NeuralOde, cfg.sweep_fractions,
                                           cfg.sweep_threshold, cfg.sweep_seeds, cfg,
                                           budget);
    BreakdownReport ude = breakdown_sweep(ModelKind::Ude, cfg.sweep_fractions,
                                          cfg.sweep_threshold, cfg.sweep_seeds, cfg,
                                          budget);
    const BreakdownReport all = merge_breakdown(node, ude);
    write_text(out_dir / "breakdown_report.json", to_json_string(all));
    write_text(out_dir / "breakdown_report.csv", to_csv(all));

    std::vector<SvgSeries> series{
        {"neural ode", all.fractions, kind_medians(all, ModelKind::NeuralOde),
         "#1f6fb2", false},
        {"ude", all.fractions, kind_medians(all, ModelKind::Ude), "#c23b22", false},
        {"threshold", all.fractions,
         std::vector<double>(all.fractions.size(), all.threshold), "#777777", true}};
    write_text(out_dir / "breakdown.svg",
               line_chart_svg("Forecast RMSE vs training fraction", "training fraction",
                              "median forecast RMSE", series, true));
    for (const KindBreakdownSummary& s : all.summary)
      std::cout << to_string(s.kind)
                << " breakdown fraction: " << format_double(s.breakdown_fraction)
                << "\n";
    return 0;
  }

  if (study == "noise") {
    if (verbose) std::cerr << "noise study, " << to_string(budget) << " budget\n";
    const NoiseReport report =
        noise_study(cfg.sweep_sigmas, kinds, cfg.sweep_seeds, cfg, budget);
    write_text(out_dir / "noise_report.json", to_json_string(report));
    write_text(out_dir / "noise_report.csv", to_csv(report));

    std::vector<SvgSeries> series;
    for (ModelKind kind : kinds) {
      SvgSeries s{std::string(to_string(kind)), report.sigmas, {},
                  kind == ModelKind::Ude ? "#c23b22" : "#1f6fb2", false};
      for (double sigma : report.sigmas) {
        std::vector<double> vals;
        for (const NoiseCell& c : report.cells)
          if (c.kind == kind && c.sigma == sigma && c.ok) vals.push_back(c.rmse_total);
        s.ys.push_back(median(std::move(vals)));
      }
      series.push_back(std::move(s));
    }
    write_text(out_dir / "noise.svg",
               line_chart_svg("Forecast RMSE vs noise level", "noise sigma",
                              "median forecast RMSE", series));
    std::cout << "noise study: " << report.cells.size() << " cells\n";
    return 0;
  }

  if (study == "hpo") {
    const struct {
      const char* axis;
      std::vector<std::string> values;
    } axes[] = {
        {"hidden_units",
         [&] {
           std::vector<std::string> v;
           for (int h : cfg.sweep_hidden_units) v.push_back(std::to_string(h));
           return v;
         }()},
        {"activation", cfg.sweep_activations},
        {"step_size",
         [&] {
           std::vector<std::string> v;
           for (double s : cfg.sweep_step_sizes) v.push_back(format_double(s));
           return v;
         }()},
    };
    for (const auto& ax : axes) {
      for (ModelKind kind : kinds) {
        if (verbose) std::cerr << "hpo axis " << ax.axis << " " << to_string(kind) << "\n";
        const SweepReport report =
            hyperparam_sweep(ax.axis, ax.values, kind, cfg.sweep_seeds, cfg, budget);
        const std::string stem =
            std::string("hpo_") + ax.axis + "_" + std::string(to_string(kind));
        write_text(out_dir / (stem + ".json"), to_json_string(report));
        write_text(out_dir / (stem + ".csv"), to_csv(report));

        SvgSeries s{std::string(to_string(kind)), {}, {}, "#1f6fb2", false};
        for (std::size_t vi = 0; vi < report.values.size(); ++vi) {
          std::vector<double> vals;
          for (const SweepCell& c : report.cells)
            if (c.value == report.values[vi] && c.ok) vals.push_back(c.final_loss);
          s.xs.push_back(static_cast<double>(vi));
          s.ys.push_back(median(std::move(vals)));
        }
        write_text(out_dir / (stem + ".svg"),
                   line_chart_svg("Final loss vs " + std::string(ax.axis) + " (" +
                                      std::string(to_string(kind)) + ")",
                                  std::string(ax.axis) + " (index)", "median final loss",
                                  {s}, true));
      }
    }
    std::cout << "hpo sweep complete\n";
    return 0;
  }

  std::cerr << "unknown study: " << study << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural and universal differential equations for the "
               "predator-prey system: data generation, training, forecasting "
               "and study sweeps"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t global_seed = 0;
  bool have_seed = false;
  bool verbose = false;
  app.add_option("--config", config_path, "configuration file (key = value lines)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", global_seed, "master seed override")
      ->each([&](const std::string&) { have_seed = true; });
  app.add_flag("--verbose", verbose, "progress logging to stderr");

  auto* gen = app.add_subcommand("generate", "write the reference dataset as CSV");
  std::optional<double> gen_sigma;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--sigma", gen_sigma, "noise standard deviation; also writes noisy.csv");
  gen->add_option("--noise-seed", gen_seed, "noise stream seed");

  auto* train = app.add_subcommand("train", "fit a model to a dataset prefix");
  std::string train_model;
  std::string train_data;
  double train_fraction = 1.0;
  std::string train_budget = "paper";
  train->add_option("--model", train_model, "neuralode|ude")->required();
  train->add_option("--data", train_data, "dataset CSV (t,x,y)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--train-fraction", train_fraction, "prefix fraction in (0,1]");
  train->add_option("--budget", train_budget, "desk|paper");

  auto* fc = app.add_subcommand("forecast", "roll a checkpoint forward in time");
  std::string fc_checkpoint;
  double fc_t_end = -1.0;
  std::string fc_truth;
  bool fc_svg = false;
  fc->add_option("--checkpoint", fc_checkpoint, "model checkpoint JSON")
      ->required()
      ->check(CLI::ExistingFile);
  fc->add_option("--t-end", fc_t_end, "forecast horizon");
  fc->add_option("--truth", fc_truth, "reference CSV for RMSE")->check(CLI::ExistingFile);
  fc->add_flag("--svg", fc_svg, "also write a line chart");

  auto* sweep = app.add_subcommand("sweep", "run a study over many training cells");
  std::string sweep_study;
  std::string sweep_budget = "desk";
  int sweep_jobs = -1;
  sweep->add_option("--study", sweep_study, "breakdown|noise|hpo")->required();
  sweep->add_option("--budget", sweep_budget, "desk|paper");
  sweep->add_option("--jobs", sweep_jobs, "parallel cells (0 = hardware)");

  auto* dump = app.add_subcommand("dump-config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    if (have_seed) {
      cfg.train_seed = global_seed;
      cfg.data_noise_seed = global_seed;
    }
    cfg.out_dir = out_dir;

    if (app.got_subcommand(gen))
      return cmd_generate(cfg, gen_sigma, gen_seed, out_dir);
    if (app.got_subcommand(train))
      return cmd_train(cfg, train_model, train_data, train_fraction,
                       budget_from_string(train_budget), cfg.train_seed, out_dir);
    if (app.got_subcommand(fc))
      return cmd_forecast(cfg, fc_checkpoint, fc_t_end > 0 ? fc_t_end : cfg.forecast_t_end,
                          fc_truth.empty() ? std::nullopt
                                           : std::make_optional<fs::path>(fc_truth),
                          fc_svg, out_dir);
    if (app.got_subcommand(sweep)) {
      if (sweep_jobs >= 0) cfg.sweep_jobs = sweep_jobs;
      return cmd_sweep(cfg, sweep_study, budget_from_string(sweep_budget), out_dir,
                       verbose);
    }
    if (app.got_subcommand(dump)) {
      std::cout << dump_config(cfg);
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
