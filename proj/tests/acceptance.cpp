// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line with
// the measured quantities; the process exits non-zero if any criterion fails.
// Heavy training criteria run their cells through the study harness at the
// documented budgets, in parallel up to the hardware thread count.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sciml/checkpoint.hpp"
#include "sciml/csv.hpp"
#include "sciml/experiments.hpp"
#include "sciml/rng.hpp"

using namespace sciml;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s  (%s)\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

Trajectory reference_truth(const RunConfig& cfg) {
  return generate_truth(lv_params(cfg), initial_state(cfg), cfg.data_t0, cfg.data_t1,
                        cfg.data_points, tolerance(cfg));
}

Trajectory head(const Trajectory& t, std::size_t n) {
  return {{t.times.begin(), t.times.begin() + n},
          {t.states.begin(), t.states.begin() + n}};
}

// --------------------------------------------------------------------------

void criterion1_solver_fidelity(const RunConfig& cfg) {
  const Trajectory truth = reference_truth(cfg);
  const LvParams p = lv_params(cfg);
  const RhsFn rhs = [&p](double, std::span<const double> y, std::span<double> d) {
    d[0] = p.alpha * y[0] - p.beta * y[0] * y[1];
    d[1] = -p.delta * y[1] + p.gamma * y[0] * y[1];
  };
  // dt = 1e-4 fixed-step oracle: 1000 substeps per 0.1 interval
  const OdeResult fine = rk4_fixed(rhs, {cfg.data_x0, cfg.data_y0}, truth.times, 1000);
  double gap = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    gap = std::max(gap, std::abs(truth.states[i].x - fine.states[i][0]));
    gap = std::max(gap, std::abs(truth.states[i].y - fine.states[i][1]));
  }
  const double v0 = lv_invariant(truth.states[0], p);
  double drift = 0.0;
  for (const StateVec& s : truth.states)
    drift = std::max(drift, std::abs(lv_invariant(s, p) - v0));

  report(1, "solver fidelity", gap < 1e-6 && drift < 1e-5,
         fmt("max gap vs rk4(dt=1e-4) %.3e < 1e-6, invariant drift %.3e < 1e-5", gap,
             drift));
}

void criterion2_gradient_correctness(const RunConfig& cfg) {
  const Trajectory data = head(reference_truth(cfg), 5);
  const RolloutConfig rc{cfg.train_substeps, data.times};
  ToleranceSpec tol;
  tol.reltol = tol.abstol = 1e-8;

  const DiffModel node = make_neural_ode({2, 5, 2}, Activation::Rbf);
  const ParamVector pn = model_init(node, 42);
  const LossGrad lgn = loss_and_grad_discrete(node, pn, data, rc);
  const double fd_node = rel_l2(lgn.grad, loss_grad_fd(node, pn, data, rc, 1e-5));
  const double adj_node = rel_l2(adjoint_grad_continuous(node, pn, data, tol), lgn.grad);

  const DiffModel ude = make_ude({2, 5, 1}, Activation::Relu, cfg.lv_alpha, cfg.lv_delta);
  const ParamVector pu = model_init(ude, 7);
  const LossGrad lgu = loss_and_grad_discrete(ude, pu, data, rc);
  const double fd_ude = rel_l2(lgu.grad, loss_grad_fd(ude, pu, data, rc, 1e-5));
  const double adj_ude = rel_l2(adjoint_grad_continuous(ude, pu, data, tol), lgu.grad);

  report(2, "gradient correctness",
         fd_node < 1e-4 && fd_ude < 1e-4 && adj_node < 1e-2 && adj_ude < 1e-2,
         fmt("fd rel: node %.2e, ude %.2e (< 1e-4); adjoint rel: node %.2e, ude %.2e "
             "(< 1e-2)",
             fd_node, fd_ude, adj_node, adj_ude));
}

struct EfficacyOutcome {
  int ude_hits = 0, node_hits = 0;
  double ude_best = 0, node_best = 0;
  TrainRun best_ude_run;  // reused by the recovery criterion
};

EfficacyOutcome criterion3_training_efficacy(const RunConfig& cfg,
                                             const Trajectory& truth) {
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  EfficacyOutcome out;
  std::vector<TrainRun> ude_runs(seeds.size()), node_runs(seeds.size());

  run_parallel(seeds.size() * 2, cfg.sweep_jobs, [&](std::size_t i) {
    const std::size_t si = i % seeds.size();
    if (i < seeds.size())
      ude_runs[si] =
          train_and_evaluate(cfg, ModelKind::Ude, truth, truth, 1.0, seeds[si], Budget::Desk);
    else
      node_runs[si] = train_and_evaluate(cfg, ModelKind::NeuralOde, truth, truth, 1.0,
                                         seeds[si], Budget::Desk);
  });

  double best_final = INFINITY;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (ude_runs[i].loss_decrease_pct >= 90.0) ++out.ude_hits;
    if (node_runs[i].loss_decrease_pct >= 85.0) ++out.node_hits;
    out.ude_best = std::max(out.ude_best, ude_runs[i].loss_decrease_pct);
    out.node_best = std::max(out.node_best, node_runs[i].loss_decrease_pct);
    if (ude_runs[i].result.final_loss < best_final) {
      best_final = ude_runs[i].result.final_loss;
      out.best_ude_run = std::move(ude_runs[i]);
    }
  }

  report(3, "training efficacy (loss decrease)", out.ude_hits >= 2 && out.node_hits >= 2,
         fmt("ude >=90%% in %d/3 seeds (best %.2f%%), node >=85%% in %d/3 seeds "
             "(best %.2f%%), desk budget",
             out.ude_hits, out.ude_best, out.node_hits, out.node_best));
  return out;
}

void criterion4_breakdown_ordering(const RunConfig& cfg) {
  const std::vector<double> fractions{0.9, 0.5, 0.4, 0.35, 0.31, 0.3};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const BreakdownReport node = breakdown_sweep(ModelKind::NeuralOde, fractions, 1.0,
                                               seeds, cfg, Budget::Desk);
  const BreakdownReport ude =
      breakdown_sweep(ModelKind::Ude, fractions, 1.0, seeds, cfg, Budget::Desk);

  const auto& ns = node.summary[0];
  const auto& us = ude.summary[0];
  const auto at = [&](const std::vector<double>& fs, double f) {
    for (std::size_t i = 0; i < fs.size(); ++i)
      if (fs[i] == f) return i;
    return fs.size();
  };
  const std::size_t i35 = at(fractions, 0.35);
  const bool node_broken_35 = ns.broken[i35];
  const bool ude_ok_35 = !us.broken[i35];
  const bool ordering = us.breakdown_fraction <= ns.breakdown_fraction;

  std::string medians = "node medians:";
  for (std::size_t i = 0; i < fractions.size(); ++i)
    medians += fmt(" %.2f", ns.median_rmse[i]);
  medians += "; ude medians:";
  for (std::size_t i = 0; i < fractions.size(); ++i)
    medians += fmt(" %.2f", us.median_rmse[i]);

  report(4, "forecast breakdown ordering",
         node_broken_35 && ude_ok_35 && ordering,
         fmt("node broken@0.35=%d, ude unbroken@0.35=%d, ude bp %.2f <= node bp %.2f; %s",
             node_broken_35, ude_ok_35, us.breakdown_fraction, ns.breakdown_fraction,
             medians.c_str()));
}

void criterion5_noise_robustness(const RunConfig& cfg) {
  // Full training budgets here: the sigma = 0.3 comparison probes the trained
  // models' robustness, and under-converged desk runs drown it in
  // initialization luck.
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const NoiseReport rep = noise_study({0.0, 0.05, 0.3}, {ModelKind::NeuralOde, ModelKind::Ude},
                                      seeds, cfg, Budget::Paper);

  const auto med = [&](ModelKind k, double sigma, auto field) {
    std::vector<double> v;
    for (const NoiseCell& c : rep.cells)
      if (c.kind == k && c.sigma == sigma && c.ok) v.push_back(field(c));
    return median(std::move(v));
  };
  const auto rmse_of = [](const NoiseCell& c) { return c.rmse_total; };
  const auto incr_of = [](const NoiseCell& c) { return c.loss_increase_pct; };

  const double node_05 = med(ModelKind::NeuralOde, 0.05, rmse_of);
  const double ude_05 = med(ModelKind::Ude, 0.05, rmse_of);
  const double node_30 = med(ModelKind::NeuralOde, 0.3, rmse_of);
  const double ude_30 = med(ModelKind::Ude, 0.3, rmse_of);
  const double node_incr = med(ModelKind::NeuralOde, 0.3, incr_of);
  const double ude_incr = med(ModelKind::Ude, 0.3, incr_of);

  const bool mild_ok = node_05 < 1.0 && ude_05 < 1.0;
  const bool high_ordered = ude_30 < node_30;
  const bool incr_ordered = ude_incr < node_incr;

  report(5, "noise robustness ordering", mild_ok && high_ordered && incr_ordered,
         fmt("sigma=0.05 median rmse node %.3f / ude %.3f (< 1.0); sigma=0.3 rmse ude "
             "%.3f < node %.3f: %d; loss-increase%% ude %.0f < node %.0f: %d",
             node_05, ude_05, ude_30, node_30, high_ordered, ude_incr, node_incr,
             incr_ordered));
}

void criterion6_term_recovery(const RunConfig& cfg, const Trajectory& truth) {
  // Recovery needs a fully converged fit. Constant-rate RMSProp stalls in an
  // oscillation band (SSE ~ 0.5) that masks the interaction signal, so the
  // recovery run refines with a second, lower-rate Adam phase instead and
  // keeps the best of three restarts by final training loss.
  const DiffModel ude = build_model(cfg, ModelKind::Ude);
  const RolloutConfig rc{cfg.train_substeps, truth.times};
  const Objective obj = [&](const ParamVector& p) {
    return loss_and_grad_discrete(ude, p, truth, rc);
  };
  const LossFn lo = [&](const ParamVector& p) {
    return loss_discrete(ude, p, truth, rc);
  };
  TrainSchedule sched;
  Phase coarse;
  coarse.kind = PhaseKind::Adam;
  coarse.iters = cfg.ude_adam_iters;
  coarse.lr = cfg.ude_adam_lr;
  Phase fine;
  fine.kind = PhaseKind::Adam;
  fine.iters = cfg.ude_adam_iters / 2;
  fine.lr = cfg.ude_adam_lr / 10.0;
  sched.phases = {coarse, fine};
  sched.log_every = 1000;

  const std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<TrainResult> runs(seeds.size());
  run_parallel(seeds.size(), cfg.sweep_jobs, [&](std::size_t i) {
    runs[i] = run_schedule(obj, lo, model_init(ude, seeds[i]), sched, seeds[i]);
  });
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i)
    if (runs[i].final_loss < runs[best].final_loss) best = i;

  const std::vector<StateVec> orbit(truth.states.begin(), truth.states.end());
  const auto table = recovered_interaction(ude, runs[best].params, lv_params(cfg),
                                           std::span<const StateVec>(orbit));
  double mae1 = 0.0, mae2 = 0.0;
  for (const InteractionSample& row : table) {
    mae1 += std::abs(row.nn1 - row.beta_xy);
    mae2 += std::abs(row.nn2 - row.gamma_xy);
  }
  mae1 /= static_cast<double>(table.size());
  mae2 /= static_cast<double>(table.size());

  report(6, "ude interaction-term recovery", mae1 < 0.1 && mae2 < 0.1,
         fmt("mean |nn1 - bxy| = %.4f, mean |nn2 - gxy| = %.4f (< 0.1), best final "
             "loss %.3e (seed %llu of 3 restarts)",
             mae1, mae2, runs[best].final_loss,
             static_cast<unsigned long long>(runs[best].seed)));
}

void criterion7_property_suites(const RunConfig& cfg, const Trajectory& truth) {
  std::vector<std::string> failures;
  const auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  // optimizer determinism
  {
    AdamState s1 = make_adam(3, 1e-3), s2 = make_adam(3, 1e-3);
    ParamVector p1{1, 2, 3}, p2{1, 2, 3};
    const ParamVector g{0.5, -0.25, 0.125};
    adam_step(s1, p1, g);
    adam_step(s2, p2, g);
    expect(p1 == p2, "adam determinism");
  }
  // L-BFGS monotonicity + quadratic convergence
  {
    const Objective quad = [](const ParamVector& x) {
      return LossGrad{0.5 * (x[0] * x[0] + 10.0 * x[1] * x[1]),
                      {x[0], 10.0 * x[1]}};
    };
    const LbfgsResult res = lbfgs_run(quad, {5.0, 5.0}, LbfgsOptions{}, 20);
    bool monotone = true;
    for (std::size_t i = 1; i < res.losses.size(); ++i)
      monotone = monotone && res.losses[i] <= res.losses[i - 1];
    expect(monotone, "lbfgs monotone losses");
    expect(norm2(quad(res.params).grad) < 1e-8, "lbfgs quadratic convergence");
  }
  // VJP linearity + finite-difference agreement
  {
    const MlpSpec spec{{2, 5, 2}, Activation::Rbf};
    const ParamVector p = mlp_init(spec, 3);
    const Vec in{0.4, 1.1};
    const auto [g1, gp1] = mlp_vjp(spec, p, in, {1.0, 0.0});
    const auto [g2, gp2] = mlp_vjp(spec, p, in, {0.0, 1.0});
    const auto [gc, gpc] = mlp_vjp(spec, p, in, {2.0, -3.0});
    double lin_err = 0.0;
    for (std::size_t i = 0; i < gpc.size(); ++i)
      lin_err = std::max(lin_err, std::abs(gpc[i] - (2.0 * gp1[i] - 3.0 * gp2[i])));
    expect(lin_err < 1e-10, "vjp linearity");

    ParamVector fd(gpc.size());
    ParamVector pp = p;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double h = 1e-5;
      pp[j] = p[j] + h;
      const Vec up = mlp_forward(spec, pp, in);
      pp[j] = p[j] - h;
      const Vec dn = mlp_forward(spec, pp, in);
      pp[j] = p[j];
      fd[j] = (2.0 * (up[0] - dn[0]) - 3.0 * (up[1] - dn[1])) / (2.0 * h);
    }
    expect(rel_l2(gpc, fd) < 1e-6, "vjp finite-difference agreement");
  }
  // split / rmse identities
  {
    const auto [train, test] = split_train_forecast(truth, {0.35, false});
    expect(train.size() == 36 && test.size() == 65, "split 35/65 arithmetic");
    expect(train.times[35] == truth.times[35] && test.times[0] == truth.times[36],
           "split reconstruction");
    Trajectory shifted = truth;
    for (StateVec& s : shifted.states) s.x += 0.3;
    const RmseTriple r = rmse(shifted, truth);
    expect(std::abs(r.total * r.total - (r.x * r.x + r.y * r.y) / 2.0) < 1e-12,
           "rmse stacking identity");
  }
  // report round-trip
  {
    BreakdownReport r;
    r.threshold = 1.0;
    r.fractions = {0.9, 0.35};
    r.seeds = {1};
    r.cells = {{ModelKind::Ude, 0.9, 1, 0.5, 0.25, false, true, ""}};
    KindBreakdownSummary s;
    s.kind = ModelKind::Ude;
    s.median_rmse = {0.25, INFINITY};
    s.broken = {false, true};
    s.breakdown_fraction = 0.35;
    r.summary = {s};
    const BreakdownReport back = parse_breakdown_report(to_json_string(r));
    expect(back.cells.size() == 1 && back.cells[0].forecast_rmse == 0.25 &&
               back.summary[0].median_rmse[1] == INFINITY &&
               back.summary[0].breakdown_fraction == 0.35,
           "report json round-trip");
  }
  // CLI idempotence
  {
    const char* bin = std::getenv("LVNET_BIN");
    if (bin == nullptr) {
      failures.push_back("LVNET_BIN unset; cli idempotence not run");
    } else {
      const fs::path dir = fs::temp_directory_path() / "sciml_acceptance_cli";
      fs::remove_all(dir);
      fs::create_directories(dir);
      const std::string base = std::string(bin) + " --out ";
      const auto shell = [](const std::string& c) {
        return WEXITSTATUS(std::system((c + " >/dev/null 2>&1").c_str()));
      };
      const int rc1 = shell(base + (dir / "r1").string() + " generate --sigma 0.1");
      const int rc2 = shell(base + (dir / "r2").string() + " generate --sigma 0.1");
      const auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
      };
      expect(rc1 == 0 && rc2 == 0 &&
                 slurp(dir / "r1" / "truth.csv") == slurp(dir / "r2" / "truth.csv") &&
                 slurp(dir / "r1" / "noisy.csv") == slurp(dir / "r2" / "noisy.csv") &&
                 !slurp(dir / "r1" / "truth.csv").empty(),
             "cli idempotence");
    }
  }

  std::string detail = "optimizer determinism, lbfgs monotonicity/convergence, vjp "
                       "linearity/fd, split/rmse identities, report round-trip, cli "
                       "idempotence";
  if (!failures.empty()) {
    detail = "failed:";
    for (const std::string& f : failures) detail += " [" + f + "]";
  }
  report(7, "property suites", failures.empty(), detail);
  (void)cfg;
}

}  // namespace

int main() {
  const auto t0 = clk::now();
  RunConfig cfg;
  cfg.sweep_jobs = 0;  // hardware concurrency for the training criteria

  const Trajectory truth = reference_truth(cfg);

  criterion1_solver_fidelity(cfg);
  criterion2_gradient_correctness(cfg);
  criterion3_training_efficacy(cfg, truth);
  criterion4_breakdown_ordering(cfg);
  criterion5_noise_robustness(cfg);
  criterion6_term_recovery(cfg, truth);
  criterion7_property_suites(cfg, truth);

  const double mins = std::chrono::duration<double>(clk::now() - t0).count() / 60.0;
  std::printf("%d of 7 criteria passed in %.1f minutes\n", 7 - g_failures, mins);
  return g_failures == 0 ? 0 : 1;
}
