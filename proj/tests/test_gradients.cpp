#include <doctest.h>

#include <cmath>

#include "sciml/experiments.hpp"
#include "sciml/sensitivity.hpp"

using namespace sciml;

namespace {

/// First five points of the reference dataset: t in [0, 0.4].
Trajectory small_lv_data() {
  ToleranceSpec tol;
  const Trajectory full = generate_truth(LvParams{}, {1.0, 1.0}, 0.0, 10.0, 101, tol);
  Trajectory out;
  out.times.assign(full.times.begin(), full.times.begin() + 5);
  out.states.assign(full.states.begin(), full.states.begin() + 5);
  return out;
}

RolloutConfig cfg_for(const Trajectory& data, int substeps = 4) {
  return {substeps, data.times};
}

}  // namespace

TEST_CASE("discrete gradient matches finite differences (neural ode)") {
  const Trajectory data = small_lv_data();
  const DiffModel node = make_neural_ode({2, 5, 2}, Activation::Rbf);
  const ParamVector p = model_init(node, 42);
  const RolloutConfig cfg = cfg_for(data);

  const LossGrad lg = loss_and_grad_discrete(node, p, data, cfg);
  const ParamVector fd = loss_grad_fd(node, p, data, cfg, 1e-5);
  CHECK(rel_l2(lg.grad, fd) < 1e-4);
  CHECK(lg.loss > 0.0);
}

TEST_CASE("discrete gradient matches finite differences (ude, every activation)") {
  const Trajectory data = small_lv_data();
  for (const Activation act :
       {Activation::Relu, Activation::Rbf, Activation::Tanh, Activation::Sigmoid}) {
    CAPTURE(to_string(act));
    const DiffModel ude = make_ude({2, 5, 1}, act, 1.5, 2.0);
    const ParamVector p = model_init(ude, 7);
    const RolloutConfig cfg = cfg_for(data);

    const LossGrad lg = loss_and_grad_discrete(ude, p, data, cfg);
    const ParamVector fd = loss_grad_fd(ude, p, data, cfg, 1e-5);
    CHECK(rel_l2(lg.grad, fd) < 1e-4);
  }
}

TEST_CASE("loss and gradient vanish when the rollout reproduces the data") {
  const DiffModel node = make_neural_ode({2, 5, 2}, Activation::Rbf);
  const ParamVector p = model_init(node, 3);
  const RolloutConfig cfg{4, uniform_grid(0.0, 0.5, 6)};
  const Trajectory self = rollout(node, p, {1.0, 1.0}, cfg);

  const LossGrad lg = loss_and_grad_discrete(node, p, self, cfg);
  CHECK(lg.loss == 0.0);
  for (double g : lg.grad) CHECK(g == 0.0);
}

TEST_CASE("doubled dataset doubles loss and gradient") {
  const Trajectory data = small_lv_data();
  const DiffModel ude = make_ude({2, 5, 1}, Activation::Tanh, 1.5, 2.0);
  const ParamVector p = model_init(ude, 5);
  const RolloutConfig cfg = cfg_for(data);

  const LossGrad once = loss_and_grad_discrete(ude, p, data, cfg);
  // two passes over the same observations = one pass over each duplicated
  LossGrad twice = once;
  twice.loss += once.loss;
  axpy(1.0, once.grad, twice.grad);
  CHECK(twice.loss == doctest::Approx(2.0 * once.loss).epsilon(1e-15));
  for (std::size_t i = 0; i < once.grad.size(); ++i)
    CHECK(twice.grad[i] == doctest::Approx(2.0 * once.grad[i]).epsilon(1e-15));
}

TEST_CASE("discrete gradient is bitwise reproducible") {
  const Trajectory data = small_lv_data();
  const DiffModel node = make_neural_ode({2, 6, 2}, Activation::Tanh);
  const ParamVector p = model_init(node, 12);
  const RolloutConfig cfg = cfg_for(data);

  const LossGrad a = loss_and_grad_discrete(node, p, data, cfg);
  const LossGrad b = loss_and_grad_discrete(node, p, data, cfg);
  CHECK(a.loss == b.loss);
  CHECK(a.grad == b.grad);
}

TEST_CASE("central differences on a closed-form quadratic") {
  // the FD pattern itself: d|x|^2/dx = 2x to machine-level accuracy
  const auto quad = [](const ParamVector& th) {
    double s = 0.0;
    for (double v : th) s += v * v;
    return s;
  };
  const ParamVector theta{0.3, -1.2, 2.0};
  const double h = 1e-5;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    ParamVector t = theta;
    t[j] = theta[j] + h;
    const double fp = quad(t);
    t[j] = theta[j] - h;
    const double fm = quad(t);
    CHECK(std::abs((fp - fm) / (2.0 * h) - 2.0 * theta[j]) < 1e-8);
  }
}

TEST_CASE("fd truncation error shrinks quadratically in h") {
  const Trajectory data = small_lv_data();
  const DiffModel ude = make_ude({2, 3, 1}, Activation::Tanh, 1.5, 2.0);
  const ParamVector p = model_init(ude, 19);
  const RolloutConfig cfg = cfg_for(data);

  const LossGrad exact = loss_and_grad_discrete(ude, p, data, cfg);
  const double e1 = rel_l2(loss_grad_fd(ude, p, data, cfg, 2e-3), exact.grad);
  const double e2 = rel_l2(loss_grad_fd(ude, p, data, cfg, 1e-3), exact.grad);
  CHECK(e2 < e1);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.5));  // O(h^2)
}

TEST_CASE("sentinel loss on divergent rollouts") {
  const Trajectory data = small_lv_data();
  const DiffModel node = make_neural_ode({2, 5, 2}, Activation::Relu);
  ParamVector p = model_init(node, 2);
  for (double& v : p) v *= 1e155;  // guarantees overflow inside the rollout

  const RolloutConfig cfg = cfg_for(data);
  const LossGrad lg = loss_and_grad_discrete(node, p, data, cfg);
  CHECK(lg.loss == kSentinelLoss);
  for (double g : lg.grad) CHECK(g == 0.0);
  CHECK(loss_discrete(node, p, data, cfg) == kSentinelLoss);
}

TEST_CASE("continuous adjoint agrees with the discrete gradient") {
  const Trajectory data = small_lv_data();
  ToleranceSpec tol;
  tol.reltol = 1e-8;
  tol.abstol = 1e-8;

  SUBCASE("neural ode") {
    const DiffModel node = make_neural_ode({2, 5, 2}, Activation::Rbf);
    const ParamVector p = model_init(node, 42);
    const LossGrad lg = loss_and_grad_discrete(node, p, data, cfg_for(data));
    const ParamVector adj = adjoint_grad_continuous(node, p, data, tol);
    CHECK(rel_l2(adj, lg.grad) < 1e-2);
  }
  SUBCASE("ude") {
    const DiffModel ude = make_ude({2, 5, 1}, Activation::Tanh, 1.5, 2.0);
    const ParamVector p = model_init(ude, 7);
    const LossGrad lg = loss_and_grad_discrete(ude, p, data, cfg_for(data));
    const ParamVector adj = adjoint_grad_continuous(ude, p, data, tol);
    CHECK(rel_l2(adj, lg.grad) < 1e-2);
  }
}

TEST_CASE("adjoint gradient vanishes on a zero-residual dataset") {
  const DiffModel node = make_neural_ode({2, 5, 2}, Activation::Rbf);
  const ParamVector p = model_init(node, 3);
  // data generated by the same fine rollout the adjoint reconstructs from
  const RolloutConfig cfg{kAdjointFineSubsteps, uniform_grid(0.0, 0.5, 6)};
  const Trajectory self = rollout(node, p, {1.0, 1.0}, cfg);

  ToleranceSpec tol;
  const ParamVector adj = adjoint_grad_continuous(node, p, self, tol);
  for (double g : adj) CHECK(g == 0.0);
}

TEST_CASE("adjoint gap to the discrete gradient shrinks with tolerance") {
  const Trajectory data = small_lv_data();
  const DiffModel node = make_neural_ode({2, 5, 2}, Activation::Rbf);
  const ParamVector p = model_init(node, 42);
  const LossGrad lg = loss_and_grad_discrete(node, p, data, cfg_for(data));

  double prev = INFINITY;
  for (const double rt : {1e-6, 1e-8}) {
    ToleranceSpec tol;
    tol.reltol = rt;
    tol.abstol = rt;
    const double gap = rel_l2(adjoint_grad_continuous(node, p, data, tol), lg.grad);
    CHECK(gap <= prev);
    prev = gap;
  }
}
