#include <doctest.h>

#include <cmath>

#include "sciml/models.hpp"
#include "sciml/rng.hpp"

using namespace sciml;

namespace {

const std::vector<Activation> kAllActivations{Activation::Rbf, Activation::Relu,
                                              Activation::Tanh, Activation::Sigmoid};

/// Scalar probe g(theta) = cot . f_theta(x), differentiated by central
/// differences; the independent oracle for the reverse pass.
ParamVector fd_param_grad(const MlpSpec& spec, const ParamVector& params,
                          const Vec& input, const Vec& cot, double h) {
  ParamVector g(params.size());
  ParamVector p = params;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double pj = p[j];
    p[j] = pj + h;
    const Vec up = mlp_forward(spec, p, input);
    p[j] = pj - h;
    const Vec dn = mlp_forward(spec, p, input);
    p[j] = pj;
    double acc = 0.0;
    for (std::size_t k = 0; k < cot.size(); ++k) acc += cot[k] * (up[k] - dn[k]);
    g[j] = acc / (2.0 * h);
  }
  return g;
}

Vec fd_input_grad(const MlpSpec& spec, const ParamVector& params, const Vec& input,
                  const Vec& cot, double h) {
  Vec g(input.size());
  Vec x = input;
  for (std::size_t j = 0; j < input.size(); ++j) {
    const double xj = x[j];
    x[j] = xj + h;
    const Vec up = mlp_forward(spec, params, x);
    x[j] = xj - h;
    const Vec dn = mlp_forward(spec, params, x);
    x[j] = xj;
    double acc = 0.0;
    for (std::size_t k = 0; k < cot.size(); ++k) acc += cot[k] * (up[k] - dn[k]);
    g[j] = acc / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("param_count matches the dense formula") {
  CHECK(param_count(MlpSpec{{2, 100, 100, 100, 2}, Activation::Rbf}) == 20702);
  CHECK(param_count(MlpSpec{{2, 10, 10, 10, 1}, Activation::Relu}) == 261);
  CHECK(param_count(MlpSpec{{7, 3}, Activation::Tanh}) == 7 * 3 + 3);

  const DiffModel ude = make_ude({2, 10, 10, 10, 1}, Activation::Relu, 1.5, 2.0);
  CHECK(param_count(ude) == 522);

  CHECK_THROWS_AS(param_count(MlpSpec{{4}, Activation::Tanh}), std::invalid_argument);
  CHECK_THROWS_AS(param_count(MlpSpec{{4, 0, 2}, Activation::Tanh}),
                  std::invalid_argument);
}

TEST_CASE("mlp_init is reproducible with zero biases and Glorot scale") {
  const MlpSpec spec{{2, 100, 100, 100, 2}, Activation::Rbf};
  const ParamVector a = mlp_init(spec, 11);
  const ParamVector b = mlp_init(spec, 11);
  CHECK(a == b);
  const ParamVector c = mlp_init(spec, 12);
  CHECK(a != c);

  // biases: last `out` entries of every layer block
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const std::size_t in = spec.widths[l], out = spec.widths[l + 1];
    for (std::size_t i = 0; i < out; ++i) CHECK(a[off + in * out + i] == 0.0);
    off += in * out + out;
  }

  // middle 100x100 layer: empirical std within 15% of sqrt(6/200)/sqrt(3)
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 300; i < 300 + 10000; ++i) {
    sum += a[i];
    sumsq += a[i] * a[i];
  }
  const double mean = sum / 10000.0;
  const double sd = std::sqrt(sumsq / 10000.0 - mean * mean);
  const double expected = std::sqrt(6.0 / 200.0) / std::sqrt(3.0);
  CHECK(std::abs(sd - expected) < 0.15 * expected);
}

TEST_CASE("mlp_forward basics") {
  const MlpSpec spec{{2, 5, 2}, Activation::Tanh};
  const ParamVector zeros(param_count(spec), 0.0);
  const Vec out = mlp_forward(spec, zeros, {3.0, -4.0});
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);

  // rbf(0) = 1, relu(-1) = 0 through a 1-1-1 net with controlled biases
  MlpSpec tiny{{1, 1, 1}, Activation::Rbf};
  ParamVector p(param_count(tiny), 0.0);  // [w0, b0, w1, b1]
  p[2] = 1.0;                             // output weight reads the activation
  CHECK(mlp_forward(tiny, p, {0.0})[0] == 1.0);

  tiny.activation = Activation::Relu;
  p[1] = -1.0;  // pre-activation -1
  CHECK(mlp_forward(tiny, p, {5.0})[0] == 0.0);  // w0 = 0 so input is ignored

  CHECK_THROWS_AS(mlp_forward(spec, zeros, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(mlp_forward(spec, ParamVector(3, 0.0), {1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("forward pass is bitwise deterministic") {
  const MlpSpec spec{{2, 8, 8, 2}, Activation::Rbf};
  const ParamVector p = mlp_init(spec, 3);
  const Vec a = mlp_forward(spec, p, {0.3, 0.7});
  const Vec b = mlp_forward(spec, p, {0.3, 0.7});
  CHECK(a == b);
}

TEST_CASE("vjp on a single linear layer matches the closed form") {
  const MlpSpec spec{{3, 2}, Activation::Tanh};  // no hidden layer: pure affine
  ParamVector p = {1.0, 2.0, 3.0,   // W row 0
                   4.0, 5.0, 6.0,   // W row 1
                   0.5, -0.5};      // bias
  const Vec input{0.2, -0.1, 0.4};
  const Vec cot{2.0, -1.0};
  const auto [gin, gp] = mlp_vjp(spec, p, input, cot);

  // grad_input = W^T c
  CHECK(gin[0] == doctest::Approx(1.0 * 2.0 + 4.0 * -1.0));
  CHECK(gin[1] == doctest::Approx(2.0 * 2.0 + 5.0 * -1.0));
  CHECK(gin[2] == doctest::Approx(3.0 * 2.0 + 6.0 * -1.0));
  // grad_W = c input^T, grad_b = c
  CHECK(gp[0] == doctest::Approx(2.0 * 0.2));
  CHECK(gp[1] == doctest::Approx(2.0 * -0.1));
  CHECK(gp[2] == doctest::Approx(2.0 * 0.4));
  CHECK(gp[3] == doctest::Approx(-1.0 * 0.2));
  CHECK(gp[4] == doctest::Approx(-1.0 * -0.1));
  CHECK(gp[5] == doctest::Approx(-1.0 * 0.4));
  CHECK(gp[6] == doctest::Approx(2.0));
  CHECK(gp[7] == doctest::Approx(-1.0));
}

TEST_CASE("vjp with zero cotangent returns zero gradients") {
  const MlpSpec spec{{2, 5, 2}, Activation::Rbf};
  const ParamVector p = mlp_init(spec, 21);
  const auto [gin, gp] = mlp_vjp(spec, p, {0.4, 1.2}, {0.0, 0.0});
  for (double v : gin) CHECK(v == 0.0);
  for (double v : gp) CHECK(v == 0.0);
}

TEST_CASE("vjp agrees with central finite differences for every activation") {
  for (const Activation act : kAllActivations) {
    CAPTURE(to_string(act));
    const MlpSpec spec{{2, 5, 2}, act};
    const ParamVector p = mlp_init(spec, 77);
    const Vec input{0.8, 1.3};
    const Vec cot{1.0, -2.0};

    const auto [gin, gp] = mlp_vjp(spec, p, input, cot);
    const ParamVector fd_p = fd_param_grad(spec, p, input, cot, 1e-5);
    const Vec fd_in = fd_input_grad(spec, p, input, cot, 1e-5);

    CHECK(rel_l2(gp, fd_p) < 1e-6);
    CHECK(rel_l2(gin, fd_in) < 1e-6);
  }
}

TEST_CASE("vjp is linear in the cotangent") {
  const MlpSpec spec{{2, 6, 6, 2}, Activation::Sigmoid};
  const ParamVector p = mlp_init(spec, 5);
  const Vec input{-0.4, 0.9};
  const Vec c1{1.0, 2.0}, c2{-0.5, 3.0};
  const double a = 1.7, b = -2.3;

  const Vec combo{a * c1[0] + b * c2[0], a * c1[1] + b * c2[1]};
  const auto [gin12, gp12] = mlp_vjp(spec, p, input, combo);
  const auto [gin1, gp1] = mlp_vjp(spec, p, input, c1);
  const auto [gin2, gp2] = mlp_vjp(spec, p, input, c2);

  for (std::size_t i = 0; i < gp12.size(); ++i)
    CHECK(gp12[i] == doctest::Approx(a * gp1[i] + b * gp2[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < gin12.size(); ++i)
    CHECK(gin12[i] == doctest::Approx(a * gin1[i] + b * gin2[i]).epsilon(1e-12));
}

TEST_CASE("model_rhs: known part survives zero networks") {
  const DiffModel ude = make_ude({2, 10, 10, 10, 1}, Activation::Relu, 1.5, 2.0);
  const ParamVector zeros(param_count(ude), 0.0);
  const StateVec r = model_rhs(ude, zeros, {3.0, 4.0});
  CHECK(r.x == 1.5 * 3.0);
  CHECK(r.y == -2.0 * 4.0);

  const DiffModel node = make_neural_ode({2, 10, 2}, Activation::Rbf);
  const ParamVector nzeros(param_count(node), 0.0);
  const StateVec rn = model_rhs(node, nzeros, {3.0, 4.0});
  CHECK(rn.x == 0.0);
  CHECK(rn.y == 0.0);
}

TEST_CASE("ude rhs minus known part depends only on the networks") {
  const DiffModel ude = make_ude({2, 8, 8, 1}, Activation::Tanh, 1.5, 2.0);
  const ParamVector p = model_init(ude, 9);
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    const StateVec u{rng.uniform(0.1, 6.0), rng.uniform(0.1, 4.0)};
    const StateVec r = model_rhs(ude, p, u);
    const std::vector<StateVec> grid{u};
    const auto table =
        recovered_interaction(ude, p, LvParams{}, std::span<const StateVec>(grid));
    CHECK(r.x - 1.5 * u.x == doctest::Approx(-table[0].nn1).epsilon(1e-12));
    CHECK(r.y + 2.0 * u.y == doctest::Approx(table[0].nn2).epsilon(1e-12));
  }
}

TEST_CASE("trajectory_loss examples") {
  Trajectory a{{0.0, 1.0}, {{1.0, 2.0}, {3.0, 4.0}}};
  CHECK(trajectory_loss(a, a) == 0.0);

  Trajectory p{{0.0}, {{1.5, 2.0}}};
  Trajectory t{{0.0}, {{1.0, 2.0}}};
  CHECK(trajectory_loss(p, t) == 0.25);

  // additivity over disjoint segments (dyadic values keep the sums exact)
  Trajectory p1{{0.0, 1.0}, {{1.5, 2.0}, {0.5, 0.25}}};
  Trajectory t1{{0.0, 1.0}, {{1.0, 2.0}, {0.25, 0.5}}};
  Trajectory p2{{2.0, 3.0}, {{4.0, 0.0}, {1.0, 1.0}}};
  Trajectory t2{{2.0, 3.0}, {{3.5, 0.5}, {1.0, 1.0}}};
  Trajectory pc{{0.0, 1.0, 2.0, 3.0}, {p1.states[0], p1.states[1], p2.states[0], p2.states[1]}};
  Trajectory tc{{0.0, 1.0, 2.0, 3.0}, {t1.states[0], t1.states[1], t2.states[0], t2.states[1]}};
  CHECK(trajectory_loss(pc, tc) == trajectory_loss(p1, t1) + trajectory_loss(p2, t2));

  Trajectory wrong{{0.0, 0.5}, {{1.0, 2.0}, {3.0, 4.0}}};
  CHECK_THROWS_AS(trajectory_loss(a, wrong), std::invalid_argument);
}

TEST_CASE("rollout: zero-parameter neural ode stays constant") {
  const DiffModel node = make_neural_ode({2, 10, 10, 2}, Activation::Rbf);
  const ParamVector zeros(param_count(node), 0.0);
  const RolloutConfig cfg{4, uniform_grid(0.0, 10.0, 101)};
  const Trajectory tr = rollout(node, zeros, {1.0, 1.0}, cfg);
  for (const StateVec& s : tr.states) {
    CHECK(s.x == 1.0);
    CHECK(s.y == 1.0);
  }
}

TEST_CASE("rollout: zero-parameter ude follows the decoupled exponentials") {
  const DiffModel ude = make_ude({2, 10, 10, 10, 1}, Activation::Relu, 1.5, 2.0);
  const ParamVector zeros(param_count(ude), 0.0);
  const RolloutConfig cfg{10, uniform_grid(0.0, 2.0, 21)};
  const Trajectory tr = rollout(ude, zeros, {1.0, 1.0}, cfg);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const double t = tr.times[i];
    CHECK(tr.states[i].x == doctest::Approx(std::exp(1.5 * t)).epsilon(1e-7));
    CHECK(tr.states[i].y == doctest::Approx(std::exp(-2.0 * t)).epsilon(1e-7));
  }
}

TEST_CASE("rollout is bitwise deterministic") {
  const DiffModel ude = make_ude({2, 6, 6, 1}, Activation::Relu, 1.5, 2.0);
  const ParamVector p = model_init(ude, 17);
  const RolloutConfig cfg{4, uniform_grid(0.0, 3.0, 31)};
  const Trajectory a = rollout(ude, p, {1.0, 1.0}, cfg);
  const Trajectory b = rollout(ude, p, {1.0, 1.0}, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.states[i].x == b.states[i].x);
    CHECK(a.states[i].y == b.states[i].y);
  }
}

TEST_CASE("recovered_interaction basics") {
  const DiffModel ude = make_ude({2, 5, 5, 1}, Activation::Relu, 1.5, 2.0);
  const ParamVector zeros(param_count(ude), 0.0);
  const std::vector<StateVec> grid{{0.0, 2.5}, {1.0, 1.0}, {4.0, 1.5}};
  const auto table =
      recovered_interaction(ude, zeros, LvParams{}, std::span<const StateVec>(grid));
  REQUIRE(table.size() == 3);
  CHECK(table[0].beta_xy == 0.0);  // x = 0 annihilates the product
  CHECK(table[0].nn1 == 0.0);
  CHECK(table[0].nn2 == 0.0);
  CHECK(table[1].beta_xy == doctest::Approx(1.0));
  CHECK(table[2].gamma_xy == doctest::Approx(0.5 * 4.0 * 1.5));

  const DiffModel node = make_neural_ode({2, 5, 2}, Activation::Rbf);
  CHECK_THROWS_AS(recovered_interaction(node, ParamVector(param_count(node), 0.0),
                                        LvParams{}, std::span<const StateVec>(grid)),
                  std::invalid_argument);
}

TEST_CASE("model validation rejects malformed shapes") {
  CHECK_THROWS_AS(make_neural_ode({2, 5, 1}, Activation::Rbf), std::invalid_argument);
  CHECK_THROWS_AS(make_ude({2, 5, 2}, Activation::Relu, 1.5, 2.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_ude({2, 5, 1}, Activation::Relu, -1.0, 2.0),
                  std::invalid_argument);
  const DiffModel node = make_neural_ode({2, 5, 2}, Activation::Rbf);
  CHECK_THROWS_AS(model_rhs(node, ParamVector(3, 0.0), {1.0, 1.0}),
                  std::invalid_argument);
}
