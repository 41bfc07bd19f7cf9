#include "sciml/models.hpp"

#include <cmath>
#include <stdexcept>

#include "sciml/rng.hpp"

namespace sciml {

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "neuralode") return ModelKind::NeuralOde;
  if (name == "ude") return ModelKind::Ude;
  throw std::invalid_argument("unknown model kind: " + std::string(name));
}

std::string_view to_string(ModelKind k) {
  return k == ModelKind::NeuralOde ? "neuralode" : "ude";
}

void validate(const DiffModel& m) {
  if (m.kind == ModelKind::NeuralOde) {
    if (m.nets.size() != 1)
      throw std::invalid_argument("NeuralOde model needs exactly one network");
    validate(m.nets[0]);
    if (m.nets[0].widths.front() != 2 || m.nets[0].widths.back() != 2)
      throw std::invalid_argument("NeuralOde network must map 2 -> 2");
  } else {
    if (m.nets.size() != 2)
      throw std::invalid_argument("Ude model needs exactly two networks");
    for (const MlpSpec& spec : m.nets) {
      validate(spec);
      if (spec.widths.front() != 2 || spec.widths.back() != 1)
        throw std::invalid_argument("Ude networks must map 2 -> 1");
    }
    if (!(m.known_alpha > 0.0) || !(m.known_delta > 0.0))
      throw std::invalid_argument("Ude known rates must be positive");
  }
}

std::size_t param_count(const DiffModel& m) {
  std::size_t n = 0;
  for (const MlpSpec& spec : m.nets) n += param_count(spec);
  return n;
}

DiffModel make_neural_ode(const std::vector<int>& widths, Activation act) {
  DiffModel m;
  m.kind = ModelKind::NeuralOde;
  m.nets = {MlpSpec{widths, act}};
  validate(m);
  return m;
}

DiffModel make_ude(const std::vector<int>& net_widths, Activation act,
                   double known_alpha, double known_delta) {
  DiffModel m;
  m.kind = ModelKind::Ude;
  m.nets = {MlpSpec{net_widths, act}, MlpSpec{net_widths, act}};
  m.known_alpha = known_alpha;
  m.known_delta = known_delta;
  validate(m);
  return m;
}

ParamVector model_init(const DiffModel& m, std::uint64_t seed) {
  validate(m);
  ParamVector p;
  p.reserve(param_count(m));
  for (std::size_t i = 0; i < m.nets.size(); ++i) {
    const ParamVector sub = mlp_init(m.nets[i], Rng::derive(seed, i));
    p.insert(p.end(), sub.begin(), sub.end());
  }
  return p;
}

StateVec model_rhs(const DiffModel& m, std::span<const double> params,
                   const StateVec& u, ModelScratch& s) {
  s.in[0] = u.x;
  s.in[1] = u.y;
  if (m.kind == ModelKind::NeuralOde) {
    mlp_forward(m.nets[0], params, s.in, s.out1, s.net1);
    return {s.out1[0], s.out1[1]};
  }
  const std::size_t n1 = param_count(m.nets[0]);
  double nn1, nn2;
  {
    std::span<double> out(s.out1.data(), 1);
    mlp_forward(m.nets[0], params.subspan(0, n1), s.in, out, s.net1);
    nn1 = out[0];
    mlp_forward(m.nets[1], params.subspan(n1), s.in, out, s.net2);
    nn2 = out[0];
  }
  return {m.known_alpha * u.x - nn1, -m.known_delta * u.y + nn2};
}

StateVec model_rhs(const DiffModel& m, const ParamVector& params, const StateVec& u) {
  if (params.size() != param_count(m))
    throw std::invalid_argument("model_rhs: parameter length mismatch");
  ModelScratch s;
  return model_rhs(m, params, u, s);
}

void model_vjp(const DiffModel& m, std::span<const double> params, const StateVec& u,
               const StateVec& cot, StateVec& grad_u, std::span<double> grad_params,
               ModelScratch& s) {
  s.in[0] = u.x;
  s.in[1] = u.y;
  if (m.kind == ModelKind::NeuralOde) {
    s.cot[0] = cot.x;
    s.cot[1] = cot.y;
    mlp_vjp(m.nets[0], params, s.in, s.cot, s.gin, grad_params, s.net1);
    grad_u = {s.gin[0], s.gin[1]};
    return;
  }
  const std::size_t n1 = param_count(m.nets[0]);
  // rhs = (alpha*x - net1, -delta*y + net2): known part contributes a
  // diagonal, the networks enter with signs (-cot.x, +cot.y).
  grad_u = {m.known_alpha * cot.x, -m.known_delta * cot.y};
  {
    std::span<double> c(s.cot.data(), 1);
    c[0] = -cot.x;
    mlp_vjp(m.nets[0], params.subspan(0, n1), s.in, c, s.gin, grad_params.subspan(0, n1),
            s.net1);
    grad_u.x += s.gin[0];
    grad_u.y += s.gin[1];
    c[0] = cot.y;
    mlp_vjp(m.nets[1], params.subspan(n1), s.in, c, s.gin, grad_params.subspan(n1),
            s.net2);
    grad_u.x += s.gin[0];
    grad_u.y += s.gin[1];
  }
}

double trajectory_loss(const Trajectory& pred, const Trajectory& target) {
  if (pred.times != target.times)
    throw std::invalid_argument("trajectory_loss: time grids differ");
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.states.size(); ++i) {
    const double dx = pred.states[i].x - target.states[i].x;
    const double dy = pred.states[i].y - target.states[i].y;
    loss += dx * dx + dy * dy;
  }
  return loss;
}

Trajectory rollout(const DiffModel& m, const ParamVector& params, const StateVec& init,
                   const RolloutConfig& cfg) {
  validate(m);
  if (params.size() != param_count(m))
    throw std::invalid_argument("rollout: parameter length mismatch");
  if (cfg.substeps < 1) throw std::invalid_argument("rollout: substeps must be >= 1");
  if (cfg.t_grid.empty()) throw std::invalid_argument("rollout: empty time grid");
  for (std::size_t i = 1; i < cfg.t_grid.size(); ++i)
    if (!(cfg.t_grid[i] > cfg.t_grid[i - 1]))
      throw std::invalid_argument("rollout: t_grid must be strictly increasing");

  ModelScratch s;
  detail::Rk4Stages st;
  Trajectory out;
  out.times = cfg.t_grid;
  out.states.reserve(cfg.t_grid.size());

  StateVec y = init;
  out.states.push_back(y);
  for (std::size_t g = 0; g + 1 < cfg.t_grid.size(); ++g) {
    const double dt = (cfg.t_grid[g + 1] - cfg.t_grid[g]) / cfg.substeps;
    for (int sub = 0; sub < cfg.substeps; ++sub) {
      y = detail::rk4_substep(m, params, y, dt, s, st);
      if (!std::isfinite(y.x) || !std::isfinite(y.y))
        throw IntegrationError("rollout: non-finite state at t = " +
                               std::to_string(cfg.t_grid[g] + (sub + 1) * dt));
    }
    out.states.push_back(y);
  }
  return out;
}

std::vector<InteractionSample> recovered_interaction(const DiffModel& m,
                                                     const ParamVector& params,
                                                     const LvParams& p,
                                                     std::span<const StateVec> grid) {
  if (m.kind != ModelKind::Ude)
    throw std::invalid_argument("recovered_interaction: model must be a Ude");
  validate(m);
  if (params.size() != param_count(m))
    throw std::invalid_argument("recovered_interaction: parameter length mismatch");

  ModelScratch s;
  const std::size_t n1 = param_count(m.nets[0]);
  std::vector<InteractionSample> table;
  table.reserve(grid.size());
  for (const StateVec& u : grid) {
    s.in[0] = u.x;
    s.in[1] = u.y;
    std::span<double> out(s.out1.data(), 1);
    mlp_forward(m.nets[0], std::span<const double>(params).subspan(0, n1), s.in, out,
                s.net1);
    const double nn1 = out[0];
    mlp_forward(m.nets[1], std::span<const double>(params).subspan(n1), s.in, out,
                s.net2);
    const double nn2 = out[0];
    table.push_back({u.x, u.y, nn1, nn2, p.beta * u.x * u.y, p.gamma * u.x * u.y});
  }
  return table;
}

}  // namespace sciml
