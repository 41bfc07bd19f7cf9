#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sciml/lotka_volterra.hpp"
#include "sciml/mlp.hpp"

namespace sciml {

enum class ModelKind { NeuralOde, Ude };

ModelKind model_kind_from_string(std::string_view name);
std::string_view to_string(ModelKind k);

/// Trainable dynamics. NeuralOde: one 2->...->2 network is the whole right
/// hand side. Ude: prey growth alpha*x and predator death -delta*y are kept
/// as known physics while two 2->...->1 networks supply the interaction
/// terms, rhs = (alpha*x - net1(x,y), -delta*y + net2(x,y)). UDE parameters
/// concatenate as [theta1 | theta2].
struct DiffModel {
  ModelKind kind = ModelKind::NeuralOde;
  std::vector<MlpSpec> nets;
  double known_alpha = 1.5;  // UDE only
  double known_delta = 2.0;  // UDE only
};

void validate(const DiffModel& m);
std::size_t param_count(const DiffModel& m);

DiffModel make_neural_ode(const std::vector<int>& widths, Activation act);
DiffModel make_ude(const std::vector<int>& net_widths, Activation act,
                   double known_alpha, double known_delta);

/// Per-net seeds are derived from `seed` so the two UDE networks start
/// independent.
ParamVector model_init(const DiffModel& m, std::uint64_t seed);

struct ModelScratch {
  MlpScratch net1, net2;
  Vec in = Vec(2), out1 = Vec(2), cot = Vec(2), gin = Vec(2);
};

StateVec model_rhs(const DiffModel& m, std::span<const double> params,
                   const StateVec& u, ModelScratch& s);

/// Convenience wrapper allocating its own scratch.
StateVec model_rhs(const DiffModel& m, const ParamVector& params, const StateVec& u);

/// Writes cot^T d(rhs)/du into grad_u and accumulates cot^T d(rhs)/dparams
/// into grad_params.
void model_vjp(const DiffModel& m, std::span<const double> params, const StateVec& u,
               const StateVec& cot, StateVec& grad_u, std::span<double> grad_params,
               ModelScratch& s);

/// Sum of squared residuals over both components and every grid point.
/// Grids must match exactly.
double trajectory_loss(const Trajectory& pred, const Trajectory& target);

struct RolloutConfig {
  int substeps = 4;            // RK4 sub-intervals per grid interval
  std::vector<double> t_grid;  // save times, strictly increasing
};

/// Fixed-step RK4 rollout of the model over cfg.t_grid. States that go
/// non-finite surface as IntegrationError; training-side callers catch this
/// and substitute the sentinel loss.
Trajectory rollout(const DiffModel& m, const ParamVector& params, const StateVec& init,
                   const RolloutConfig& cfg);

struct InteractionSample {
  double x, y;
  double nn1, nn2;              // learned interaction terms
  double beta_xy, gamma_xy;     // analytic fields beta*x*y, gamma*x*y
};

/// Evaluates both UDE networks against the true interaction fields on a grid
/// of states. Throws for NeuralOde models.
std::vector<InteractionSample> recovered_interaction(const DiffModel& m,
                                                     const ParamVector& params,
                                                     const LvParams& p,
                                                     std::span<const StateVec> grid);

namespace detail {

/// One classical RK4 substep of the model dynamics; `stages` receives the
/// intermediate states and slopes needed to reverse the step. Shared by
/// rollout and the gradient tape so both paths take bitwise identical steps.
struct Rk4Stages {
  StateVec u1, u2, u3, u4;  // states where the rhs was evaluated
  StateVec k1, k2, k3, k4;
};

inline StateVec rk4_substep(const DiffModel& m, std::span<const double> params,
                            const StateVec& y, double dt, ModelScratch& s,
                            Rk4Stages& st) {
  st.u1 = y;
  st.k1 = model_rhs(m, params, st.u1, s);
  st.u2 = {y.x + 0.5 * dt * st.k1.x, y.y + 0.5 * dt * st.k1.y};
  st.k2 = model_rhs(m, params, st.u2, s);
  st.u3 = {y.x + 0.5 * dt * st.k2.x, y.y + 0.5 * dt * st.k2.y};
  st.k3 = model_rhs(m, params, st.u3, s);
  st.u4 = {y.x + dt * st.k3.x, y.y + dt * st.k3.y};
  st.k4 = model_rhs(m, params, st.u4, s);
  return {y.x + (dt / 6.0) * (st.k1.x + 2.0 * st.k2.x + 2.0 * st.k3.x + st.k4.x),
          y.y + (dt / 6.0) * (st.k1.y + 2.0 * st.k2.y + 2.0 * st.k3.y + st.k4.y)};
}

}  // namespace detail

}  // namespace sciml
