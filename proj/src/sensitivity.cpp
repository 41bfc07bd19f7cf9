#include "sciml/sensitivity.hpp"

#include <cmath>
#include <stdexcept>

namespace sciml {

namespace {

void check_inputs(const DiffModel& m, const ParamVector& params, const Trajectory& data,
                  const RolloutConfig& cfg) {
  validate(m);
  validate(data);
  if (params.size() != param_count(m))
    throw std::invalid_argument("sensitivity: parameter length mismatch");
  if (cfg.substeps < 1) throw std::invalid_argument("sensitivity: substeps must be >= 1");
  if (cfg.t_grid != data.times)
    throw std::invalid_argument("sensitivity: rollout grid must match data grid");
}

/// Forward rollout recording the tape. Returns false on non-finite state.
bool run_tape(const DiffModel& m, std::span<const double> params, const Trajectory& data,
              const RolloutConfig& cfg, ModelScratch& s, RolloutTape& tape) {
  tape.substeps.clear();
  tape.grid_states.clear();
  tape.grid_states.reserve(data.size());

  StateVec y = data.states[0];
  tape.grid_states.push_back(y);
  for (std::size_t g = 0; g + 1 < data.times.size(); ++g) {
    const double dt = (data.times[g + 1] - data.times[g]) / cfg.substeps;
    for (int sub = 0; sub < cfg.substeps; ++sub) {
      RolloutTape::Substep step;
      step.t = data.times[g] + sub * dt;
      step.dt = dt;
      y = detail::rk4_substep(m, params, y, dt, s, step.stages);
      tape.substeps.push_back(step);
      if (!std::isfinite(y.x) || !std::isfinite(y.y)) return false;
    }
    tape.grid_states.push_back(y);
  }
  return true;
}

double sse_loss(std::span<const StateVec> pred, std::span<const StateVec> target) {
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dx = pred[i].x - target[i].x;
    const double dy = pred[i].y - target[i].y;
    loss += dx * dx + dy * dy;
  }
  return loss;
}

}  // namespace

double loss_discrete(const DiffModel& m, const ParamVector& params,
                     const Trajectory& data, const RolloutConfig& cfg) {
  check_inputs(m, params, data, cfg);
  ModelScratch s;
  detail::Rk4Stages st;
  StateVec y = data.states[0];
  // The rollout starts at states[0], so that point's residual is zero.
  double loss = 0.0;
  for (std::size_t g = 0; g + 1 < data.times.size(); ++g) {
    const double dt = (data.times[g + 1] - data.times[g]) / cfg.substeps;
    for (int sub = 0; sub < cfg.substeps; ++sub) {
      y = detail::rk4_substep(m, params, y, dt, s, st);
      if (!std::isfinite(y.x) || !std::isfinite(y.y)) return kSentinelLoss;
    }
    const double dx = y.x - data.states[g + 1].x;
    const double dy = y.y - data.states[g + 1].y;
    loss += dx * dx + dy * dy;
  }
  return std::isfinite(loss) ? loss : kSentinelLoss;
}

LossGrad loss_and_grad_discrete(const DiffModel& m, const ParamVector& params,
                                const Trajectory& data, const RolloutConfig& cfg) {
  check_inputs(m, params, data, cfg);

  LossGrad out;
  out.grad.assign(params.size(), 0.0);

  ModelScratch s;
  RolloutTape tape;
  if (!run_tape(m, params, data, cfg, s, tape)) {
    out.loss = kSentinelLoss;
    return out;
  }

  out.loss = sse_loss(tape.grid_states, data.states);
  if (!std::isfinite(out.loss)) {
    out.loss = kSentinelLoss;
    std::fill(out.grad.begin(), out.grad.end(), 0.0);
    return out;
  }

  // Reverse sweep: adjoint impulses at observations, then step-by-step
  // reversal of each RK4 substep via four VJPs.
  StateVec a{0.0, 0.0};
  std::size_t sub_idx = tape.substeps.size();
  const std::span<double> grad(out.grad);

  for (std::size_t gi = data.times.size(); gi-- > 1;) {
    a.x += 2.0 * (tape.grid_states[gi].x - data.states[gi].x);
    a.y += 2.0 * (tape.grid_states[gi].y - data.states[gi].y);

    for (int sub = 0; sub < cfg.substeps; ++sub) {
      const RolloutTape::Substep& step = tape.substeps[--sub_idx];
      const auto& st = step.stages;
      const double dt = step.dt;
      StateVec du1, du2, du3, du4;

      const StateVec g4{(dt / 6.0) * a.x, (dt / 6.0) * a.y};
      model_vjp(m, params, st.u4, g4, du4, grad, s);
      const StateVec g3{(dt / 3.0) * a.x + dt * du4.x, (dt / 3.0) * a.y + dt * du4.y};
      model_vjp(m, params, st.u3, g3, du3, grad, s);
      const StateVec g2{(dt / 3.0) * a.x + 0.5 * dt * du3.x,
                        (dt / 3.0) * a.y + 0.5 * dt * du3.y};
      model_vjp(m, params, st.u2, g2, du2, grad, s);
      const StateVec g1{(dt / 6.0) * a.x + 0.5 * dt * du2.x,
                        (dt / 6.0) * a.y + 0.5 * dt * du2.y};
      model_vjp(m, params, st.u1, g1, du1, grad, s);

      a.x += du1.x + du2.x + du3.x + du4.x;
      a.y += du1.y + du2.y + du3.y + du4.y;
    }
  }

  if (!all_finite(out.grad)) {
    out.loss = kSentinelLoss;
    std::fill(out.grad.begin(), out.grad.end(), 0.0);
  }
  return out;
}

ParamVector loss_grad_fd(const DiffModel& m, const ParamVector& params,
                         const Trajectory& data, const RolloutConfig& cfg, double h) {
  check_inputs(m, params, data, cfg);
  if (!(h > 0.0)) throw std::invalid_argument("loss_grad_fd: h must be > 0");

  ParamVector g(params.size(), 0.0);
  ParamVector p = params;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double pj = params[j];
    p[j] = pj + h;
    const double fp = loss_discrete(m, p, data, cfg);
    p[j] = pj - h;
    const double fm = loss_discrete(m, p, data, cfg);
    p[j] = pj;
    g[j] = (fp - fm) / (2.0 * h);
  }
  return g;
}

namespace {

/// Uniform fine grid over the data span with states and slopes for cubic
/// Hermite reconstruction of the forward trajectory.
struct FineRollout {
  double t0 = 0.0, dt = 0.0;
  std::vector<StateVec> u;  // states at fine nodes
  std::vector<StateVec> f;  // model rhs at fine nodes
  std::vector<StateVec> at_obs;  // states at the observation times

  StateVec interp(double t) const {
    const double pos = (t - t0) / dt;
    auto j = static_cast<std::ptrdiff_t>(pos);
    j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(u.size()) - 2);
    const double s = pos - static_cast<double>(j);
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    const StateVec &u0 = u[j], &u1 = u[j + 1], &f0 = f[j], &f1 = f[j + 1];
    return {h00 * u0.x + h10 * dt * f0.x + h01 * u1.x + h11 * dt * f1.x,
            h00 * u0.y + h10 * dt * f0.y + h01 * u1.y + h11 * dt * f1.y};
  }
};

FineRollout fine_rollout(const DiffModel& m, std::span<const double> params,
                         const Trajectory& data, ModelScratch& s) {
  FineRollout fr;
  const std::size_t n_int = data.times.size() - 1;
  fr.t0 = data.times.front();
  fr.dt = (data.times.back() - data.times.front()) /
          (static_cast<double>(n_int) * kAdjointFineSubsteps);
  fr.u.reserve(n_int * kAdjointFineSubsteps + 1);
  fr.f.reserve(fr.u.capacity());
  fr.at_obs.reserve(data.size());

  detail::Rk4Stages st;
  StateVec y = data.states[0];
  fr.u.push_back(y);
  fr.f.push_back(model_rhs(m, params, y, s));
  fr.at_obs.push_back(y);
  for (std::size_t g = 0; g < n_int; ++g) {
    const double dt = (data.times[g + 1] - data.times[g]) / kAdjointFineSubsteps;
    for (int sub = 0; sub < kAdjointFineSubsteps; ++sub) {
      y = detail::rk4_substep(m, params, y, dt, s, st);
      if (!std::isfinite(y.x) || !std::isfinite(y.y))
        throw IntegrationError("adjoint: forward rollout went non-finite");
      fr.u.push_back(y);
      fr.f.push_back(model_rhs(m, params, y, s));
    }
    fr.at_obs.push_back(y);
  }
  return fr;
}

}  // namespace

ParamVector adjoint_grad_continuous(const DiffModel& m, const ParamVector& params,
                                    const Trajectory& data, const ToleranceSpec& tol) {
  RolloutConfig cfg{kAdjointFineSubsteps, data.times};
  check_inputs(m, params, data, cfg);

  const std::size_t P = params.size();
  ParamVector grad(P, 0.0);
  if (data.size() < 2) return grad;

  ModelScratch s;
  const FineRollout fr = fine_rollout(m, params, data, s);

  // Augmented backward state z = [lambda(2) | G(P)] integrated in the
  // reversed time variable tau = t_hi - t segment by segment; the error norm
  // is controlled on lambda only.
  Vec z(2 + P, 0.0);
  ParamVector vjp_acc(P);
  const std::size_t n_obs = data.size();

  const auto add_impulse = [&](std::size_t i) {
    z[0] += 2.0 * (fr.at_obs[i].x - data.states[i].x);
    z[1] += 2.0 * (fr.at_obs[i].y - data.states[i].y);
  };

  add_impulse(n_obs - 1);
  for (std::size_t i = n_obs - 1; i-- > 0;) {
    const double t_hi = data.times[i + 1];
    const double t_lo = data.times[i];
    const double seg = t_hi - t_lo;

    const RhsFn rhs_aug = [&](double tau, std::span<const double> zz,
                              std::span<double> dz) {
      const StateVec u = fr.interp(t_hi - tau);
      const StateVec lambda{zz[0], zz[1]};
      StateVec grad_u;
      std::fill(vjp_acc.begin(), vjp_acc.end(), 0.0);
      model_vjp(m, params, u, lambda, grad_u, vjp_acc, s);
      dz[0] = grad_u.x;   // d(lambda)/dtau = +J_u^T lambda
      dz[1] = grad_u.y;
      for (std::size_t j = 0; j < P; ++j) dz[2 + j] = -vjp_acc[j];
    };

    ToleranceSpec seg_tol = tol;
    seg_tol.dt_init = std::min(tol.dt_init > 0 ? tol.dt_init : seg / 4.0, seg / 4.0);
    const OdeResult res = tsit5_adaptive(rhs_aug, z, 0.0, seg, {seg}, seg_tol, 2);
    z = res.states.back();
    add_impulse(i);
  }

  // Backward accumulation computed -dL/dtheta; flip the sign.
  for (std::size_t j = 0; j < P; ++j) grad[j] = -z[2 + j];
  if (!all_finite(grad))
    throw IntegrationError("adjoint: non-finite gradient");
  return grad;
}

}  // namespace sciml
