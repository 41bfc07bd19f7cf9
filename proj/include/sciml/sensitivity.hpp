#pragma once

#include "sciml/models.hpp"
#include "sciml/objective.hpp"

namespace sciml {

/// Substitute loss when a rollout leaves the finite range; paired with a zero
/// gradient so optimizers ride out transient blow-ups instead of aborting.
inline constexpr double kSentinelLoss = 1e10;

/// Sub-intervals per data interval used for the forward reconstruction grid
/// of the continuous adjoint.
inline constexpr int kAdjointFineSubsteps = 8;

/// Forward-pass record sufficient to reverse the integration exactly.
struct RolloutTape {
  struct Substep {
    double t, dt;
    detail::Rk4Stages stages;
  };
  std::vector<Substep> substeps;      // forward order
  std::vector<StateVec> grid_states;  // prediction at every grid point
};

/// Loss (sum of squared residuals over both components and all time points)
/// plus its exact gradient under the fixed-step RK4 discretization, computed
/// by reversing the tape with one VJP per stage. Returns the sentinel loss
/// and a zero gradient when the rollout or the reverse pass goes non-finite.
/// Requires cfg.t_grid == data.times.
LossGrad loss_and_grad_discrete(const DiffModel& m, const ParamVector& params,
                                const Trajectory& data, const RolloutConfig& cfg);

/// Loss only (same rollout and sentinel semantics), for line searches.
double loss_discrete(const DiffModel& m, const ParamVector& params,
                     const Trajectory& data, const RolloutConfig& cfg);

/// Central-difference gradient, one coordinate at a time; O(P) rollouts.
/// Test oracle, independent of the reverse pass.
ParamVector loss_grad_fd(const DiffModel& m, const ParamVector& params,
                         const Trajectory& data, const RolloutConfig& cfg, double h);

/// Gradient via the adjoint ODE solved backward in time with loss-gradient
/// impulses at each observation, accumulating the parameter integral by
/// quadrature on the same backward solve. Forward states are reconstructed
/// from a stored fine-grid rollout (kAdjointFineSubsteps per interval) with
/// cubic Hermite interpolation. Cross-check of the discrete path; throws
/// IntegrationError on solver failure.
ParamVector adjoint_grad_continuous(const DiffModel& m, const ParamVector& params,
                                    const Trajectory& data, const ToleranceSpec& tol);

}  // namespace sciml
