#pragma once

#include <cstdint>
#include <vector>

#include "sciml/ode.hpp"

namespace sciml {

/// Predator-prey rate constants; all strictly positive.
struct LvParams {
  double alpha = 1.5;  // prey growth rate
  double beta = 1.0;   // predation rate
  double gamma = 0.5;  // predator conversion rate
  double delta = 2.0;  // predator death rate
};

struct StateVec {
  double x = 0.0;  // prey population
  double y = 0.0;  // predator population
};

/// Time series on a strictly increasing grid; len(times) == len(states) >= 1.
struct Trajectory {
  std::vector<double> times;
  std::vector<StateVec> states;

  std::size_t size() const { return times.size(); }
};

void validate(const LvParams& p);
void validate(const Trajectory& traj);

/// (alpha*x - beta*x*y, -delta*y + gamma*x*y). Rejects non-finite states.
StateVec lv_rhs(const StateVec& s, const LvParams& p);

/// Conserved quantity V = gamma*x - delta*ln(x) + beta*y - alpha*ln(y);
/// constant along exact orbits, used as a solver-accuracy oracle.
/// Requires x > 0 and y > 0.
double lv_invariant(const StateVec& s, const LvParams& p);

/// Reference solution on a uniform grid of `n_points` over [t0, t1] from the
/// adaptive solver at the given tolerance; states[0] == init.
Trajectory generate_truth(const LvParams& p, const StateVec& init, double t0,
                          double t1, int n_points, const ToleranceSpec& tol);

/// Perturbs every component by an independent N(0, sigma^2) draw from a
/// seeded generator; times unchanged, sigma = 0 is the identity. Values are
/// not clipped, so populations may go slightly negative at large sigma.
Trajectory add_noise(const Trajectory& traj, double sigma, std::uint64_t seed);

}  // namespace sciml
