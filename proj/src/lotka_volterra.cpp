#include "sciml/lotka_volterra.hpp"

#include <cmath>
#include <stdexcept>

#include "sciml/rng.hpp"

namespace sciml {

void validate(const LvParams& p) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0) || !(p.gamma > 0.0) || !(p.delta > 0.0))
    throw std::invalid_argument("LvParams: all four rates must be strictly positive");
}

void validate(const Trajectory& traj) {
  if (traj.times.empty() || traj.times.size() != traj.states.size())
    throw std::invalid_argument("Trajectory: times/states must be non-empty and equal length");
  for (std::size_t i = 1; i < traj.times.size(); ++i)
    if (!(traj.times[i] > traj.times[i - 1]))
      throw std::invalid_argument("Trajectory: times must be strictly increasing");
}

StateVec lv_rhs(const StateVec& s, const LvParams& p) {
  if (!std::isfinite(s.x) || !std::isfinite(s.y))
    throw std::invalid_argument("lv_rhs: non-finite state");
  return {p.alpha * s.x - p.beta * s.x * s.y,
          -p.delta * s.y + p.gamma * s.x * s.y};
}

double lv_invariant(const StateVec& s, const LvParams& p) {
  if (!(s.x > 0.0) || !(s.y > 0.0))
    throw std::invalid_argument("lv_invariant: requires x > 0 and y > 0");
  return p.gamma * s.x - p.delta * std::log(s.x) + p.beta * s.y -
         p.alpha * std::log(s.y);
}

Trajectory generate_truth(const LvParams& p, const StateVec& init, double t0,
                          double t1, int n_points, const ToleranceSpec& tol) {
  validate(p);
  if (n_points < 1) throw std::invalid_argument("generate_truth: n_points must be >= 1");
  if (n_points > 1 && !(t1 > t0))
    throw std::invalid_argument("generate_truth: t1 must exceed t0");

  Trajectory out;
  if (n_points == 1) {
    out.times = {t0};
    out.states = {init};
    return out;
  }

  const auto grid = uniform_grid(t0, t1, n_points);
  const RhsFn rhs = [&p](double, std::span<const double> y, std::span<double> dydt) {
    dydt[0] = p.alpha * y[0] - p.beta * y[0] * y[1];
    dydt[1] = -p.delta * y[1] + p.gamma * y[0] * y[1];
  };
  const OdeResult res = tsit5_adaptive(rhs, {init.x, init.y}, t0, t1, grid, tol);

  out.times = res.times;
  out.states.reserve(res.states.size());
  for (const Vec& s : res.states) out.states.push_back({s[0], s[1]});
  return out;
}

Trajectory add_noise(const Trajectory& traj, double sigma, std::uint64_t seed) {
  validate(traj);
  if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be >= 0");
  if (sigma == 0.0) return traj;

  Rng rng(seed);
  Trajectory out = traj;
  for (StateVec& s : out.states) {
    s.x += sigma * rng.gaussian();
    s.y += sigma * rng.gaussian();
  }
  return out;
}

}  // namespace sciml
