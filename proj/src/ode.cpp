#include "sciml/ode.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

namespace sciml {

std::vector<double> uniform_grid(double t0, double t1, int n) {
  if (n < 1) throw std::invalid_argument("uniform_grid: n must be >= 1");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    t[static_cast<std::size_t>(i)] = t0 + (t1 - t0) * (static_cast<double>(i) / (n - 1.0));
  if (n == 1) t[0] = t0;
  t.back() = (n > 1) ? t1 : t0;
  return t;
}

namespace {

void check_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw std::invalid_argument("time grid is empty");
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw std::invalid_argument("time grid must be strictly increasing");
}

}  // namespace

OdeResult rk4_fixed(const RhsFn& rhs, const Vec& y0,
                    const std::vector<double>& t_grid, int substeps) {
  check_grid(t_grid);
  if (substeps < 1) throw std::invalid_argument("rk4_fixed: substeps must be >= 1");

  const std::size_t n = y0.size();
  Vec y = y0, k1(n), k2(n), k3(n), k4(n), tmp(n);

  OdeResult out;
  out.times.reserve(t_grid.size());
  out.states.reserve(t_grid.size());
  out.times.push_back(t_grid[0]);
  out.states.push_back(y);

  for (std::size_t g = 0; g + 1 < t_grid.size(); ++g) {
    const double h = (t_grid[g + 1] - t_grid[g]) / substeps;
    for (int s = 0; s < substeps; ++s) {
      const double t = t_grid[g] + s * h;
      rhs(t, y, k1);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
      rhs(t + 0.5 * h, tmp, k2);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
      rhs(t + 0.5 * h, tmp, k3);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
      rhs(t + h, tmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        y[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!all_finite(y))
        throw IntegrationError("rk4_fixed: non-finite state at t = " +
                               std::to_string(t + h));
    }
    out.times.push_back(t_grid[g + 1]);
    out.states.push_back(y);
  }
  return out;
}

OdeResult tsit5_adaptive(const RhsFn& rhs, const Vec& y0, double t0, double t1,
                         const std::vector<double>& saveat, const ToleranceSpec& tol,
                         std::size_t err_dims) {
  using namespace tsit5;
  if (!(t1 > t0)) throw std::invalid_argument("tsit5_adaptive: t1 must exceed t0");
  check_grid(saveat);
  if (saveat.front() < t0 || saveat.back() > t1)
    throw std::invalid_argument("tsit5_adaptive: saveat outside t_span");
  if (!(tol.reltol > 0.0) || !(tol.abstol > 0.0) || !(tol.dt_min > 0.0) || tol.max_steps < 1)
    throw std::invalid_argument("tsit5_adaptive: invalid tolerance spec");

  const std::size_t n = y0.size();
  const std::size_t n_err = (err_dims == 0 || err_dims > n) ? n : err_dims;

  Vec y = y0, ynew(n), ytmp(n);
  Vec k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

  OdeResult out;
  out.times.reserve(saveat.size());
  out.states.reserve(saveat.size());

  std::size_t save_idx = 0;
  double t = t0;
  if (saveat[0] == t0) {
    out.times.push_back(t0);
    out.states.push_back(y);
    save_idx = 1;
  }

  double dt = tol.dt_init > 0.0 ? tol.dt_init : 1e-3;
  double err_prev = 1.0;
  bool fsal_valid = false;
  long steps = 0;

  while (save_idx < saveat.size()) {
    if (++steps > tol.max_steps)
      throw IntegrationError("tsit5_adaptive: step budget exhausted at t = " +
                             std::to_string(t));

    const double t_event = saveat[save_idx];
    bool clamped = false;
    double h = dt;
    if (t + h >= t_event) {
      h = t_event - t;
      clamped = true;
    }
    if (h < tol.dt_min)
      throw IntegrationError("tsit5_adaptive: step size underflow at t = " +
                             std::to_string(t));

    if (!fsal_valid) {
      rhs(t, y, k1);
      fsal_valid = true;
    }

    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + c2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + c3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + c4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + c5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                            a65 * k5[i]);
    rhs(t + h, ytmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b2 * k2[i] + b3 * k3[i] + b4 * k4[i] +
                            b5 * k5[i] + b6 * k6[i]);
    rhs(t + h, ynew, k7);

    // Weighted RMS error over the controlled components.
    double err_sq = 0.0;
    bool finite = all_finite(ynew);
    if (finite) {
      for (std::size_t i = 0; i < n_err; ++i) {
        const double e = h * (btilde1 * k1[i] + btilde2 * k2[i] + btilde3 * k3[i] +
                              btilde4 * k4[i] + btilde5 * k5[i] + btilde6 * k6[i] +
                              btilde7 * k7[i]);
        const double scale =
            tol.abstol + tol.reltol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double r = e / scale;
        err_sq += r * r;
      }
    }
    double err = finite ? std::sqrt(err_sq / static_cast<double>(n_err))
                        : std::numeric_limits<double>::infinity();

    if (std::isfinite(err) && err <= 1.0) {
      t = clamped ? t_event : t + h;
      std::swap(y, ynew);
      std::swap(k1, k7);  // FSAL
      if (clamped && t == t_event) {
        out.times.push_back(t);
        out.states.push_back(y);
        ++save_idx;
      }
      const double e = std::max(err, 1e-10);
      double factor = kSafety * std::pow(e, -kErrExp) * std::pow(err_prev, kPrevExp);
      factor = std::clamp(factor, kShrinkLimit, kGrowthLimit);
      // A clamped step must not drag the controller's preferred step down.
      dt = clamped ? std::max(dt, h * factor) : h * factor;
      err_prev = e;
    } else {
      double factor = std::isfinite(err)
                          ? kSafety * std::pow(err, -kErrExp) * std::pow(err_prev, kPrevExp)
                          : kShrinkLimit;
      factor = std::clamp(factor, kShrinkLimit, 1.0);
      dt = h * factor;
      if (dt < tol.dt_min)
        throw IntegrationError("tsit5_adaptive: step size underflow at t = " +
                               std::to_string(t));
    }
  }
  return out;
}

}  // namespace sciml
