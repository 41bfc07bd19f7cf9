#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sciml/vec.hpp"

namespace sciml {

struct ToleranceSpec {
  double reltol = 1e-8;
  double abstol = 1e-8;
  double dt_init = 1e-3;   // initial step hint
  double dt_min = 1e-12;   // below this the integration aborts
  long max_steps = 10'000'000;
};

struct IntegrationError : std::runtime_error {
  explicit IntegrationError(const std::string& what) : std::runtime_error(what) {}
};

/// Right-hand side callback: writes dy/dt into `dydt` (same length as `y`).
using RhsFn = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

/// Time series of n-dimensional states; the 2-d predator-prey Trajectory is a
/// thin view over this for the dynamics module.
struct OdeResult {
  std::vector<double> times;
  std::vector<Vec> states;
};

/// Classical 4th-order Runge-Kutta with `substeps` equal sub-intervals between
/// consecutive grid points. Deterministic; records the state at every grid
/// point. Throws IntegrationError naming the failure time if the state goes
/// non-finite.
OdeResult rk4_fixed(const RhsFn& rhs, const Vec& y0,
                    const std::vector<double>& t_grid, int substeps);

/// Tsitouras 5(4) embedded pair with PI step-size control. Steps are clamped
/// so every `saveat` time is hit exactly; saved times compare bitwise equal to
/// the request. `err_dims` restricts the error norm to the first n components
/// (0 = all); the parameter-gradient accumulator of the backward sensitivity
/// solve rides along outside the controlled error.
OdeResult tsit5_adaptive(const RhsFn& rhs, const Vec& y0, double t0, double t1,
                         const std::vector<double>& saveat, const ToleranceSpec& tol,
                         std::size_t err_dims = 0);

/// t[i] = t0 + (t1-t0)*i/(n-1); endpoints exact.
std::vector<double> uniform_grid(double t0, double t1, int n);

namespace tsit5 {
// Tableau from Tsitouras (2011), the 5(4) pair with FSAL. btilde are the
// error-estimate weights (5th-order minus embedded 4th-order solution).
inline constexpr double c2 = 0.161;
inline constexpr double c3 = 0.327;
inline constexpr double c4 = 0.9;
inline constexpr double c5 = 0.9800255409045097;
inline constexpr double c6 = 1.0;
inline constexpr double c7 = 1.0;

inline constexpr double a21 = 0.161;
inline constexpr double a31 = -0.008480655492356989;
inline constexpr double a32 = 0.335480655492357;
inline constexpr double a41 = 2.8971530571054935;
inline constexpr double a42 = -6.359448489975075;
inline constexpr double a43 = 4.3622954328695815;
inline constexpr double a51 = 5.325864828439257;
inline constexpr double a52 = -11.748883564062828;
inline constexpr double a53 = 7.4955393428898365;
inline constexpr double a54 = -0.09249506636175525;
inline constexpr double a61 = 5.86145544294642;
inline constexpr double a62 = -12.92096931784711;
inline constexpr double a63 = 8.159367898576159;
inline constexpr double a64 = -0.071584973281401;
inline constexpr double a65 = -0.028269050394068383;

inline constexpr double b1 = 0.09646076681806523;
inline constexpr double b2 = 0.01;
inline constexpr double b3 = 0.4798896504144996;
inline constexpr double b4 = 1.379008574103742;
inline constexpr double b5 = -3.290069515436081;
inline constexpr double b6 = 2.324710524099774;
inline constexpr double b7 = 0.0;

inline constexpr double btilde1 = -0.00178001105222577714;
inline constexpr double btilde2 = -0.0008164344596567469;
inline constexpr double btilde3 = 0.007880878010261995;
inline constexpr double btilde4 = -0.1447110071732629;
inline constexpr double btilde5 = 0.5823571654525552;
inline constexpr double btilde6 = -0.45808210592918697;
inline constexpr double btilde7 = 1.0 / 66.0;

// PI controller: dt_new = dt * safety * err^(-kErrExp) * err_prev^(kPrevExp),
// clamped to [kShrinkLimit, kGrowthLimit] relative change.
inline constexpr double kSafety = 0.9;
inline constexpr double kGrowthLimit = 5.0;
inline constexpr double kShrinkLimit = 0.2;
inline constexpr double kErrExp = 0.7 / 5.0;
inline constexpr double kPrevExp = 0.4 / 5.0;
}  // namespace tsit5

}  // namespace sciml
