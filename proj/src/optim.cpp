#include "sciml/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sciml {

AdamState make_adam(std::size_t n, double lr) {
  AdamState st;
  st.m.assign(n, 0.0);
  st.v.assign(n, 0.0);
  st.lr = lr;
  return st;
}

bool adam_step(AdamState& st, ParamVector& params, const ParamVector& grad) {
  if (params.size() != st.m.size() || grad.size() != st.m.size())
    throw std::invalid_argument("adam_step: length mismatch");
  if (!all_finite(grad)) return false;

  const long t = st.t + 1;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grad[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grad[i] * grad[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
  }
  st.t = t;
  return true;
}

RmsPropState make_rmsprop(std::size_t n, double lr, double rho, double eps) {
  RmsPropState st;
  st.v.assign(n, 0.0);
  st.lr = lr;
  st.rho = rho;
  st.eps = eps;
  return st;
}

bool rmsprop_step(RmsPropState& st, ParamVector& params, const ParamVector& grad) {
  if (params.size() != st.v.size() || grad.size() != st.v.size())
    throw std::invalid_argument("rmsprop_step: length mismatch");
  if (!all_finite(grad)) return false;

  for (std::size_t i = 0; i < params.size(); ++i) {
    st.v[i] = st.rho * st.v[i] + (1.0 - st.rho) * grad[i] * grad[i];
    params[i] -= st.lr * grad[i] / (std::sqrt(st.v[i]) + st.eps);
  }
  return true;
}

namespace {

struct CurvaturePair {
  Vec s, y;
  double rho;  // 1 / s'y
};

Vec two_loop_direction(const Vec& grad, const std::deque<CurvaturePair>& hist) {
  Vec q = grad;
  std::vector<double> alpha(hist.size());
  for (std::size_t i = hist.size(); i-- > 0;) {
    alpha[i] = hist[i].rho * dot(hist[i].s, q);
    axpy(-alpha[i], hist[i].y, q);
  }
  if (!hist.empty()) {
    const CurvaturePair& last = hist.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    scale(q, gamma);
  }
  for (std::size_t i = 0; i < hist.size(); ++i) {
    const double beta = hist[i].rho * dot(hist[i].y, q);
    axpy(alpha[i] - beta, hist[i].s, q);
  }
  scale(q, -1.0);  // descent direction
  return q;
}

}  // namespace

LbfgsResult lbfgs_run(const Objective& objective, ParamVector params,
                      const LbfgsOptions& opts, int iters, const LossFn* loss_only) {
  if (iters < 0) throw std::invalid_argument("lbfgs_run: iters must be >= 0");

  LbfgsResult res;
  std::deque<CurvaturePair> hist;

  LossGrad cur = objective(params);
  res.losses.push_back(cur.loss);

  const auto trial_loss = [&](const ParamVector& p) {
    return loss_only ? (*loss_only)(p) : objective(p).loss;
  };

  int consecutive_failures = 0;
  Vec trial(params.size());

  for (int it = 0; it < iters; ++it) {
    res.iterations = it + 1;
    const double gnorm = norm2(cur.grad);
    if (gnorm < 1e-14) break;  // at a stationary point already

    Vec dir = two_loop_direction(cur.grad, hist);
    double slope = dot(dir, cur.grad);
    if (!(slope < 0.0)) {  // not a descent direction; discard the history
      hist.clear();
      dir = cur.grad;
      scale(dir, -1.0);
      slope = -dot(cur.grad, cur.grad);
    }

    double alpha = hist.empty() ? std::min(1.0, 1.0 / gnorm) : 1.0;
    bool accepted = false;
    double f_new = cur.loss;
    for (int ev = 0; ev < opts.max_ls_evals; ++ev) {
      for (std::size_t i = 0; i < params.size(); ++i)
        trial[i] = params[i] + alpha * dir[i];
      f_new = trial_loss(trial);
      if (std::isfinite(f_new) && f_new <= cur.loss + opts.c1 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= opts.backtrack;
    }

    if (!accepted) {
      // Steepest-descent fallback with a tiny step.
      const double alpha_t = 1e-8 / std::max(1.0, gnorm);
      for (std::size_t i = 0; i < params.size(); ++i)
        trial[i] = params[i] - alpha_t * cur.grad[i];
      f_new = trial_loss(trial);
      if (std::isfinite(f_new) && f_new < cur.loss) {
        hist.clear();
        accepted = true;
      }
    }

    if (!accepted) {
      if (++consecutive_failures >= 2) {
        res.line_search_failed = true;
        break;
      }
      hist.clear();
      continue;
    }
    consecutive_failures = 0;

    LossGrad next = objective(trial);
    Vec s(params.size()), y(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      s[i] = trial[i] - params[i];
      y[i] = next.grad[i] - cur.grad[i];
    }
    const double sy = dot(s, y);
    if (sy > opts.curvature_min) {
      hist.push_back({std::move(s), std::move(y), 1.0 / sy});
      while (static_cast<int>(hist.size()) > opts.memory) hist.pop_front();
    }

    params = trial;
    cur = std::move(next);
    res.losses.push_back(cur.loss);
  }

  res.params = std::move(params);
  return res;
}

PhaseKind phase_kind_from_string(std::string_view name) {
  if (name == "adam") return PhaseKind::Adam;
  if (name == "rmsprop") return PhaseKind::RmsProp;
  if (name == "lbfgs") return PhaseKind::Lbfgs;
  throw std::invalid_argument("unknown phase kind: " + std::string(name));
}

std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::Adam: return "adam";
    case PhaseKind::RmsProp: return "rmsprop";
    case PhaseKind::Lbfgs: return "lbfgs";
  }
  return "?";
}

void validate(const TrainSchedule& schedule) {
  if (schedule.phases.empty())
    throw std::invalid_argument("TrainSchedule: at least one phase required");
  for (const Phase& ph : schedule.phases)
    if (ph.iters < 1) throw std::invalid_argument("TrainSchedule: iterations must be >= 1");
  if (schedule.log_every < 1)
    throw std::invalid_argument("TrainSchedule: log cadence must be >= 1");
}

namespace {

void clip_global_norm(ParamVector& grad, double max_norm) {
  const double n = norm2(grad);
  if (n > max_norm) scale(grad, max_norm / n);
}

}  // namespace

TrainResult run_schedule(const Objective& objective, const LossFn& loss_only,
                         ParamVector params0, const TrainSchedule& schedule,
                         std::uint64_t seed) {
  validate(schedule);

  TrainResult res;
  res.seed = seed;
  res.params = std::move(params0);

  try {
    res.initial_loss = loss_only ? loss_only(res.params) : objective(res.params).loss;
    res.trace.push_back({0, 0, res.initial_loss});
    res.final_loss = res.initial_loss;

    int phase_no = 0;
    for (const Phase& ph : schedule.phases) {
      ++phase_no;
      if (ph.kind == PhaseKind::Lbfgs) {
        LbfgsOptions opts;
        LbfgsResult lr = lbfgs_run(objective, std::move(res.params), opts, ph.iters,
                                   loss_only ? &loss_only : nullptr);
        res.params = std::move(lr.params);
        for (std::size_t i = 0; i < lr.losses.size(); ++i)
          if (i % static_cast<std::size_t>(schedule.log_every) == 0 ||
              i + 1 == lr.losses.size())
            res.trace.push_back({phase_no, static_cast<int>(i), lr.losses[i]});
        res.final_loss = lr.losses.back();
        continue;
      }

      AdamState adam = make_adam(res.params.size(), ph.lr);
      adam.beta1 = ph.beta1;
      adam.beta2 = ph.beta2;
      adam.eps = ph.eps;
      RmsPropState rms = make_rmsprop(res.params.size(), ph.lr, ph.rho, ph.eps);

      for (int it = 0; it < ph.iters; ++it) {
        LossGrad lg = objective(res.params);
        if (it % schedule.log_every == 0 || it + 1 == ph.iters)
          res.trace.push_back({phase_no, it, lg.loss});
        clip_global_norm(lg.grad, kGradClipNorm);
        if (ph.kind == PhaseKind::Adam)
          adam_step(adam, res.params, lg.grad);
        else
          rmsprop_step(rms, res.params, lg.grad);
      }
      res.final_loss = loss_only ? loss_only(res.params) : objective(res.params).loss;
      res.trace.push_back({phase_no, ph.iters, res.final_loss});
    }
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  return res;
}

}  // namespace sciml
