#pragma once

#include <functional>

#include "sciml/mlp.hpp"

namespace sciml {

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Deterministic full-batch objective: loss and its gradient at params.
using Objective = std::function<LossGrad(const ParamVector&)>;

/// Loss-only evaluation for line searches.
using LossFn = std::function<double(const ParamVector&)>;

}  // namespace sciml
