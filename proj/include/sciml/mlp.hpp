#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sciml/vec.hpp"

namespace sciml {

enum class Activation { Rbf, Relu, Tanh, Sigmoid };

Activation activation_from_string(std::string_view name);
std::string_view to_string(Activation a);

/// Dense MLP: hidden layers share one activation, output layer is linear.
struct MlpSpec {
  std::vector<int> widths;  // [n_in, h1, ..., n_out]
  Activation activation = Activation::Tanh;
};

void validate(const MlpSpec& spec);

/// Flat parameter layout, frozen for checkpoint portability: layer-major,
/// each layer stores its weight matrix row-major (out x in) followed by the
/// bias vector.
using ParamVector = Vec;

std::size_t param_count(const MlpSpec& spec);

/// Glorot-uniform weights W ~ U(+-sqrt(6/(fan_in+fan_out))), zero biases.
ParamVector mlp_init(const MlpSpec& spec, std::uint64_t seed);

/// Reusable forward/backward buffers; contents are overwritten by each call.
struct MlpScratch {
  std::vector<Vec> acts;  // acts[l]: input to layer l (acts[0] = network input)
  std::vector<Vec> pres;  // pres[l]: pre-activation output of layer l
  Vec delta, delta_next;
};

void mlp_forward(const MlpSpec& spec, std::span<const double> params,
                 std::span<const double> input, std::span<double> output,
                 MlpScratch& scratch);

Vec mlp_forward(const MlpSpec& spec, const ParamVector& params, const Vec& input);

/// Reverse-mode products for one cotangent: writes cot^T dF/dinput into
/// `grad_input` and accumulates cot^T dF/dparams into `grad_params`.
/// Runs its own forward pass to cache activations.
void mlp_vjp(const MlpSpec& spec, std::span<const double> params,
             std::span<const double> input, std::span<const double> cotangent,
             std::span<double> grad_input, std::span<double> grad_params,
             MlpScratch& scratch);

std::pair<Vec, ParamVector> mlp_vjp(const MlpSpec& spec, const ParamVector& params,
                                    const Vec& input, const Vec& cotangent);

}  // namespace sciml
