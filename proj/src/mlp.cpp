#include "sciml/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "sciml/rng.hpp"

namespace sciml {

Activation activation_from_string(std::string_view name) {
  if (name == "rbf") return Activation::Rbf;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation: " + std::string(name));
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Rbf: return "rbf";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

void validate(const MlpSpec& spec) {
  if (spec.widths.size() < 2)
    throw std::invalid_argument("MlpSpec: need at least input and output widths");
  for (int w : spec.widths)
    if (w < 1) throw std::invalid_argument("MlpSpec: widths must be >= 1");
}

std::size_t param_count(const MlpSpec& spec) {
  validate(spec);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(spec.widths[l]);
    const auto out = static_cast<std::size_t>(spec.widths[l + 1]);
    n += in * out + out;
  }
  return n;
}

ParamVector mlp_init(const MlpSpec& spec, std::uint64_t seed) {
  validate(spec);
  ParamVector p(param_count(spec), 0.0);
  Rng rng(seed);
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
    const auto in = static_cast<std::size_t>(spec.widths[l]);
    const auto out = static_cast<std::size_t>(spec.widths[l + 1]);
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) p[off + i] = rng.uniform(-bound, bound);
    off += in * out + out;  // biases stay zero
  }
  return p;
}

namespace {

inline double act_eval(Activation a, double z) {
  switch (a) {
    case Activation::Rbf: return std::exp(-z * z);
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
  }
  return 0.0;
}

inline double act_deriv(Activation a, double z) {
  switch (a) {
    case Activation::Rbf: return -2.0 * z * std::exp(-z * z);
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      return s * (1.0 - s);
    }
  }
  return 0.0;
}

void ensure_scratch(const MlpSpec& spec, MlpScratch& s) {
  const std::size_t layers = spec.widths.size() - 1;
  if (s.acts.size() != layers + 1) {
    s.acts.assign(layers + 1, {});
    s.pres.assign(layers, {});
  }
  for (std::size_t l = 0; l <= layers; ++l)
    s.acts[l].resize(static_cast<std::size_t>(spec.widths[l]));
  for (std::size_t l = 0; l < layers; ++l)
    s.pres[l].resize(static_cast<std::size_t>(spec.widths[l + 1]));
  s.delta.resize(static_cast<std::size_t>(spec.widths.back()));
}

/// Forward pass caching acts/pres in the scratch; writes nothing else.
void forward_cached(const MlpSpec& spec, std::span<const double> params,
                    std::span<const double> input, MlpScratch& s) {
  const std::size_t layers = spec.widths.size() - 1;
  ensure_scratch(spec, s);
  std::copy(input.begin(), input.end(), s.acts[0].begin());

  std::size_t off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto in = static_cast<std::size_t>(spec.widths[l]);
    const auto out = static_cast<std::size_t>(spec.widths[l + 1]);
    const double* W = params.data() + off;
    const double* b = params.data() + off + in * out;
    const Vec& a = s.acts[l];
    Vec& z = s.pres[l];
    for (std::size_t o = 0; o < out; ++o) {
      double acc = b[o];
      const double* row = W + o * in;
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * a[i];
      z[o] = acc;
    }
    const bool hidden = (l + 1 < layers);
    Vec& anext = s.acts[l + 1];
    if (hidden)
      for (std::size_t o = 0; o < out; ++o) anext[o] = act_eval(spec.activation, z[o]);
    else
      anext = z;
    off += in * out + out;
  }
}

}  // namespace

void mlp_forward(const MlpSpec& spec, std::span<const double> params,
                 std::span<const double> input, std::span<double> output,
                 MlpScratch& scratch) {
  if (input.size() != static_cast<std::size_t>(spec.widths.front()))
    throw std::invalid_argument("mlp_forward: input length mismatch");
  if (params.size() != param_count(spec))
    throw std::invalid_argument("mlp_forward: parameter length mismatch");
  forward_cached(spec, params, input, scratch);
  const Vec& out = scratch.acts.back();
  std::copy(out.begin(), out.end(), output.begin());
}

Vec mlp_forward(const MlpSpec& spec, const ParamVector& params, const Vec& input) {
  MlpScratch s;
  Vec out(static_cast<std::size_t>(spec.widths.back()));
  mlp_forward(spec, params, input, out, s);
  return out;
}

void mlp_vjp(const MlpSpec& spec, std::span<const double> params,
             std::span<const double> input, std::span<const double> cotangent,
             std::span<double> grad_input, std::span<double> grad_params,
             MlpScratch& s) {
  if (input.size() != static_cast<std::size_t>(spec.widths.front()))
    throw std::invalid_argument("mlp_vjp: input length mismatch");
  if (cotangent.size() != static_cast<std::size_t>(spec.widths.back()))
    throw std::invalid_argument("mlp_vjp: cotangent length mismatch");
  if (params.size() != param_count(spec) || grad_params.size() != param_count(spec))
    throw std::invalid_argument("mlp_vjp: parameter length mismatch");

  forward_cached(spec, params, input, s);
  const std::size_t layers = spec.widths.size() - 1;

  // Layer parameter offsets, walked backward.
  std::size_t off_end = param_count(spec);
  s.delta.assign(cotangent.begin(), cotangent.end());

  for (std::size_t li = layers; li-- > 0;) {
    const auto in = static_cast<std::size_t>(spec.widths[li]);
    const auto out = static_cast<std::size_t>(spec.widths[li + 1]);
    const std::size_t off = off_end - (in * out + out);
    const double* W = params.data() + off;
    double* gW = grad_params.data() + off;
    double* gb = grad_params.data() + off + in * out;
    const Vec& a = s.acts[li];
    const Vec& delta = s.delta;

    s.delta_next.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = delta[o];
      gb[o] += d;
      double* gRow = gW + o * in;
      const double* wRow = W + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        gRow[i] += d * a[i];
        s.delta_next[i] += wRow[i] * d;
      }
    }

    if (li > 0) {
      const Vec& z = s.pres[li - 1];
      for (std::size_t i = 0; i < in; ++i)
        s.delta_next[i] *= act_deriv(spec.activation, z[i]);
      std::swap(s.delta, s.delta_next);
    } else {
      std::copy(s.delta_next.begin(), s.delta_next.end(), grad_input.begin());
    }
    off_end = off;
  }
}

std::pair<Vec, ParamVector> mlp_vjp(const MlpSpec& spec, const ParamVector& params,
                                    const Vec& input, const Vec& cotangent) {
  MlpScratch s;
  Vec grad_in(static_cast<std::size_t>(spec.widths.front()), 0.0);
  ParamVector grad_p(param_count(spec), 0.0);
  mlp_vjp(spec, params, input, cotangent, grad_in, grad_p, s);
  return {std::move(grad_in), std::move(grad_p)};
}

}  // namespace sciml
