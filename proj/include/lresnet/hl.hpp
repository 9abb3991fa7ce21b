#pragma once

// Hyperbolic layer (HL): a Euclidean layer on the space-like part followed
// by recomputing the time component, y_s = act(W x_s), y_t = sqrt(|y_s|^2 - 1/K).

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "lorentz.hpp"
#include "matrix.hpp"

namespace lresnet {

enum class Activation { identity, tanh };

inline const char* to_string(Activation a) noexcept { return a == Activation::tanh ? "tanh" : "identity"; }

inline Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::identity;
  if (s == "tanh") return Activation::tanh;
  throw error("unknown activation '" + s + "'");
}

struct HLLayer {
  Matrix<double> weight;  // n_out x n_in
  Activation activation = Activation::identity;

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }
};

// Gaussian entries with std 1/sqrt(n_in).
template <class Rng>
HLLayer make_hl_layer(Rng& rng, std::size_t n_out, std::size_t n_in, Activation act = Activation::identity) {
  HLLayer l{Matrix<double>(n_out, n_in), act};
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(double(n_in)));
  for (auto& w : l.weight.data()) w = g(rng);
  return l;
}

namespace detail {

inline double activate(Activation a, double v) noexcept { return a == Activation::tanh ? std::tanh(v) : v; }

inline double activate_deriv(Activation a, double v) noexcept {
  if (a == Activation::identity) return 1.0;
  const double t = std::tanh(v);
  return 1.0 - t * t;
}

}  // namespace detail

// Pre-activation W x_s.
inline std::vector<double> hl_preactivation(const HLLayer& layer, std::span<const double> x_space) {
  return layer.weight.apply(x_space);
}

inline LorentzPoint<double> hl_forward(const HLLayer& layer, const LorentzPoint<double>& x) {
  if (x.dim() != layer.in_dim()) {
    throw dimension_error("HL layer expects dim " + std::to_string(layer.in_dim()) + ", got " +
                          std::to_string(x.dim()));
  }
  auto a = hl_preactivation(layer, x.space());
  for (auto& v : a) v = detail::activate(layer.activation, v);
  return lift_from_space(a, x.curvature());
}

}  // namespace lresnet
