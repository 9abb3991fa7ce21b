#pragma once

// Hyperbolic residual connections on L^{K,n}: the weighted Lorentzian
// centroid (lresnet_add) and the three earlier constructions it subsumes
// (parallel transport, tangent space and space-like addition), plus the
// optional norm scaling that slides a point along its geodesic from o.

#include <cassert>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lorentz.hpp"

namespace lresnet {

// (w_x, w_y) of the centroid form. w_x is a fixed positive constant, w_y is
// free and enters through |w_y|.
class ResidualWeights {
 public:
  ResidualWeights(double w_x = 1.0, double w_y = 1.0) : wx_(w_x), wy_(w_y) {
    if (!std::isfinite(w_x) || !(w_x > 0.0)) {
      throw invalid_weights_error("w_x must be finite and positive, got " + std::to_string(w_x));
    }
    if (!std::isfinite(w_y)) throw invalid_weights_error("w_y must be finite");
  }

  double w_x() const noexcept { return wx_; }
  double w_y() const noexcept { return wy_; }
  double w_y_abs() const noexcept { return std::abs(wy_); }

 private:
  double wx_;
  double wy_;
};

class ScaleFactor {
 public:
  explicit ScaleFactor(double gamma) : gamma_(gamma) {
    if (!std::isfinite(gamma) || !(gamma > 0.0)) {
      throw invalid_weights_error("scale factor must be finite and positive, got " + std::to_string(gamma));
    }
  }
  double value() const noexcept { return gamma_; }

 private:
  double gamma_;
};

namespace detail {

// out <- (wx x + wy y) / (sqrt(-K) |wx x + wy y|_L) in one pass over the
// inputs. wy must already be non-negative. Returns the denominator.
template <class T>
inline T lresnet_raw(const T* x, const T* y, T* out, std::size_t n1, T wx, T wy, T sqrt_neg_k) noexcept {
  const T ut = wx * x[0] + wy * y[0];
  out[0] = ut;
  for (std::size_t i = 1; i < n1; ++i) out[i] = wx * x[i] + wy * y[i];
  const T ss = space_sq_norm(out, n1);
  const T q = ss - ut * ut;
  const T denom = sqrt_neg_k * std::sqrt(std::abs(q));
  // Lower bound sqrt(wx^2 + wy^2) on the denominator, up to rounding in q.
  assert(denom * denom + T(64) * std::numeric_limits<T>::epsilon() * sqrt_neg_k * sqrt_neg_k * (ut * ut + ss) >=
         (wx * wx + wy * wy) * (T(1) - T(64) * std::numeric_limits<T>::epsilon()));
  const T inv = T(1) / denom;
  for (std::size_t i = 0; i < n1; ++i) out[i] *= inv;
  return denom;
}

template <class T>
inline void space_add_raw(const T* x, const T* y, T* out, std::size_t n1, T k) noexcept {
  for (std::size_t i = 1; i < n1; ++i) out[i] = x[i] + y[i];
  out[0] = std::sqrt(space_sq_norm(out, n1) - T(1) / k);
}

template <class T>
inline void scale_raw(const T* m, T* out, std::size_t n1, T gamma, T k) noexcept {
  for (std::size_t i = 1; i < n1; ++i) out[i] = gamma * m[i];
  out[0] = std::sqrt(space_sq_norm(out, n1) - T(1) / k);
}

// exp_x(P_{o->x}(log_o(y))) for a single pair; `o` and `tmp` are n1 scratch.
// Returns the transport denominator.
template <class T>
inline T pt_add_raw(const T* x, const T* y, T* out, const T* o, T* tmp, std::size_t n1, T k, T taylor) noexcept {
  log_map_raw(o, y, out, n1, k, taylor);
  const T denom = transport_raw(o, x, out, tmp, n1, k);
  exp_map_raw(x, tmp, out, n1, k, taylor);
  return denom;
}

template <class T>
inline void ts_add_raw(const T* x, const T* y, T* out, const T* o, T* tmp, std::size_t n1, T wx, T wy, T k,
                       T taylor) noexcept {
  log_map_raw(o, x, tmp, n1, k, taylor);
  log_map_raw(o, y, out, n1, k, taylor);
  for (std::size_t i = 0; i < n1; ++i) tmp[i] = wx * tmp[i] + wy * out[i];
  exp_map_raw(o, tmp, out, n1, k, taylor);
}

}  // namespace detail

template <std::floating_point T>
LorentzPoint<T> lresnet_add(const LorentzPoint<T>& x, const LorentzPoint<T>& y, const ResidualWeights& w) {
  detail::require_same_manifold(x, y, "lresnet_add");
  std::vector<T> out(x.size());
  detail::lresnet_raw(x.begin(), y.begin(), out.data(), out.size(), T(w.w_x()), T(w.w_y_abs()),
                      T(x.curvature().sqrt_neg()));
  return LorentzPoint<T>::unchecked(std::move(out), x.curvature());
}

// x (+)_P y = exp_x(P_{o->x}(log_o(y))). This is the "forward" direction
// x (+)_P f(x) when used as a residual connection.
template <std::floating_point T>
LorentzPoint<T> pt_add(const LorentzPoint<T>& x, const LorentzPoint<T>& y,
                       Tolerances<T> tol = Tolerances<T>::defaults()) {
  detail::require_same_manifold(x, y, "pt_add");
  const auto o = origin<T>(x.curvature(), x.dim());
  std::vector<T> out(x.size()), tmp(x.size());
  const T denom = detail::pt_add_raw(x.begin(), y.begin(), out.data(), o.begin(), tmp.data(), out.size(),
                                     T(x.curvature().value()), tol.taylor_switch);
  if (!(std::abs(denom) >= T(detail::degenerate_denominator))) {
    throw degenerate_pair_error("pt_add: degenerate transport denominator " + std::to_string(denom));
  }
  return LorentzPoint<T>::unchecked(std::move(out), x.curvature());
}

// f(x) (+)_P x, the "backward" direction.
template <std::floating_point T>
LorentzPoint<T> pt_add_reversed(const LorentzPoint<T>& x, const LorentzPoint<T>& y,
                                Tolerances<T> tol = Tolerances<T>::defaults()) {
  return pt_add(y, x, tol);
}

// exp_o(w_x log_o(x) + w_y log_o(y)), w_x, w_y > 0.
template <std::floating_point T>
LorentzPoint<T> ts_add(const LorentzPoint<T>& x, const LorentzPoint<T>& y, double w_x = 1.0, double w_y = 1.0,
                       Tolerances<T> tol = Tolerances<T>::defaults()) {
  detail::require_same_manifold(x, y, "ts_add");
  if (!std::isfinite(w_x) || !std::isfinite(w_y) || !(w_x > 0.0) || !(w_y > 0.0)) {
    throw invalid_weights_error("ts_add: weights must be strictly positive");
  }
  const auto o = origin<T>(x.curvature(), x.dim());
  std::vector<T> out(x.size()), tmp(x.size());
  detail::ts_add_raw(x.begin(), y.begin(), out.data(), o.begin(), tmp.data(), out.size(), T(w_x), T(w_y),
                     T(x.curvature().value()), tol.taylor_switch);
  return LorentzPoint<T>::unchecked(std::move(out), x.curvature());
}

// [sqrt(|x_s + y_s|^2 - 1/K), x_s + y_s]
template <std::floating_point T>
LorentzPoint<T> space_add(const LorentzPoint<T>& x, const LorentzPoint<T>& y) {
  detail::require_same_manifold(x, y, "space_add");
  std::vector<T> out(x.size());
  detail::space_add_raw(x.begin(), y.begin(), out.data(), out.size(), T(x.curvature().value()));
  return LorentzPoint<T>::unchecked(std::move(out), x.curvature());
}

// [sqrt(|gamma m_s|^2 - 1/K), gamma m_s]: moves m along the geodesic through o.
template <std::floating_point T>
LorentzPoint<T> scale(const LorentzPoint<T>& m, const ScaleFactor& gamma) {
  std::vector<T> out(m.size());
  detail::scale_raw(m.begin(), out.data(), out.size(), T(gamma.value()), T(m.curvature().value()));
  return LorentzPoint<T>::unchecked(std::move(out), m.curvature());
}

// k-ary weighted centroid: sum_i w_i p_i normalised onto the hyperboloid.
// Weights must be non-negative with at least one positive entry.
template <std::floating_point T>
LorentzPoint<T> centroid(std::span<const LorentzPoint<T>> points, std::span<const double> weights) {
  if (points.empty()) throw dimension_error("centroid: no points");
  if (points.size() != weights.size()) throw dimension_error("centroid: weights/points length mismatch");
  bool any_positive = false;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0) throw invalid_weights_error("centroid: weights must be finite and >= 0");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) throw invalid_weights_error("centroid: all weights are zero");
  const auto& p0 = points.front();
  std::vector<T> u(p0.size(), T(0));
  for (std::size_t j = 0; j < points.size(); ++j) {
    detail::require_same_manifold(p0, points[j], "centroid");
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += T(weights[j]) * points[j][i];
  }
  const T denom = T(p0.curvature().sqrt_neg()) * std::sqrt(std::abs(detail::inner(u.data(), u.data(), u.size())));
  for (auto& v : u) v /= denom;
  return LorentzPoint<T>::unchecked(std::move(u), p0.curvature());
}

}  // namespace lresnet
