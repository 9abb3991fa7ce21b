#pragma once

// Lorentz (hyperboloid) model L^{K,n} of hyperbolic space.
//
// Points are stored time-first: x = [x_t, x_s...] with <x,x>_L = 1/K and
// x_t > 0. All operations are pure; nothing here touches global state.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <random>
#include <ranges>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace lresnet {

template <class R>
concept real_range = std::ranges::contiguous_range<R> && std::ranges::sized_range<R> &&
                     std::floating_point<std::remove_cvref_t<std::ranges::range_value_t<R>>>;

template <class R>
using range_scalar_t = std::remove_cvref_t<std::ranges::range_value_t<R>>;

class Curvature {
 public:
  explicit Curvature(double k) : k_(k) {
    if (!std::isfinite(k) || !(k < 0.0)) {
      throw curvature_error("curvature must be finite and strictly negative, got " + std::to_string(k));
    }
  }

  double value() const noexcept { return k_; }
  // sqrt(-K)
  double sqrt_neg() const noexcept { return std::sqrt(-k_); }
  // sqrt(-1/K), the time component of the origin.
  double origin_time() const noexcept { return std::sqrt(-1.0 / k_); }

  friend bool operator==(const Curvature&, const Curvature&) = default;

 private:
  double k_;
};

template <std::floating_point T>
struct Tolerances {
  T membership;
  T orthogonality;  // relative to |base|_2 * |vec|_2
  T taylor_switch;

  static constexpr Tolerances defaults() noexcept {
    if constexpr (sizeof(T) >= sizeof(double)) {
      return {T(1e-9), T(1e-9), T(1e-6)};
    } else {
      return {T(1e-5), T(1e-4), T(1e-6)};
    }
  }

  void validate() const {
    if (!(membership > 0) || !(orthogonality > 0) || !(taylor_switch > 0)) {
      throw error("tolerances must be positive");
    }
  }
};

namespace detail {

// Euclidean dot product of x[b..e) and y[b..e) with eight independent
// partial sums, so the reduction is not bound by add latency. The summation
// order is fixed, results are reproducible.
template <class T>
inline T dot_range(const T* x, const T* y, std::size_t b, std::size_t e) noexcept {
  T acc[8] = {};
  std::size_t i = b;
  for (; i + 8 <= e; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += x[i + j] * y[i + j];
  }
  for (std::size_t j = 0; i < e; ++i, ++j) acc[j] += x[i] * y[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

template <class T>
inline T inner(const T* x, const T* y, std::size_t n1) noexcept {
  return dot_range(x, y, 1, n1) - x[0] * y[0];
}

template <class T>
inline T space_sq_norm(const T* x, std::size_t n1) noexcept {
  return dot_range(x, x, 1, n1);
}

// sinh(a)/a with the series branch below `taylor`.
template <class T>
inline T sinhc(T a, T taylor) noexcept {
  if (a < taylor) return T(1) + a * a / T(6);
  return std::sinh(a) / a;
}

// acosh(b)/sqrt(b^2-1) for b >= 1, series branch when b-1 < taylor.
template <class T>
inline T acosh_ratio(T b, T taylor) noexcept {
  const T d = b - T(1);
  if (d < taylor) return T(1) - d / T(3);
  return std::acosh(b) / std::sqrt(b * b - T(1));
}

// out <- exp_base(v). Caller guarantees <v,v>_L >= 0 up to rounding.
template <class T>
inline void exp_map_raw(const T* base, const T* v, T* out, std::size_t n1, T k, T taylor) noexcept {
  const T vv = std::max(inner(v, v, n1), T(0));
  const T a = std::sqrt(-k * vv);
  const T c = std::cosh(a);
  const T s = sinhc(a, taylor);
  for (std::size_t i = 0; i < n1; ++i) out[i] = c * base[i] + s * v[i];
}

// out <- log_base(y); returns true when beta had to be clamped up to 1.
template <class T>
inline bool log_map_raw(const T* base, const T* y, T* out, std::size_t n1, T k, T taylor) noexcept {
  T beta = k * inner(base, y, n1);
  const bool clamped = beta < T(1);
  if (clamped) beta = T(1);
  const T f = acosh_ratio(beta, taylor);
  for (std::size_t i = 0; i < n1; ++i) out[i] = f * (y[i] - beta * base[i]);
  return clamped;
}

// The textbook formula without clamping or series branch.
template <class T>
inline void log_map_unclamped_raw(const T* base, const T* y, T* out, std::size_t n1, T k) noexcept {
  const T beta = k * inner(base, y, n1);
  const T f = std::acosh(beta) / std::sqrt(beta * beta - T(1));
  for (std::size_t i = 0; i < n1; ++i) out[i] = f * (y[i] - beta * base[i]);
}

// out <- P_{x->y}(z). Returns the denominator -1/K - <x,y>_L.
template <class T>
inline T transport_raw(const T* x, const T* y, const T* z, T* out, std::size_t n1, T k) noexcept {
  const T denom = T(-1) / k - inner(x, y, n1);
  const T c = inner(y, z, n1) / denom;
  for (std::size_t i = 0; i < n1; ++i) out[i] = z[i] + c * (x[i] + y[i]);
  return denom;
}

template <class T>
inline void lift_raw(const T* space, T* out, std::size_t n, T k) noexcept {
  for (std::size_t i = 0; i < n; ++i) out[i + 1] = space[i];
  out[0] = std::sqrt(space_sq_norm(out, n + 1) - T(1) / k);
}

inline constexpr double degenerate_denominator = 1e-12;

}  // namespace detail

template <real_range A, real_range B>
auto lorentz_inner(const A& x, const B& y) {
  using T = std::common_type_t<range_scalar_t<A>, range_scalar_t<B>>;
  const auto n1 = std::ranges::size(x);
  if (n1 != std::ranges::size(y)) {
    throw dimension_error("lorentz_inner: length mismatch " + std::to_string(n1) + " vs " +
                          std::to_string(std::ranges::size(y)));
  }
  if (n1 < 2) throw dimension_error("lorentz_inner: vectors need at least 2 components");
  const auto* px = std::ranges::data(x);
  const auto* py = std::ranges::data(y);
  T s = -T(px[0]) * T(py[0]);
  for (std::size_t i = 1; i < n1; ++i) s += T(px[i]) * T(py[i]);
  return s;
}

// sqrt(|<x,x>_L|)
template <real_range A>
auto lorentz_norm(const A& x) {
  return std::sqrt(std::abs(lorentz_inner(x, x)));
}

template <std::floating_point T>
class LorentzPoint {
 public:
  using value_type = T;

  LorentzPoint(std::vector<T> coords, Curvature k, Tolerances<T> tol = Tolerances<T>::defaults())
      : c_(std::move(coords)), k_(k) {
    if (c_.size() < 2) throw dimension_error("LorentzPoint needs at least 2 coordinates");
    for (T v : c_) {
      if (!std::isfinite(v)) throw membership_error("LorentzPoint has non-finite coordinate");
    }
    if (!(c_[0] > 0)) throw membership_error("LorentzPoint time component must be positive");
    const T r = membership_residual();
    if (!(r <= tol.membership)) {
      throw membership_error("point off the hyperboloid: |K<x,x>-1| = " + std::to_string(r));
    }
  }

  // For results of closed-form maps; no membership check.
  static LorentzPoint unchecked(std::vector<T> coords, Curvature k) {
    return LorentzPoint(std::move(coords), k, unchecked_tag{});
  }

  std::size_t dim() const noexcept { return c_.size() - 1; }
  std::size_t size() const noexcept { return c_.size(); }
  T time() const noexcept { return c_[0]; }
  std::span<const T> space() const noexcept { return std::span<const T>(c_).subspan(1); }
  std::span<const T> coords() const noexcept { return c_; }
  const std::vector<T>& data() const noexcept { return c_; }
  const T* begin() const noexcept { return c_.data(); }
  const T* end() const noexcept { return c_.data() + c_.size(); }
  T operator[](std::size_t i) const noexcept { return c_[i]; }
  Curvature curvature() const noexcept { return k_; }

  // |K<x,x>_L - 1|
  T membership_residual() const noexcept {
    return std::abs(T(k_.value()) * detail::inner(c_.data(), c_.data(), c_.size()) - T(1));
  }

  friend bool operator==(const LorentzPoint&, const LorentzPoint&) = default;

 private:
  struct unchecked_tag {};
  LorentzPoint(std::vector<T> coords, Curvature k, unchecked_tag) : c_(std::move(coords)), k_(k) {}

  std::vector<T> c_;
  Curvature k_;
};

template <std::floating_point T>
class TangentVector {
 public:
  TangentVector(LorentzPoint<T> base, std::vector<T> vec, Tolerances<T> tol = Tolerances<T>::defaults())
      : base_(std::move(base)), v_(std::move(vec)) {
    if (v_.size() != base_.size()) throw dimension_error("tangent vector length does not match its base point");
    const T r = orthogonality_residual();
    if (!(r <= tol.orthogonality)) {
      throw invalid_tangent_error("vector not tangent at base: relative |<x,v>| = " + std::to_string(r));
    }
  }

  static TangentVector unchecked(LorentzPoint<T> base, std::vector<T> vec) {
    return TangentVector(std::move(base), std::move(vec), unchecked_tag{});
  }

  static TangentVector zero(LorentzPoint<T> base) {
    std::vector<T> v(base.size(), T(0));
    return unchecked(std::move(base), std::move(v));
  }

  const LorentzPoint<T>& base() const noexcept { return base_; }
  std::span<const T> vec() const noexcept { return v_; }
  const std::vector<T>& data() const noexcept { return v_; }
  const T* begin() const noexcept { return v_.data(); }
  const T* end() const noexcept { return v_.data() + v_.size(); }
  T operator[](std::size_t i) const noexcept { return v_[i]; }
  std::size_t size() const noexcept { return v_.size(); }

  // |<base,v>_L| / max(1, |base|_2 |v|_2)
  T orthogonality_residual() const noexcept {
    const T ip = std::abs(detail::inner(base_.begin(), v_.data(), v_.size()));
    T nb = 0, nv = 0;
    for (std::size_t i = 0; i < v_.size(); ++i) {
      nb += base_[i] * base_[i];
      nv += v_[i] * v_[i];
    }
    return ip / std::max(T(1), std::sqrt(nb) * std::sqrt(nv));
  }

 private:
  struct unchecked_tag {};
  TangentVector(LorentzPoint<T> base, std::vector<T> vec, unchecked_tag)
      : base_(std::move(base)), v_(std::move(vec)) {}

  LorentzPoint<T> base_;
  std::vector<T> v_;
};

namespace detail {

template <class T>
void require_same_manifold(const LorentzPoint<T>& x, const LorentzPoint<T>& y, const char* what) {
  if (x.size() != y.size()) {
    throw dimension_error(std::string(what) + ": dimension mismatch " + std::to_string(x.dim()) + " vs " +
                          std::to_string(y.dim()));
  }
  if (!(x.curvature() == y.curvature())) throw curvature_error(std::string(what) + ": curvature mismatch");
}

}  // namespace detail

template <std::floating_point T>
LorentzPoint<T> origin(Curvature k, std::size_t n) {
  if (n < 1) throw dimension_error("origin: n must be >= 1");
  std::vector<T> c(n + 1, T(0));
  c[0] = T(k.origin_time());
  return LorentzPoint<T>::unchecked(std::move(c), k);
}

// [sqrt(|s|^2 - 1/K), s]
template <real_range S>
auto lift_from_space(const S& space, Curvature k) {
  using T = range_scalar_t<S>;
  const auto n = std::ranges::size(space);
  if (n < 1) throw dimension_error("lift_from_space: empty space vector");
  std::vector<T> c(n + 1);
  detail::lift_raw(std::ranges::data(space), c.data(), n, T(k.value()));
  return LorentzPoint<T>::unchecked(std::move(c), k);
}

// Divide by sqrt(-K) |x|_L. Rejects space-like vectors and the lower sheet.
template <real_range A>
auto renormalize(const A& coords, Curvature k) {
  using T = range_scalar_t<A>;
  const T ip = lorentz_inner(coords, coords);
  const auto* p = std::ranges::data(coords);
  if (!(ip < 0) || !(p[0] > 0)) throw membership_error("renormalize: vector is not future time-like");
  const T s = T(k.sqrt_neg()) * std::sqrt(-ip);
  std::vector<T> c(std::ranges::size(coords));
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = p[i] / s;
  return LorentzPoint<T>::unchecked(std::move(c), k);
}

template <std::floating_point T>
LorentzPoint<T> exp_map(const LorentzPoint<T>& base, const TangentVector<T>& v,
                        Tolerances<T> tol = Tolerances<T>::defaults()) {
  if (v.size() != base.size()) throw dimension_error("exp_map: dimension mismatch");
  if (!std::ranges::equal(v.base().coords(), base.coords())) {
    throw invalid_tangent_error("exp_map: tangent vector is based at a different point");
  }
  const T vv = detail::inner(v.begin(), v.begin(), v.size());
  if (vv < -tol.orthogonality * std::max(T(1), std::abs(vv))) {
    throw invalid_tangent_error("exp_map: time-like tangent vector, <v,v>_L = " + std::to_string(vv));
  }
  std::vector<T> out(base.size());
  detail::exp_map_raw(base.begin(), v.begin(), out.data(), out.size(), T(base.curvature().value()),
                      tol.taylor_switch);
  return LorentzPoint<T>::unchecked(std::move(out), base.curvature());
}

// log_base(y) with beta clamped to >= 1. `clamped` reports whether the clamp fired.
template <std::floating_point T>
TangentVector<T> log_map(const LorentzPoint<T>& base, const LorentzPoint<T>& y, bool& clamped,
                         Tolerances<T> tol = Tolerances<T>::defaults()) {
  detail::require_same_manifold(base, y, "log_map");
  std::vector<T> out(base.size());
  clamped = detail::log_map_raw(base.begin(), y.begin(), out.data(), out.size(), T(base.curvature().value()),
                                tol.taylor_switch);
  return TangentVector<T>::unchecked(base, std::move(out));
}

template <std::floating_point T>
TangentVector<T> log_map(const LorentzPoint<T>& base, const LorentzPoint<T>& y,
                         Tolerances<T> tol = Tolerances<T>::defaults()) {
  bool clamped = false;
  return log_map(base, y, clamped, tol);
}

// Reference path: the printed formula, no clamp, no series. Produces NaN
// whenever rounding pushes beta below 1 (and at beta == 1 exactly).
template <std::floating_point T>
std::vector<T> log_map_unclamped(const LorentzPoint<T>& base, const LorentzPoint<T>& y) {
  detail::require_same_manifold(base, y, "log_map_unclamped");
  std::vector<T> out(base.size());
  detail::log_map_unclamped_raw(base.begin(), y.begin(), out.data(), out.size(), T(base.curvature().value()));
  return out;
}

template <std::floating_point T>
TangentVector<T> parallel_transport(const LorentzPoint<T>& x, const LorentzPoint<T>& y, const TangentVector<T>& z) {
  detail::require_same_manifold(x, y, "parallel_transport");
  if (z.size() != x.size()) throw dimension_error("parallel_transport: tangent dimension mismatch");
  std::vector<T> out(x.size());
  const T denom =
      detail::transport_raw(x.begin(), y.begin(), z.begin(), out.data(), out.size(), T(x.curvature().value()));
  if (!(std::abs(denom) >= T(detail::degenerate_denominator))) {
    throw degenerate_pair_error("parallel_transport: denominator -1/K - <x,y>_L = " + std::to_string(denom));
  }
  return TangentVector<T>::unchecked(y, std::move(out));
}

// x_s / x_t
template <std::floating_point T>
std::vector<T> to_klein(const LorentzPoint<T>& x) {
  std::vector<T> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i + 1] / x.time();
  return out;
}

// x_s / (x_t + sqrt(-1/K))
template <std::floating_point T>
std::vector<T> to_poincare(const LorentzPoint<T>& x) {
  const T d = x.time() + T(x.curvature().origin_time());
  std::vector<T> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i + 1] / d;
  return out;
}

// acosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2))) without any domain check.
template <real_range A, real_range B>
auto poincare_distance_unchecked(const A& x, const B& y) {
  using T = std::common_type_t<range_scalar_t<A>, range_scalar_t<B>>;
  const auto* px = std::ranges::data(x);
  const auto* py = std::ranges::data(y);
  T nx = 0, ny = 0, d = 0;
  for (std::size_t i = 0; i < std::ranges::size(x); ++i) {
    nx += px[i] * px[i];
    ny += py[i] * py[i];
    d += (px[i] - py[i]) * (px[i] - py[i]);
  }
  return std::acosh(T(1) + T(2) * d / ((T(1) - nx) * (T(1) - ny)));
}

// Poincare-ball distance at curvature -1.
template <real_range A, real_range B>
auto poincare_distance(const A& x, const B& y) {
  using T = std::common_type_t<range_scalar_t<A>, range_scalar_t<B>>;
  if (std::ranges::size(x) != std::ranges::size(y)) throw dimension_error("poincare_distance: length mismatch");
  T nx = 0, ny = 0;
  for (auto v : x) nx += v * v;
  for (auto v : y) ny += v * v;
  if (!(nx < 1) || !(ny < 1)) throw domain_error("poincare_distance: argument on or outside the unit ball");
  return poincare_distance_unchecked(x, y);
}

// |x - y|^2_L = 2/K - 2<x,y>_L, clamped at 0.
template <std::floating_point T>
T squared_lorentz_distance(const LorentzPoint<T>& x, const LorentzPoint<T>& y) {
  detail::require_same_manifold(x, y, "squared_lorentz_distance");
  const T d = T(2) / T(x.curvature().value()) - T(2) * detail::inner(x.begin(), y.begin(), x.size());
  return std::max(d, T(0));
}

// Gaussian space components (std sigma) lifted onto the hyperboloid.
// Draws are made in double so float and double samplers see the same stream.
template <std::floating_point T, class Rng>
LorentzPoint<T> sample_point(Rng& rng, std::size_t n, Curvature k, double sigma = 1.0) {
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<T> s(n);
  for (auto& v : s) v = T(g(rng));
  return lift_from_space(s, k);
}

// m points of L^{K,n}, row-major, time-first per row.
template <std::floating_point T>
class LorentzBatch {
 public:
  // Every row initialised to the origin.
  LorentzBatch(Curvature k, std::size_t n, std::size_t m) : k_(k), n_(n), m_(m), data_(m * (n + 1), T(0)) {
    if (n < 1) throw dimension_error("LorentzBatch: n must be >= 1");
    const T t = T(k.origin_time());
    for (std::size_t r = 0; r < m; ++r) data_[r * (n + 1)] = t;
  }

  LorentzBatch(Curvature k, std::size_t n, std::vector<T> data, Tolerances<T> tol = Tolerances<T>::defaults())
      : k_(k), n_(n), m_(0), data_(std::move(data)) {
    if (n < 1 || data_.size() % (n + 1) != 0) throw dimension_error("LorentzBatch: data size not a multiple of n+1");
    m_ = data_.size() / (n + 1);
    for (std::size_t r = 0; r < m_; ++r) {
      const T* p = row_ptr(r);
      const T res = std::abs(T(k.value()) * detail::inner(p, p, n + 1) - T(1));
      if (!(p[0] > 0) || !(res <= tol.membership)) {
        throw membership_error("LorentzBatch: row " + std::to_string(r) + " is off the hyperboloid");
      }
    }
  }

  Curvature curvature() const noexcept { return k_; }
  std::size_t dim() const noexcept { return n_; }
  std::size_t rows() const noexcept { return m_; }
  std::size_t stride() const noexcept { return n_ + 1; }
  std::span<const T> row(std::size_t r) const noexcept { return {row_ptr(r), n_ + 1}; }
  const T* row_ptr(std::size_t r) const noexcept { return data_.data() + r * (n_ + 1); }
  T* row_ptr(std::size_t r) noexcept { return data_.data() + r * (n_ + 1); }
  std::span<const T> data() const noexcept { return data_; }
  std::span<T> mutable_data() noexcept { return data_; }

  LorentzPoint<T> point(std::size_t r) const {
    return LorentzPoint<T>::unchecked(std::vector<T>(row(r).begin(), row(r).end()), k_);
  }

  T max_membership_residual() const noexcept {
    T worst = 0;
    for (std::size_t r = 0; r < m_; ++r) {
      const T* p = row_ptr(r);
      worst = std::max(worst, std::abs(T(k_.value()) * detail::inner(p, p, n_ + 1) - T(1)));
    }
    return worst;
  }

 private:
  Curvature k_;
  std::size_t n_;
  std::size_t m_;
  std::vector<T> data_;
};

template <std::floating_point T, class Rng>
LorentzBatch<T> sample_batch(Rng& rng, Curvature k, std::size_t n, std::size_t m, double sigma = 1.0) {
  LorentzBatch<T> b(k, n, m);
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<T> s(n);
  const T kk = T(k.value());
  for (std::size_t r = 0; r < m; ++r) {
    for (auto& v : s) v = T(g(rng));
    detail::lift_raw(s.data(), b.row_ptr(r), n, kk);
  }
  return b;
}

}  // namespace lresnet
