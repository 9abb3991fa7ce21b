#pragma once

// First derivatives of the residual/HL building blocks, written out by hand,
// and a central-difference oracle to check them against.
//
// Notation: u = w_x x + |w_y| y, q = <u,u>_L (< 0), N = sqrt(-q), s = sqrt(-K),
// z = u / (s N). Then dz/du = (I - u (Gu)^T / q) / (s N) with
// G = diag(-1, 1, ..., 1).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hl.hpp"
#include "lorentz.hpp"
#include "matrix.hpp"
#include "residual.hpp"

namespace lresnet {

using Jacobian = Matrix<double>;

// Central differences: column i is (f(p + h e_i) - f(p - h e_i)) / 2h.
template <class F>
Jacobian fd_oracle(F&& f, std::span<const double> point, double step = 1e-5) {
  if (!(step > 0.0)) throw error("fd_oracle: step must be positive");
  std::vector<double> p(point.begin(), point.end());
  std::vector<std::vector<double>> cols;
  cols.reserve(p.size());
  std::size_t out_dim = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + step;
    const std::vector<double> fp = f(std::span<const double>(p));
    p[i] = saved - step;
    const std::vector<double> fm = f(std::span<const double>(p));
    p[i] = saved;
    if (i == 0) out_dim = fp.size();
    if (fp.size() != out_dim || fm.size() != out_dim) throw dimension_error("fd_oracle: output size changed");
    std::vector<double> c(out_dim);
    for (std::size_t r = 0; r < out_dim; ++r) c[r] = (fp[r] - fm[r]) / (2.0 * step);
    cols.push_back(std::move(c));
  }
  Jacobian j(out_dim, p.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (std::size_t r = 0; r < out_dim; ++r) j(r, c) = cols[c][r];
  }
  return j;
}

// max|A - B| / max(max|B|, floor); the matrix relative error used for FD checks.
inline double relative_error(const Jacobian& analytic, const Jacobian& reference, double floor = 1e-8) {
  if (analytic.rows() != reference.rows() || analytic.cols() != reference.cols()) {
    throw dimension_error("relative_error: shape mismatch");
  }
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < analytic.data().size(); ++i) {
    diff = std::max(diff, std::abs(analytic.data()[i] - reference.data()[i]));
    scale = std::max(scale, std::abs(reference.data()[i]));
  }
  return diff / std::max(scale, floor);
}

// dz/du for z = u / (sqrt(-K) |u|_L).
inline Jacobian normalize_jacobian(std::span<const double> u, Curvature k) {
  const std::size_t n1 = u.size();
  const double q = detail::inner(u.data(), u.data(), n1);
  const double scale = 1.0 / (k.sqrt_neg() * std::sqrt(std::abs(q)));
  Jacobian j(n1, n1);
  for (std::size_t r = 0; r < n1; ++r) {
    for (std::size_t c = 0; c < n1; ++c) {
      const double gu = c == 0 ? -u[0] : u[c];
      j(r, c) = ((r == c ? 1.0 : 0.0) - u[r] * gu / q) * scale;
    }
  }
  return j;
}

struct LResNetJacobians {
  Jacobian j_x;
  Jacobian j_y;
  std::vector<double> g_wy;  // dz/dw_y
  bool w_y_at_kink = false;  // w_y == 0: subgradient 0 reported
};

inline std::vector<double> lresnet_pre_normalization(const LorentzPoint<double>& x, const LorentzPoint<double>& y,
                                                     const ResidualWeights& w) {
  std::vector<double> u(x.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = w.w_x() * x[i] + w.w_y_abs() * y[i];
  return u;
}

inline LResNetJacobians lresnet_jacobians(const LorentzPoint<double>& x, const LorentzPoint<double>& y,
                                          const ResidualWeights& w) {
  detail::require_same_manifold(x, y, "lresnet_jacobians");
  const auto u = lresnet_pre_normalization(x, y, w);
  const Jacobian ju = normalize_jacobian(u, x.curvature());
  LResNetJacobians out{Jacobian(ju.rows(), ju.cols()), Jacobian(ju.rows(), ju.cols()),
                       std::vector<double>(u.size(), 0.0), w.w_y() == 0.0};
  const double sgn = w.w_y() > 0.0 ? 1.0 : (w.w_y() < 0.0 ? -1.0 : 0.0);
  for (std::size_t r = 0; r < ju.rows(); ++r) {
    double gy = 0;
    for (std::size_t c = 0; c < ju.cols(); ++c) {
      out.j_x(r, c) = w.w_x() * ju(r, c);
      out.j_y(r, c) = w.w_y_abs() * ju(r, c);
      gy += ju(r, c) * y[c];
    }
    out.g_wy[r] = sgn * gy;
  }
  return out;
}

// d lift_from_space(s) / ds, shape (n+1) x n.
inline Jacobian lift_jacobian(std::span<const double> space, Curvature k) {
  const std::size_t n = space.size();
  double ss = 0;
  for (double v : space) ss += v * v;
  const double t = std::sqrt(ss - 1.0 / k.value());
  Jacobian j(n + 1, n);
  for (std::size_t c = 0; c < n; ++c) {
    j(0, c) = space[c] / t;
    j(c + 1, c) = 1.0;
  }
  return j;
}

// d scale(m, gamma) / dm over all n+1 coordinates (time column is zero).
inline Jacobian scale_jacobian(const LorentzPoint<double>& m, const ScaleFactor& gamma) {
  const double g = gamma.value();
  const auto out = scale(m, gamma);
  Jacobian j(m.size(), m.size());
  for (std::size_t c = 1; c < m.size(); ++c) {
    j(0, c) = g * g * m[c] / out.time();
    j(c, c) = g;
  }
  return j;
}

// d HL(x) / dx over all n_in+1 input coordinates (time column is zero).
inline Jacobian hl_layer_jacobian(const HLLayer& layer, const LorentzPoint<double>& x) {
  if (x.dim() != layer.in_dim()) throw dimension_error("hl_layer_jacobian: input dimension mismatch");
  const auto pre = hl_preactivation(layer, x.space());
  const std::size_t no = layer.out_dim(), ni = layer.in_dim();
  std::vector<double> a(no), d(no);
  double ss = 0;
  for (std::size_t i = 0; i < no; ++i) {
    a[i] = detail::activate(layer.activation, pre[i]);
    d[i] = detail::activate_deriv(layer.activation, pre[i]);
    ss += a[i] * a[i];
  }
  const double yt = std::sqrt(ss - 1.0 / x.curvature().value());
  Jacobian j(no + 1, ni + 1);
  for (std::size_t c = 0; c < ni; ++c) {
    double t = 0;
    for (std::size_t r = 0; r < no; ++r) {
      const double v = d[r] * layer.weight(r, c);
      j(r + 1, c + 1) = v;
      t += a[r] * v;
    }
    j(0, c + 1) = t / yt;
  }
  return j;
}

// Reverse-mode products (vector-Jacobian) used by the toy network.

struct LResNetVjp {
  std::vector<double> g_x;
  std::vector<double> g_y;
  double g_wy = 0;
};

// Given g = dL/dz returns dL/dx, dL/dy, dL/dw_y in O(n).
inline LResNetVjp lresnet_vjp(const LorentzPoint<double>& x, const LorentzPoint<double>& y, const ResidualWeights& w,
                              std::span<const double> g) {
  const auto u = lresnet_pre_normalization(x, y, w);
  const std::size_t n1 = u.size();
  const double q = detail::inner(u.data(), u.data(), n1);
  const double inv = 1.0 / (x.curvature().sqrt_neg() * std::sqrt(std::abs(q)));
  double ug = 0;
  for (std::size_t i = 0; i < n1; ++i) ug += u[i] * g[i];
  // J_u^T g = (g - G u (u.g) / q) / (s N)
  std::vector<double> gu(n1);
  for (std::size_t i = 0; i < n1; ++i) {
    const double guu = i == 0 ? -u[0] : u[i];
    gu[i] = (g[i] - guu * ug / q) * inv;
  }
  LResNetVjp out{std::vector<double>(n1), std::vector<double>(n1), 0.0};
  double gwy = 0;
  for (std::size_t i = 0; i < n1; ++i) {
    out.g_x[i] = w.w_x() * gu[i];
    out.g_y[i] = w.w_y_abs() * gu[i];
    gwy += gu[i] * y[i];
  }
  const double sgn = w.w_y() > 0.0 ? 1.0 : (w.w_y() < 0.0 ? -1.0 : 0.0);
  out.g_wy = sgn * gwy;
  return out;
}

// dL/ds for z = lift(s), given g = dL/dz.
inline std::vector<double> lift_vjp(std::span<const double> z, std::span<const double> g) {
  std::vector<double> out(z.size() - 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i + 1] + g[0] * z[i + 1] / z[0];
  return out;
}

struct HLVjp {
  std::vector<double> g_x;  // over all n_in+1 input coordinates, time entry 0
  Matrix<double> g_weight;
};

inline HLVjp hl_vjp(const HLLayer& layer, const LorentzPoint<double>& x, std::span<const double> g) {
  const auto pre = hl_preactivation(layer, x.space());
  const std::size_t no = layer.out_dim(), ni = layer.in_dim();
  std::vector<double> a(no);
  double ss = 0;
  for (std::size_t i = 0; i < no; ++i) {
    a[i] = detail::activate(layer.activation, pre[i]);
    ss += a[i] * a[i];
  }
  const double yt = std::sqrt(ss - 1.0 / x.curvature().value());
  std::vector<double> gpre(no);
  for (std::size_t i = 0; i < no; ++i) {
    gpre[i] = (g[i + 1] + g[0] * a[i] / yt) * detail::activate_deriv(layer.activation, pre[i]);
  }
  HLVjp out{std::vector<double>(ni + 1, 0.0), Matrix<double>(no, ni)};
  for (std::size_t r = 0; r < no; ++r) {
    for (std::size_t c = 0; c < ni; ++c) {
      out.g_weight(r, c) = gpre[r] * x[c + 1];
      out.g_x[c + 1] += gpre[r] * layer.weight(r, c);
    }
  }
  return out;
}

inline std::vector<double> scale_vjp(const LorentzPoint<double>& m, const ScaleFactor& gamma,
                                     std::span<const double> g) {
  const double gm = gamma.value();
  const auto out = scale(m, gamma);
  std::vector<double> r(m.size(), 0.0);
  for (std::size_t i = 1; i < m.size(); ++i) r[i] = gm * g[i] + g[0] * gm * gm * m[i] / out.time();
  return r;
}

}  // namespace lresnet
