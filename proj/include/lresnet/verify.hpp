#pragma once

// Randomised executable checks of the centroid residual's properties:
// the denominator lower bound, non-commutativity of parallel-transport
// addition on mirrored pairs, recovery of each baseline's geodesic from o
// with explicitly constructed weights, hyperboloid validity of every
// addition, and the float32 instability demonstrations.
//
// Every check is a pure function of its arguments (seeded mt19937_64).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "lorentz.hpp"
#include "residual.hpp"

namespace lresnet {

struct PropertyResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  // Largest observed value of the checked quantity; its meaning is per check
  // (see `metric`). Comparable to `tolerance`.
  double worst_violation = -std::numeric_limits<double>::infinity();
  double tolerance = 0;
  std::string metric;
  std::vector<double> witness;  // inputs of the worst trial
  std::uint64_t seed = 0;
  int precision = 64;
  double curvature = -1;
  std::size_t dim = 0;
  double sigma = 1;
  std::string method;
  // Lemma: trials with w_y == 0 where the bound holds with equality.
  std::size_t boundary_cases = 0;
  // Proposition: trials whose constructed weights left the admissible domain.
  std::size_t construction_violations = 0;
  std::vector<std::vector<double>> violation_witnesses;
  // Theorem: mirrored pairs whose two directions differ by more than 1e-3.
  std::size_t noncommuting_pairs = 0;

  bool passed() const noexcept { return failures == 0 && construction_violations * 100 <= trials; }
};

namespace detail {

inline void append(std::vector<double>& w, std::span<const double> v) { w.insert(w.end(), v.begin(), v.end()); }

template <class T>
void append(std::vector<double>& w, const LorentzPoint<T>& p) {
  for (T v : p.coords()) w.push_back(double(v));
}

inline void note_worst(PropertyResult& r, double v, std::vector<double> witness) {
  if (v > r.worst_violation || r.witness.empty()) {
    r.worst_violation = std::max(v, r.worst_violation);
    r.witness = std::move(witness);
  }
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa < 1e-24 && bb < 1e-24) return 1.0;
  if (aa < 1e-24 || bb < 1e-24) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

}  // namespace detail

// sqrt(-K) |w_x x + w_y y|_L > sqrt(w_x^2 + w_y^2). worst_violation is the
// largest (rhs - lhs) / rhs; negative means every trial satisfied the bound.
// About 1% of trials use w_y = 0, where lhs == rhs analytically; those are
// counted as boundary cases when |lhs - rhs| <= 1e-9 rhs.
inline PropertyResult check_lemma1(std::size_t trials, std::size_t dim, Curvature k, double sigma,
                                   std::uint64_t seed) {
  if (trials < 1) throw error("check_lemma1: trials must be >= 1");
  PropertyResult r;
  r.name = "lemma1";
  r.metric = "max (rhs - lhs) / rhs";
  r.tolerance = 0.0;
  r.trials = trials;
  r.seed = seed;
  r.curvature = k.value();
  r.dim = dim;
  r.sigma = sigma;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wdist(0.01, 10.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto x = sample_point<double>(rng, dim, k, sigma);
    const auto y = sample_point<double>(rng, dim, k, sigma);
    const double wx = wdist(rng);
    const double wy = coin(rng) < 0.01 ? 0.0 : wdist(rng);
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = wx * x[i] + wy * y[i];
    const double lhs = k.sqrt_neg() * lorentz_norm(u);
    const double rhs = std::sqrt(wx * wx + wy * wy);
    const double v = (rhs - lhs) / rhs;
    if (!(lhs > rhs)) {
      if (wy == 0.0 && std::abs(v) <= 1e-9) {
        ++r.boundary_cases;
      } else {
        ++r.failures;
      }
    }
    if (v > r.worst_violation) {
      std::vector<double> w;
      detail::append(w, x);
      detail::append(w, y);
      w.push_back(wx);
      w.push_back(wy);
      detail::note_worst(r, v, std::move(w));
    }
  }
  return r;
}

// Lift Gaussian space components and mirror the last one: x_{n+1} = -y_{n+1}.
template <class Rng>
std::pair<LorentzPoint<double>, LorentzPoint<double>> sample_mirrored_pair(Rng& rng, std::size_t dim, Curvature k,
                                                                           double sigma = 1.0) {
  std::normal_distribution<double> g(0.0, sigma);
  std::vector<double> s(dim);
  for (auto& v : s) v = g(rng);
  auto ys = s;
  s.back() = -s.back();
  return {lift_from_space(s, k), lift_from_space(ys, k)};
}

// For mirrored pairs z = x (+)_P y and z' = y (+)_P x must agree on every
// coordinate but the last, which flips sign.
inline PropertyResult check_noncommutativity(std::size_t trials, std::size_t dim, Curvature k, std::uint64_t seed,
                                             double sigma = 1.0, double tolerance = 1e-5) {
  if (trials < 1) throw error("check_noncommutativity: trials must be >= 1");
  if (dim < 2) throw dimension_error("check_noncommutativity: dim must be >= 2");
  PropertyResult r;
  r.name = "noncommutativity";
  r.metric = "max(|z_last + z'_last| / max(1,|z_last|), max_i |z_i - z'_i| / max(1,|z_i|))";
  r.tolerance = tolerance;
  r.trials = trials;
  r.seed = seed;
  r.curvature = k.value();
  r.dim = dim;
  r.sigma = sigma;
  r.method = "pt";
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto [x, y] = sample_mirrored_pair(rng, dim, k, sigma);
    const auto z = pt_add(x, y);
    const auto zr = pt_add_reversed(x, y);
    const std::size_t last = z.size() - 1;
    double v = std::abs(z[last] + zr[last]) / std::max(1.0, std::abs(z[last]));
    double spread = 0;
    for (std::size_t i = 0; i < last; ++i) {
      v = std::max(v, std::abs(z[i] - zr[i]) / std::max(1.0, std::abs(z[i])));
    }
    for (std::size_t i = 0; i < z.size(); ++i) spread = std::max(spread, std::abs(z[i] - zr[i]));
    if (spread > 1e-3) ++r.noncommuting_pairs;
    if (!(v <= tolerance)) ++r.failures;
    if (v > r.worst_violation) {
      std::vector<double> w;
      detail::append(w, x);
      detail::append(w, y);
      detail::note_worst(r, v, std::move(w));
    }
  }
  return r;
}

enum class BaselineMethod { pt, ts, sa };

inline const char* to_string(BaselineMethod m) noexcept {
  switch (m) {
    case BaselineMethod::pt: return "pt";
    case BaselineMethod::ts: return "ts";
    default: return "sa";
  }
}

inline BaselineMethod parse_baseline(const std::string& s) {
  if (s == "pt") return BaselineMethod::pt;
  if (s == "ts") return BaselineMethod::ts;
  if (s == "sa") return BaselineMethod::sa;
  throw error("unknown baseline method '" + s + "' (expected pt, ts or sa)");
}

struct ConstructedWeights {
  double w_x;
  double w_y;
};

// Weights for which the centroid of (x, y) lies on the geodesic from o to
// x (+)_P y. With y' = y - y_t sqrt(-K) o, u = c_u y' = log_o(y),
// x' = o + x, v = u + c_v x' = P_{o->x}(u), alpha = sqrt(-K) |v|_L:
//   z = cosh(alpha) x + sinh(alpha)/alpha (c_u y' + c_v x')
// so z_s = (cosh(alpha) + sinh(alpha)/alpha c_v) x_s + (sinh(alpha)/alpha c_u) y_s.
inline ConstructedWeights proposition1_weights_pt(const LorentzPoint<double>& x, const LorentzPoint<double>& y) {
  const Curvature k = x.curvature();
  const double s = k.sqrt_neg();
  const double taylor = Tolerances<double>::defaults().taylor_switch;
  const std::size_t n1 = x.size();
  const auto o = origin<double>(k, x.dim());
  const double c_u = detail::acosh_ratio(std::max(1.0, y.time() * s), taylor);
  std::vector<double> u(n1), xp(n1), v(n1);
  for (std::size_t i = 0; i < n1; ++i) {
    u[i] = c_u * (y[i] - y.time() * s * o[i]);
    xp[i] = o[i] + x[i];
  }
  const double c_v = lorentz_inner(x.coords(), u) / (-1.0 / k.value() - lorentz_inner(o.coords(), x.coords()));
  for (std::size_t i = 0; i < n1; ++i) v[i] = u[i] + c_v * xp[i];
  const double alpha = s * lorentz_norm(v);
  const double sc = detail::sinhc(alpha, taylor);
  return {std::cosh(alpha) + sc * c_v, sc * c_u};
}

// exp_o(a log_o(x) + b log_o(y))_s is a positive multiple of
// a c_1 x_s + b c_2 y_s with c_i = acosh(t_i sqrt(-K)) / sqrt(-K t_i^2 - 1).
inline ConstructedWeights proposition1_weights_ts(const LorentzPoint<double>& x, const LorentzPoint<double>& y,
                                                  double a = 1.0, double b = 1.0) {
  const double s = x.curvature().sqrt_neg();
  const double taylor = Tolerances<double>::defaults().taylor_switch;
  const double c1 = detail::acosh_ratio(std::max(1.0, x.time() * s), taylor);
  const double c2 = detail::acosh_ratio(std::max(1.0, y.time() * s), taylor);
  return {a * c1, b * c2};
}

// For each trial: baseline output z, constructed weights, m = centroid with
// those weights; the Klein images of m and z must point the same way
// (cosine >= 1 - tolerance). worst_violation is max (1 - cosine).
inline PropertyResult check_proposition1(BaselineMethod method, std::size_t trials, std::size_t dim, Curvature k,
                                         std::uint64_t seed, double sigma = 1.0, double tolerance = 1e-6) {
  if (trials < 1) throw error("check_proposition1: trials must be >= 1");
  PropertyResult r;
  r.name = "proposition1";
  r.method = to_string(method);
  r.metric = "max (1 - cos(klein(m), klein(z)))";
  r.tolerance = tolerance;
  r.trials = trials;
  r.seed = seed;
  r.curvature = k.value();
  r.dim = dim;
  r.sigma = sigma;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> tw(0.25, 2.0);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto x = sample_point<double>(rng, dim, k, sigma);
    const auto y = sample_point<double>(rng, dim, k, sigma);
    LorentzPoint<double> z = x;
    ConstructedWeights w{1.0, 1.0};
    double a = 1.0, b = 1.0;
    switch (method) {
      case BaselineMethod::pt:
        z = pt_add(x, y);
        w = proposition1_weights_pt(x, y);
        break;
      case BaselineMethod::ts:
        a = tw(rng);
        b = tw(rng);
        z = ts_add(x, y, a, b);
        w = proposition1_weights_ts(x, y, a, b);
        break;
      case BaselineMethod::sa:
        z = space_add(x, y);
        break;
    }
    std::vector<double> wit;
    detail::append(wit, x);
    detail::append(wit, y);
    wit.push_back(w.w_x);
    wit.push_back(w.w_y);
    if (!(w.w_x > 0.0) || !(w.w_y >= 0.0) || !std::isfinite(w.w_x) || !std::isfinite(w.w_y)) {
      ++r.construction_violations;
      r.violation_witnesses.push_back(std::move(wit));
      continue;
    }
    const auto m = lresnet_add(x, y, ResidualWeights(w.w_x, w.w_y));
    const double v = 1.0 - detail::cosine(to_klein(m), to_klein(z));
    if (!(v <= tolerance)) ++r.failures;
    if (v > r.worst_violation) detail::note_worst(r, v, std::move(wit));
  }
  return r;
}

enum class AdditionMethod { lresnet, pt, ts, sa, scale };

inline const char* to_string(AdditionMethod m) noexcept {
  switch (m) {
    case AdditionMethod::lresnet: return "lresnet";
    case AdditionMethod::pt: return "pt";
    case AdditionMethod::ts: return "ts";
    case AdditionMethod::sa: return "sa";
    default: return "scale";
  }
}

// max |K<z,z>_L - 1| over random applications at precision T. Weights are
// drawn from [0.1, 3] (lresnet, scale) or [0.1, 1] (ts). The residual has a
// rounding floor of about eps |z|^2, so far-out inputs or large ts weights
// fail an absolute tolerance regardless of the formula.
template <std::floating_point T>
PropertyResult check_validity(AdditionMethod method, std::size_t trials, std::size_t dim, Curvature k, double sigma,
                              std::uint64_t seed, double tolerance) {
  if (trials < 1) throw error("check_validity: trials must be >= 1");
  PropertyResult r;
  r.name = "validity";
  r.method = to_string(method);
  r.metric = "max |K<z,z>_L - 1|";
  r.tolerance = tolerance;
  r.trials = trials;
  r.seed = seed;
  r.precision = sizeof(T) * 8;
  r.curvature = k.value();
  r.dim = dim;
  r.sigma = sigma;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wd(0.1, 3.0), tsd(0.1, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto x = sample_point<T>(rng, dim, k, sigma);
    const auto y = sample_point<T>(rng, dim, k, sigma);
    const double a = method == AdditionMethod::ts ? tsd(rng) : wd(rng);
    const double b = method == AdditionMethod::ts ? tsd(rng) : wd(rng);
    LorentzPoint<T> z = x;
    switch (method) {
      case AdditionMethod::lresnet: z = lresnet_add(x, y, ResidualWeights(a, b)); break;
      case AdditionMethod::pt: z = pt_add(x, y); break;
      case AdditionMethod::ts: z = ts_add(x, y, a, b); break;
      case AdditionMethod::sa: z = space_add(x, y); break;
      case AdditionMethod::scale: z = scale(x, ScaleFactor(a)); break;
    }
    const double v = double(z.membership_residual());
    const bool ok = v <= tolerance && z.time() > 0;
    if (!ok) ++r.failures;
    if (!(v <= r.worst_violation)) {
      std::vector<double> w;
      detail::append(w, x);
      detail::append(w, y);
      w.push_back(a);
      w.push_back(b);
      r.worst_violation = std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
      r.witness = std::move(w);
    }
  }
  return r;
}

enum class InstabilityMode { poincare_boundary, lorentz_coshdomain };

inline const char* to_string(InstabilityMode m) noexcept {
  return m == InstabilityMode::poincare_boundary ? "poincare_boundary" : "lorentz_coshdomain";
}

inline InstabilityMode parse_instability_mode(const std::string& s) {
  if (s == "poincare_boundary") return InstabilityMode::poincare_boundary;
  if (s == "lorentz_coshdomain") return InstabilityMode::lorentz_coshdomain;
  throw error("unknown stress mode '" + s + "' (expected poincare_boundary or lorentz_coshdomain)");
}

// Each probe counts as a failure unless the 32-bit reference formula is
// non-finite and the production path is finite on the same input.
// worst_violation is the number of probes whose reference path stayed finite.
inline PropertyResult demo_instability(InstabilityMode mode) {
  PropertyResult r;
  r.name = std::string("instability_") + to_string(mode);
  r.method = to_string(mode);
  r.precision = 32;
  r.curvature = -1.0;
  r.metric = "probes where the reference path stayed finite";
  r.tolerance = 0;
  r.worst_violation = 0;
  const Curvature k(-1.0);
  const std::size_t dims[] = {2, 4, 8, 16};
  for (std::size_t n : dims) {
    ++r.trials;
    bool ref_nonfinite = false, prod_finite = true;
    std::vector<double> wit;
    if (mode == InstabilityMode::lorentz_coshdomain) {
      // First magnitude >= 1e3 whose rounding sends K<x,x>_L to <= 1.
      for (float mag : {1e3f, 2e3f, 5e3f, 1e4f, 2e4f, 5e4f, 1e5f}) {
        std::vector<float> s(n, mag);
        const auto x = lift_from_space(s, k);
        bool nonfinite = false;
        for (float v : log_map_unclamped(x, x)) nonfinite = nonfinite || !std::isfinite(v);
        for (float v : log_map(x, x).vec()) prod_finite = prod_finite && std::isfinite(v);
        if (wit.empty() || nonfinite) {
          wit.assign(x.begin(), x.end());
        }
        if (nonfinite) {
          ref_nonfinite = true;
          break;
        }
      }
    } else {
      const double radius = 1.0 - 1e-8;
      std::vector<double> xd(n, 0.0), yd(n, 0.0);
      xd[0] = radius;
      yd[1] = radius;
      std::vector<float> xf(xd.begin(), xd.end()), yf(yd.begin(), yd.end());
      ref_nonfinite = !std::isfinite(poincare_distance_unchecked(xf, yf));
      prod_finite = std::isfinite(poincare_distance(xd, yd));
      wit = xd;
      detail::append(wit, yd);
    }
    if (!ref_nonfinite) r.worst_violation += 1;
    if (!(ref_nonfinite && prod_finite)) {
      ++r.failures;
      r.violation_witnesses.push_back(wit);
    }
    if (r.witness.empty()) r.witness = std::move(wit);
    r.dim = n;
  }
  return r;
}

}  // namespace lresnet
