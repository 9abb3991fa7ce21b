#pragma once

// Property runners comparing the analytic derivatives against the
// central-difference oracle on random configurations.

#include <cstdint>
#include <random>
#include <vector>

#include "grad.hpp"
#include "toynet.hpp"
#include "verify.hpp"

namespace lresnet {

namespace detail {

inline PropertyResult grad_result(const char* name, std::size_t trials, std::uint64_t seed, double tolerance) {
  PropertyResult r;
  r.name = name;
  r.metric = "max relative error vs central differences";
  r.tolerance = tolerance;
  r.trials = trials;
  r.seed = seed;
  return r;
}

inline void grad_trial(PropertyResult& r, double err, std::vector<double> witness) {
  if (!(err <= r.tolerance)) ++r.failures;
  note_worst(r, std::isnan(err) ? std::numeric_limits<double>::infinity() : err, std::move(witness));
}

}  // namespace detail

// J_x, J_y and g_wy of lresnet_add against FD in x, y and w_y. Random dims
// 2..32, K in [-2, -0.5], sigma in {0.5, 1, 2}, weights in [0.1, 3].
inline PropertyResult check_lresnet_jacobians(std::size_t trials, std::uint64_t seed, double step = 1e-5,
                                              double tolerance = 1e-4) {
  if (trials < 1) throw error("check_lresnet_jacobians: trials must be >= 1");
  auto r = detail::grad_result("lresnet_jacobians", trials, seed, tolerance);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dd(2, 32);
  std::uniform_real_distribution<double> kd(-2.0, -0.5), wd(0.1, 3.0);
  const double sigmas[] = {0.5, 1.0, 2.0};
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = dd(rng);
    const Curvature k(kd(rng));
    const double sigma = sigmas[t % 3];
    const auto x = sample_point<double>(rng, n, k, sigma);
    const auto y = sample_point<double>(rng, n, k, sigma);
    const ResidualWeights w(wd(rng), wd(rng));
    const auto j = lresnet_jacobians(x, y, w);
    const auto raw = [&](std::span<const double> a, std::span<const double> b, double wy) {
      std::vector<double> u(a.size());
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = w.w_x() * a[i] + std::abs(wy) * b[i];
      const auto z = renormalize(u, k);
      return std::vector<double>(z.begin(), z.end());
    };
    const auto fx = fd_oracle([&](std::span<const double> p) { return raw(p, y.coords(), w.w_y()); }, x.coords(), step);
    const auto fy = fd_oracle([&](std::span<const double> p) { return raw(x.coords(), p, w.w_y()); }, y.coords(), step);
    const std::vector<double> wy0{w.w_y()};
    const auto fw = fd_oracle([&](std::span<const double> p) { return raw(x.coords(), y.coords(), p[0]); }, wy0, step);
    Jacobian gw(j.g_wy.size(), 1);
    for (std::size_t i = 0; i < j.g_wy.size(); ++i) gw(i, 0) = j.g_wy[i];
    const double err = std::max({relative_error(j.j_x, fx), relative_error(j.j_y, fy), relative_error(gw, fw)});
    std::vector<double> wit(x.begin(), x.end());
    wit.insert(wit.end(), y.begin(), y.end());
    wit.push_back(w.w_x());
    wit.push_back(w.w_y());
    wit.push_back(k.value());
    detail::grad_trial(r, err, std::move(wit));
  }
  return r;
}

// hl_layer_jacobian against FD over all input coordinates, both activations.
inline PropertyResult check_hl_jacobian(std::size_t trials, std::uint64_t seed, double step = 1e-5,
                                        double tolerance = 1e-4) {
  if (trials < 1) throw error("check_hl_jacobian: trials must be >= 1");
  auto r = detail::grad_result("hl_layer_jacobian", trials, seed, tolerance);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dd(2, 16);
  std::uniform_real_distribution<double> kd(-2.0, -0.5);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t ni = dd(rng), no = dd(rng);
    const Curvature k(kd(rng));
    const auto layer = make_hl_layer(rng, no, ni, t % 2 ? Activation::tanh : Activation::identity);
    const auto x = sample_point<double>(rng, ni, k, 1.0);
    const auto a = hl_layer_jacobian(layer, x);
    const auto f = fd_oracle(
        [&](std::span<const double> p) {
          std::vector<double> out(no + 1);
          auto s = layer.weight.apply(p.subspan(1));
          for (auto& v : s) v = detail::activate(layer.activation, v);
          detail::lift_raw(s.data(), out.data(), no, k.value());
          return out;
        },
        x.coords(), step);
    std::vector<double> wit(x.begin(), x.end());
    wit.insert(wit.end(), layer.weight.data().begin(), layer.weight.data().end());
    detail::grad_trial(r, relative_error(a, f), std::move(wit));
  }
  return r;
}

// End-to-end: loss gradient of a 2-layer lresnet net on a small synthetic
// hierarchy, compared on `probes` random parameter coordinates.
inline PropertyResult check_end_to_end_gradient(std::size_t trials, std::uint64_t seed, std::size_t probes = 10,
                                                double step = 1e-5, double tolerance = 1e-4) {
  if (trials < 1) throw error("check_end_to_end_gradient: trials must be >= 1");
  auto r = detail::grad_result("end_to_end_gradient", trials, seed, tolerance);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> wd(0.1, 2.0);
  for (std::size_t t = 0; t < trials; ++t) {
    SyntheticHierarchyParams p;
    p.points = 30;
    p.dim = 3 + t % 3;
    p.seed = rng();
    const Curvature k(-1.0);
    const auto data = make_synthetic_hierarchy(p, k);
    NetConfig cfg;
    cfg.dim = p.dim;
    cfg.layers = 2;
    cfg.block.weights = ResidualWeights(1.0, wd(rng));
    cfg.activation = t % 2 ? Activation::tanh : Activation::identity;
    Net net = make_net(rng, k, cfg);
    const auto analytic = loss_and_gradient(net, data).gradient;
    auto params = parameters(net);
    std::uniform_int_distribution<std::size_t> pick(0, params.size() - 1);
    double diff = 0, scale = 0;
    std::vector<double> wit;
    for (std::size_t q = 0; q < probes; ++q) {
      const std::size_t i = pick(rng);
      const double saved = *params[i];
      *params[i] = saved + step;
      const double lp = loss_and_gradient(net, data, false).loss;
      *params[i] = saved - step;
      const double lm = loss_and_gradient(net, data, false).loss;
      *params[i] = saved;
      const double fd = (lp - lm) / (2.0 * step);
      diff = std::max(diff, std::abs(analytic[i] - fd));
      scale = std::max(scale, std::abs(fd));
      wit.push_back(double(i));
      wit.push_back(analytic[i]);
      wit.push_back(fd);
    }
    detail::grad_trial(r, diff / std::max(scale, 1e-8), std::move(wit));
  }
  return r;
}

}  // namespace lresnet
