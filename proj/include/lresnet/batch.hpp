#pragma once

// Row-batched residual additions over LorentzBatch.
//
// lresnet_add_batch is a single fused pass per row. The baselines are
// evaluated as a composition of whole-batch maps (log, transport, exp), each
// stage writing its full intermediate batch before the next stage starts,
// which is how those methods are realised as chains of manifold maps.
// threads == 1 is strictly single-threaded.

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

#include "lorentz.hpp"
#include "residual.hpp"

namespace lresnet {

namespace detail {

template <class Fn>
void for_row_ranges(std::size_t rows, unsigned threads, Fn&& fn) {
  if (threads <= 1 || rows < 2) {
    fn(std::size_t{0}, rows);
    return;
  }
  const std::size_t t = std::min<std::size_t>(threads, rows);
  const std::size_t chunk = (rows + t - 1) / t;
  std::vector<std::jthread> pool;
  pool.reserve(t);
  for (std::size_t b = 0; b < rows; b += chunk) {
    pool.emplace_back([&fn, b, e = std::min(rows, b + chunk)] { fn(b, e); });
  }
}

template <class T>
void require_same_shape(const LorentzBatch<T>& a, const LorentzBatch<T>& b, const char* what) {
  if (a.dim() != b.dim() || a.rows() != b.rows()) throw dimension_error(std::string(what) + ": batch shape mismatch");
  if (!(a.curvature() == b.curvature())) throw curvature_error(std::string(what) + ": curvature mismatch");
}

}  // namespace detail

// Number of worker threads for "auto" mode.
inline unsigned auto_threads() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

// Scratch batches for the staged baselines; allocate once, reuse.
template <std::floating_point T>
struct StagedWorkspace {
  StagedWorkspace(Curvature k, std::size_t n, std::size_t m) : a(k, n, m), b(k, n, m) {}
  LorentzBatch<T> a;
  LorentzBatch<T> b;
};

template <std::floating_point T>
void lresnet_add_batch(const LorentzBatch<T>& x, const LorentzBatch<T>& y, const ResidualWeights& w,
                       LorentzBatch<T>& out, unsigned threads = 1) {
  detail::require_same_shape(x, y, "lresnet_add_batch");
  detail::require_same_shape(x, out, "lresnet_add_batch");
  const std::size_t n1 = x.stride();
  const T wx = T(w.w_x()), wy = T(w.w_y_abs()), s = T(x.curvature().sqrt_neg());
  detail::for_row_ranges(x.rows(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) detail::lresnet_raw(x.row_ptr(r), y.row_ptr(r), out.row_ptr(r), n1, wx, wy, s);
  });
}

template <std::floating_point T>
void space_add_batch(const LorentzBatch<T>& x, const LorentzBatch<T>& y, LorentzBatch<T>& out, unsigned threads = 1) {
  detail::require_same_shape(x, y, "space_add_batch");
  detail::require_same_shape(x, out, "space_add_batch");
  const std::size_t n1 = x.stride();
  const T k = T(x.curvature().value());
  detail::for_row_ranges(x.rows(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) detail::space_add_raw(x.row_ptr(r), y.row_ptr(r), out.row_ptr(r), n1, k);
  });
}

// Stages: U = log_o(Y); V = P_{o->X}(U); Z = exp_X(V).
template <std::floating_point T>
void pt_add_batch(const LorentzBatch<T>& x, const LorentzBatch<T>& y, LorentzBatch<T>& out, StagedWorkspace<T>& ws,
                  unsigned threads = 1, Tolerances<T> tol = Tolerances<T>::defaults()) {
  detail::require_same_shape(x, y, "pt_add_batch");
  detail::require_same_shape(x, out, "pt_add_batch");
  detail::require_same_shape(x, ws.a, "pt_add_batch");
  const std::size_t n1 = x.stride();
  const T k = T(x.curvature().value());
  const auto o = origin<T>(x.curvature(), x.dim());
  auto& u = ws.a;
  auto& v = ws.b;
  detail::for_row_ranges(x.rows(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) detail::log_map_raw(o.begin(), y.row_ptr(r), u.row_ptr(r), n1, k, tol.taylor_switch);
  });
  detail::for_row_ranges(x.rows(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) detail::transport_raw(o.begin(), x.row_ptr(r), u.row_ptr(r), v.row_ptr(r), n1, k);
  });
  detail::for_row_ranges(x.rows(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) detail::exp_map_raw(x.row_ptr(r), v.row_ptr(r), out.row_ptr(r), n1, k, tol.taylor_switch);
  });
}

// Stages: A = log_o(X); B = log_o(Y); A = w_x A + w_y B; Z = exp_o(A).
template <std::floating_point T>
void ts_add_batch(const LorentzBatch<T>& x, const LorentzBatch<T>& y, double w_x, double w_y, LorentzBatch<T>& out,
                  StagedWorkspace<T>& ws, unsigned threads = 1, Tolerances<T> tol = Tolerances<T>::defaults()) {
  detail::require_same_shape(x, y, "ts_add_batch");
  detail::require_same_shape(x, out, "ts_add_batch");
  detail::require_same_shape(x, ws.a, "ts_add_batch");
  if (!(w_x > 0.0) || !(w_y > 0.0)) throw invalid_weights_error("ts_add_batch: weights must be strictly positive");
  const std::size_t n1 = x.stride();
  const T k = T(x.curvature().value());
  const T wx = T(w_x), wy = T(w_y);
  const auto o = origin<T>(x.curvature(), x.dim());
  auto& a = ws.a;
  auto& b = ws.b;
  detail::for_row_ranges(x.rows(), threads, [&](std::size_t s, std::size_t e) {
    for (std::size_t r = s; r < e; ++r) detail::log_map_raw(o.begin(), x.row_ptr(r), a.row_ptr(r), n1, k, tol.taylor_switch);
  });
  detail::for_row_ranges(x.rows(), threads, [&](std::size_t s, std::size_t e) {
    for (std::size_t r = s; r < e; ++r) detail::log_map_raw(o.begin(), y.row_ptr(r), b.row_ptr(r), n1, k, tol.taylor_switch);
  });
  detail::for_row_ranges(x.rows(), threads, [&](std::size_t s, std::size_t e) {
    for (std::size_t r = s; r < e; ++r) {
      T* pa = a.row_ptr(r);
      const T* pb = b.row_ptr(r);
      for (std::size_t i = 0; i < n1; ++i) pa[i] = wx * pa[i] + wy * pb[i];
    }
  });
  detail::for_row_ranges(x.rows(), threads, [&](std::size_t s, std::size_t e) {
    for (std::size_t r = s; r < e; ++r) detail::exp_map_raw(o.begin(), a.row_ptr(r), out.row_ptr(r), n1, k, tol.taylor_switch);
  });
}

}  // namespace lresnet
