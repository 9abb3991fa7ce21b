#pragma once

// Batched-addition runtime benchmark: median over repeats of the wall time of
// `iterations` full-batch additions per method.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "batch.hpp"
#include "errors.hpp"
#include "lorentz.hpp"
#include "residual.hpp"

namespace lresnet {

enum class BenchMethod { lresnet, pt, ts, sa };

inline const char* to_string(BenchMethod m) noexcept {
  switch (m) {
    case BenchMethod::lresnet: return "lresnet";
    case BenchMethod::pt: return "pt";
    case BenchMethod::ts: return "ts";
    default: return "sa";
  }
}

inline BenchMethod parse_bench_method(const std::string& s) {
  if (s == "lresnet") return BenchMethod::lresnet;
  if (s == "pt") return BenchMethod::pt;
  if (s == "ts") return BenchMethod::ts;
  if (s == "sa") return BenchMethod::sa;
  throw error("unknown bench method '" + s + "'");
}

struct BenchConfig {
  std::size_t dim = 2048;
  std::size_t batch = 10000;
  double curvature = -1.0;
  int precision = 32;
  std::size_t iterations = 100;
  std::size_t warmup = 2;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // 0 = auto
  double sigma = 1.0;
  std::vector<BenchMethod> methods{BenchMethod::lresnet, BenchMethod::pt, BenchMethod::ts, BenchMethod::sa};

  void validate() const {
    if (dim < 2) throw dimension_error("bench: dim must be >= 2");
    if (batch < 1) throw error("bench: batch must be >= 1");
    if (iterations < 1) throw error("bench: iterations must be >= 1");
    if (repeats < 5) throw error("bench: repeats must be >= 5");
    if (precision != 32 && precision != 64) throw error("bench: precision must be 32 or 64");
    if (!(sigma > 0.0)) throw error("bench: sigma must be positive");
    if (methods.empty()) throw error("bench: no methods selected");
    Curvature{curvature};
  }
};

struct MethodTiming {
  std::string method;
  std::vector<double> samples;  // seconds per `iterations` additions
  double median_seconds = 0;
  double per_addition_seconds = 0;
  double ratio_to_lresnet = 0;  // median / lresnet median; 0 when lresnet not run
  double max_membership_residual = 0;
};

struct BenchReport {
  BenchConfig config;
  unsigned threads_used = 1;
  bool comparable = true;  // false in auto-thread mode
  std::size_t bytes_required = 0;
  std::vector<MethodTiming> timings;
  std::string compiler;
  unsigned hardware_threads = 0;

  const MethodTiming* find(const std::string& m) const {
    for (const auto& t : timings) {
      if (t.method == m) return &t;
    }
    return nullptr;
  }
};

// x, y, out plus the two staged-baseline scratch batches.
inline std::size_t bench_bytes_required(const BenchConfig& c) {
  const std::size_t elem = c.precision == 32 ? sizeof(float) : sizeof(double);
  const std::size_t per_batch = c.batch * (c.dim + 1) * elem;
  const bool staged = std::any_of(c.methods.begin(), c.methods.end(),
                                  [](BenchMethod m) { return m == BenchMethod::pt || m == BenchMethod::ts; });
  return per_batch * (staged ? 5 : 3);
}

// MemAvailable from /proc/meminfo in bytes, if readable.
inline std::optional<std::size_t> available_memory_bytes() {
  std::ifstream f("/proc/meminfo");
  std::string key, unit;
  std::size_t value = 0;
  while (f >> key >> value >> unit) {
    if (key == "MemAvailable:") return value * 1024;
  }
  return std::nullopt;
}

inline std::string compiler_id() {
  std::ostringstream s;
#if defined(__clang__)
  s << "clang " << __clang_major__ << '.' << __clang_minor__;
#elif defined(__GNUC__)
  s << "gcc " << __GNUC__ << '.' << __GNUC_MINOR__;
#else
  s << "unknown";
#endif
  return s.str();
}

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <std::floating_point T>
void run_bench_typed(const BenchConfig& c, BenchReport& rep) {
  const Curvature k(c.curvature);
  std::mt19937_64 rng(c.seed);
  const auto x = sample_batch<T>(rng, k, c.dim, c.batch, c.sigma);
  const auto y = sample_batch<T>(rng, k, c.dim, c.batch, c.sigma);
  LorentzBatch<T> out(k, c.dim, c.batch);
  const bool staged = bench_bytes_required(c) > c.batch * (c.dim + 1) * sizeof(T) * 3;
  std::optional<StagedWorkspace<T>> ws;
  if (staged) ws.emplace(k, c.dim, c.batch);
  const unsigned th = rep.threads_used;
  const ResidualWeights w(1.0, 1.0);

  for (BenchMethod m : c.methods) {
    auto once = [&] {
      switch (m) {
        case BenchMethod::lresnet: lresnet_add_batch(x, y, w, out, th); break;
        case BenchMethod::pt: pt_add_batch(x, y, out, *ws, th); break;
        case BenchMethod::ts: ts_add_batch(x, y, 1.0, 1.0, out, *ws, th); break;
        case BenchMethod::sa: space_add_batch(x, y, out, th); break;
      }
    };
    auto sample = [&] {
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < c.iterations; ++i) once();
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    MethodTiming mt;
    mt.method = to_string(m);
    for (std::size_t i = 0; i < c.warmup; ++i) sample();
    for (std::size_t i = 0; i < c.repeats; ++i) mt.samples.push_back(sample());
    mt.median_seconds = median(mt.samples);
    mt.per_addition_seconds = mt.median_seconds / double(c.iterations);
    mt.max_membership_residual = double(out.max_membership_residual());
    rep.timings.push_back(std::move(mt));
  }
}

}  // namespace detail

// Throws capacity_error when the working set exceeds `available_bytes`
// (leaving 10% headroom) or an allocation fails.
inline BenchReport run_bench(const BenchConfig& c, std::optional<std::size_t> available_bytes) {
  c.validate();
  BenchReport rep;
  rep.config = c;
  rep.threads_used = c.threads == 0 ? auto_threads() : c.threads;
  rep.comparable = c.threads == 1;
  rep.bytes_required = bench_bytes_required(c);
  rep.compiler = compiler_id();
  rep.hardware_threads = std::thread::hardware_concurrency();
  if (available_bytes && double(rep.bytes_required) > 0.9 * double(*available_bytes)) {
    throw capacity_error("bench: dim " + std::to_string(c.dim) + " x batch " + std::to_string(c.batch) + " needs " +
                         std::to_string(rep.bytes_required >> 20) + " MiB, only " +
                         std::to_string(*available_bytes >> 20) + " MiB available");
  }
  try {
    if (c.precision == 32) {
      detail::run_bench_typed<float>(c, rep);
    } else {
      detail::run_bench_typed<double>(c, rep);
    }
  } catch (const std::bad_alloc&) {
    throw capacity_error("bench: allocation of " + std::to_string(rep.bytes_required >> 20) + " MiB failed");
  }
  if (const auto* l = rep.find("lresnet")) {
    for (auto& t : rep.timings) t.ratio_to_lresnet = t.median_seconds / l->median_seconds;
  }
  return rep;
}

}  // namespace lresnet
