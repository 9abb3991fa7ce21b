#pragma once

// Grid runners over curvature / dimension / spread for the property checks.
// Each cell gets its own seed derived from the base seed and cell index.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "verify.hpp"

namespace lresnet {

struct SuiteGrid {
  std::vector<double> curvatures{-0.5, -1.0, -2.0};
  std::vector<std::size_t> dims{2, 16, 128};
  std::vector<double> sigmas{0.5, 1.0, 5.0};
};

inline std::uint64_t cell_seed(std::uint64_t base, std::size_t cell) {
  return base * 0x9E3779B97F4A7C15ull + cell;
}

inline bool all_passed(const std::vector<PropertyResult>& rs) {
  for (const auto& r : rs) {
    if (!r.passed()) return false;
  }
  return true;
}

inline std::vector<PropertyResult> run_lemma1_grid(std::size_t trials_per_cell, const SuiteGrid& g, std::uint64_t seed) {
  std::vector<PropertyResult> out;
  std::size_t cell = 0;
  for (double k : g.curvatures) {
    for (std::size_t n : g.dims) {
      for (double s : g.sigmas) out.push_back(check_lemma1(trials_per_cell, n, Curvature(k), s, cell_seed(seed, cell++)));
    }
  }
  return out;
}

inline std::vector<PropertyResult> run_noncommutativity_grid(std::size_t trials_per_cell, const SuiteGrid& g,
                                                             std::uint64_t seed) {
  std::vector<PropertyResult> out;
  std::size_t cell = 0;
  for (double k : g.curvatures) {
    for (std::size_t n : g.dims) {
      out.push_back(check_noncommutativity(trials_per_cell, n, Curvature(k), cell_seed(seed, cell++)));
    }
  }
  return out;
}

inline std::vector<PropertyResult> run_proposition1_grid(const std::vector<BaselineMethod>& methods,
                                                         std::size_t trials_per_cell, const SuiteGrid& g,
                                                         std::uint64_t seed) {
  std::vector<PropertyResult> out;
  std::size_t cell = 0;
  for (BaselineMethod m : methods) {
    for (double k : g.curvatures) {
      for (std::size_t n : g.dims) {
        out.push_back(check_proposition1(m, trials_per_cell, n, Curvature(k), cell_seed(seed, cell++)));
      }
    }
  }
  return out;
}

inline double validity_tolerance(int precision) { return precision == 32 ? 1e-3 : 1e-6; }

// Per-component spread 1/sqrt(n) (unit-radius inputs) unless `sigma` is given.
inline std::vector<PropertyResult> run_validity_grid(int precision, std::size_t trials_per_cell, const SuiteGrid& g,
                                                     std::uint64_t seed, std::optional<double> sigma = std::nullopt) {
  if (precision != 32 && precision != 64) throw error("validity: precision must be 32 or 64");
  std::vector<PropertyResult> out;
  std::size_t cell = 0;
  const double tol = validity_tolerance(precision);
  for (AdditionMethod m : {AdditionMethod::lresnet, AdditionMethod::pt, AdditionMethod::ts, AdditionMethod::sa,
                           AdditionMethod::scale}) {
    for (double k : g.curvatures) {
      for (std::size_t n : g.dims) {
        const auto s = cell_seed(seed, cell++);
        const double sg = sigma ? *sigma : 1.0 / std::sqrt(double(n));
        out.push_back(precision == 32 ? check_validity<float>(m, trials_per_cell, n, Curvature(k), sg, s, tol)
                                      : check_validity<double>(m, trials_per_cell, n, Curvature(k), sg, s, tol));
      }
    }
  }
  return out;
}

inline std::vector<PropertyResult> run_gradient_suite(std::size_t trials, std::uint64_t seed) {
  return {check_lresnet_jacobians(trials, cell_seed(seed, 0)), check_hl_jacobian(trials, cell_seed(seed, 1)),
          check_end_to_end_gradient(trials, cell_seed(seed, 2))};
}

}  // namespace lresnet
