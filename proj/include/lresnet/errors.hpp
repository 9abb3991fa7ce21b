#pragma once

#include <stdexcept>
#include <string>

namespace lresnet {

// Base of every error thrown by the library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct dimension_error : error {
  using error::error;
};

struct curvature_error : error {
  using error::error;
};

// A point whose K<x,x>_L is farther than the membership tolerance from 1.
struct membership_error : error {
  using error::error;
};

struct invalid_tangent_error : error {
  using error::error;
};

// Parallel transport between (numerically) antipodal-like points.
struct degenerate_pair_error : error {
  using error::error;
};

// Argument outside the domain of a formula (e.g. Poincare ball boundary).
struct domain_error : error {
  using error::error;
};

struct invalid_weights_error : error {
  using error::error;
};

// Requested working set does not fit into available memory.
struct capacity_error : error {
  using error::error;
};

// Non-finite loss or activation during training.
struct training_error : error {
  using error::error;
};

}  // namespace lresnet
