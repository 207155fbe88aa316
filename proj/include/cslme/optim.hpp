//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cslme/common.hpp"

namespace cslme {

/// Elementwise bounds; entries may be +-infinity.
struct BoxBounds {
  VectorXd lower;
  VectorXd upper;

  static BoxBounds unbounded(Index n);
  VectorXd project(const VectorXd& x) const;
};

struct OptimOptions {
  int max_iter = 500;
  /// Relative objective change: stop when |df| < tol_obj * (1 + |f|).
  double tol_obj = 1e-9;
  /// Projected-gradient infinity norm.
  double tol_grad = 1e-6;
  int memory = 10;
};

enum class StopReason {
  kGradientTolerance,
  kObjectiveTolerance,
  kMaxIterations,
  kLineSearchStalled,
};

std::string to_string(StopReason r);

struct OptimResult {
  VectorXd x;
  double f = 0.0;
  /// Objective after every accepted iterate, starting with f(x0).
  std::vector<double> trace;
  int iterations = 0;
  int evaluations = 0;
  double projected_gradient = 0.0;
  StopReason reason = StopReason::kMaxIterations;
  bool converged = false;
};

using Objective = std::function<double(const VectorXd&)>;

/// Central differences with h_i = max(1e-6, 1e-7 |x_i|). A coordinate whose
/// central stencil would leave the box uses the one-sided second-order
/// stencil pointing into the box. `f0` must equal f(x).
VectorXd numerical_gradient(const Objective& f, const VectorXd& x, double f0,
                            const BoxBounds& box);

/// Projected limited-memory BFGS for min f(x) subject to lower <= x <= upper.
/// Iterates are always feasible (projection, not penalty) and the trace is
/// nonincreasing.
OptimResult minimize_box(const Objective& f, const VectorXd& x0,
                         const BoxBounds& box, const OptimOptions& opts = {});

}  // namespace cslme
