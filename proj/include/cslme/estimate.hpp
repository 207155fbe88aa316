//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cslme/metrics.hpp"
#include "cslme/model.hpp"
#include "cslme/optim.hpp"
#include "cslme/params.hpp"

namespace cslme {

struct FitConfig {
  Method method = Method::kPls;  // PLS or PRLS
  int n_starts = 5;
  int max_iter = 500;
  double tol_obj = 1e-9;
  double tol_grad = 1e-6;
  std::uint64_t seed = 0;
  /// Workers for the multi-start loop; 0 uses max_threads().
  int threads = 0;
  R2Mode r2_mode = R2Mode::kRaw;

  void validate() const;
};

struct StartReport {
  int index = 0;
  Parameters initial;
  double objective = 0.0;
  bool converged = false;
  bool failed = false;
  int iterations = 0;
  std::string stop_reason;
  std::string error;
};

struct FitResult {
  Parameters params;
  RandomEffects gamma;
  /// beta_alpha + gamma^l per group, and whether any coordinate is on a bound.
  MatrixXd overall;
  std::vector<bool> boundary;
  double objective = 0.0;
  std::vector<double> objective_trace;
  int start_index = 0;
  bool converged = false;
  double r2_marginal = 0.0;
  double r2_conditional = 0.0;
  int iterations = 0;
  double projected_gradient = 0.0;
  std::string stop_reason;
  std::vector<StartReport> starts;
};

/// -(n/2) ln 2 pi - (1/2) ln|V| - (1/2) r' V^-1 r with r = y - X beta.
double approx_loglik(const Parameters& params, const Design& design);

/// r' V^-1 r + ln|V|.
double pls_objective(const Parameters& params, const Design& design);

/// pls_objective + ln|X' V^-1 X|.
double prls_objective(const Parameters& params, const Design& design);

/// Dispatch on PLS/PRLS; ConfigError for other methods.
double objective_value(Method method, const Parameters& params,
                       const Design& design);

/// Box in packed coordinates (beta, varsigma, ln sigma): beta_j >= 0 for the
/// constrained columns, varsigma >= 0, ln sigma >= ln(1e-6 sd(y)).
BoxBounds fit_bounds(const Design& design);

/// Start 1 is the clamped OLS point, starts 2.. multiply every component of
/// it by exp(0.5 z), z standard normal from derive_seed(seed, start).
std::vector<Parameters> initial_points(const Design& design, int n_starts,
                                       std::uint64_t seed);

/// Multi-start box-constrained fit. Throws ConvergenceError (with per-start
/// messages) only when every start failed to produce a finite objective.
FitResult fit(const Design& design, const FitConfig& config);

struct PartialFit {
  Parameters params;
  double objective = 0.0;
  bool converged = false;
};

/// Minimizes the PLS/PRLS objective over the labelled parameters only, the
/// others held at `start`. Bounds follow fit_bounds.
PartialFit fit_partial(const Design& design, Method method,
                       const Parameters& start,
                       std::span<const std::string> free_labels,
                       const OptimOptions& opts = {});

}  // namespace cslme
