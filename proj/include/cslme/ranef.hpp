//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <vector>

#include "cslme/model.hpp"

namespace cslme {

/// One group's posterior-mode problem
///   min (1/sigma^2) |y - Z g|^2 + g' diag(sigma_diag)^-1 g
///   s.t. -bounds <= g <= bounds.
/// Coordinates with sigma_diag == 0 (or a zero bound) are pinned at 0.
struct GroupQp {
  MatrixXd Z;           // n_l x k
  VectorXd y;           // working response y - X beta_hat
  double sigma = 1.0;
  VectorXd sigma_diag;  // varsigma_hat_i^2
  VectorXd bounds;      // |beta_hat| on the random-effect columns

  void validate() const;
};

struct QpSolution {
  VectorXd gamma;
  /// Per coordinate: sits on -bound or +bound (pinned zeros included).
  std::vector<bool> at_bound;
  /// Infinity norm of the projected gradient of the (halved) objective.
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Primal active-set method; exact for a strictly convex box QP and finite
/// in at most a few k iterations. The result is clamped into the box.
QpSolution solve_group_detail(const GroupQp& qp);

inline VectorXd solve_group(const GroupQp& qp) {
  return solve_group_detail(qp).gamma;
}

/// Objective of `qp` at gamma (pinned coordinates contribute nothing).
double group_objective(const GroupQp& qp, const VectorXd& gamma);

/// The QP of group l at fitted parameters.
GroupQp make_group_qp(const Design& design, const Parameters& params, Index l);

struct RanefResult {
  RandomEffects effects;
  /// beta_hat restricted to alpha plus gamma, row per group.
  MatrixXd overall;
  /// Group has at least one coordinate on a bound.
  std::vector<bool> boundary;
  double max_kkt_residual = 0.0;
};

RanefResult solve_all(const Design& design, const Parameters& params,
                      int threads = 1);

}  // namespace cslme
