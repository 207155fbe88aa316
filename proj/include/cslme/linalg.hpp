//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <span>

#include "cslme/common.hpp"
#include "cslme/model.hpp"

namespace cslme {

/// Cholesky of a symmetric PD matrix. On failure the diagonal is inflated
/// once by 1e-10 * trace / n; a second failure throws
/// NotPositiveDefiniteError.
Eigen::LLT<MatrixXd> cholesky_jittered(const MatrixXd& m);

/// ln |B| of a PD matrix through its (jittered) Cholesky factor.
double logdet_pd(const MatrixXd& m);

/// Sum of ln |B| over symmetric PD blocks, 2 sum ln diag(L) per block.
double logdet_psd(std::span<const MatrixXd> blocks);

/// Generalized least-squares quantities summed over the group blocks of
/// V = Z Lambda Z' + s2 I.
/// Quadratic terms are stored relative to the OLS solution b0:
/// e = y - X b0, so (y - X b) = e - X (b - b0).
struct GlsSummary {
  double logdet_v = 0.0;
  MatrixXd XtViX;
  VectorXd XtVie;
  double etVie = 0.0;
  VectorXd ols_beta;
};

/// `delta` holds the k random-effect variances (the diagonal of Delta, or
/// of G for the classical model).
GlsSummary gls_summary(const Design& design, const VectorXd& delta, double s2);

/// (y - X b)' V^-1 (y - X b) from a summary.
double gls_quad_form(const GlsSummary& s, const VectorXd& beta);

/// (X' V^-1 X)^-1 X' V^-1 y; SingularError if X' V^-1 X is rank deficient.
VectorXd gls_beta(const GlsSummary& s);

}  // namespace cslme
