//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace cslme {

Eigen::LLT<MatrixXd> cholesky_jittered(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("Cholesky needs a square matrix");
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const double n = static_cast<double>(m.rows());
  const double jitter = 1e-10 * std::abs(m.trace()) / n;
  MatrixXd shifted = m;
  shifted.diagonal().array() += jitter;
  llt.compute(shifted);
  if (llt.info() != Eigen::Success || !(jitter > 0.0))
    throw NotPositiveDefiniteError("matrix is not positive definite");
  return llt;
}

double logdet_pd(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  const auto llt = cholesky_jittered(m);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double logdet_psd(std::span<const MatrixXd> blocks) {
  double total = 0.0;
  for (const auto& b : blocks) total += logdet_pd(b);
  return total;
}

GlsSummary gls_summary(const Design& design, const VectorXd& delta, double s2) {
  if (!(s2 > 0.0)) throw DomainError("residual variance must be > 0");
  if (delta.size() != design.k())
    throw DimensionError("delta must have one entry per random effect");
  const Index p = design.p();
  MatrixXd AtViA = MatrixXd::Zero(p + 1, p + 1);
  GlsSummary out;
  for (const auto& st : design.stats()) {
    const auto blk = solve_block<double>(st, delta, s2);
    out.logdet_v += blk.logdet;
    AtViA += blk.AtViA;
  }
  out.XtViX = AtViA.topLeftCorner(p, p);
  out.XtVie = AtViA.topRightCorner(p, 1);
  out.etVie = AtViA(p, p);
  out.ols_beta = design.ols_beta();
  return out;
}

double gls_quad_form(const GlsSummary& s, const VectorXd& beta) {
  const VectorXd d = beta - s.ols_beta;
  const double q = s.etVie - 2.0 * d.dot(s.XtVie) + d.dot(s.XtViX * d);
  return std::max(q, 0.0);  // NaN propagates
}

VectorXd gls_beta(const GlsSummary& s) {
  const Eigen::LDLT<MatrixXd> ldlt(s.XtViX);
  const double scale = s.XtViX.diagonal().cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-13 * scale)
    throw SingularError("X' V^-1 X is singular");
  return s.ols_beta + ldlt.solve(s.XtVie);
}

}  // namespace cslme
