//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cslme/common.hpp"
#include "cslme/sdtn.hpp"

namespace cslme {

/// One cluster: response y (n_l) and design X (n_l x p).
struct GroupData {
  std::string label;
  VectorXd y;
  MatrixXd X;
};

/// Grouped long-format data. Groups keep first-appearance order and rows keep
/// file order within a group.
struct Dataset {
  std::vector<GroupData> groups;
  /// Optional column names, size p when present.
  std::vector<std::string> feature_names;

  Index g() const { return static_cast<Index>(groups.size()); }
  Index p() const { return groups.empty() ? 0 : groups.front().X.cols(); }
  Index n() const;

  /// Throws DimensionError on inconsistent shapes or empty groups.
  void validate() const;
  /// validate() plus the model requirement of at least two groups.
  void validate_for_fit() const;

  /// Name of column j, falling back to "x<j>".
  std::string feature_name(Index j) const;
};

/// Which columns carry random effects and whether the fit is sign
/// constrained.
struct ModelSpec {
  /// 0-based, strictly increasing column indices (the set alpha).
  std::vector<Index> alpha;
  bool intercept = true;
  bool constrained = true;
  /// Optional per-column override of the beta >= 0 constraint (size p).
  std::vector<bool> constrain_column;

  Index k() const { return static_cast<Index>(alpha.size()); }
  void validate(Index p) const;
  bool column_constrained(Index j) const {
    if (!constrained) return false;
    if (constrain_column.empty()) return true;
    return constrain_column[static_cast<std::size_t>(j)];
  }
};

/// Estimation target: fixed effects beta (p), SDTN scales varsigma (k) and
/// residual scale sigma.
template <class Scalar>
struct ParametersT {
  VectorX<Scalar> beta;
  VectorX<Scalar> varsigma;
  Scalar sigma{1};
};

using Parameters = ParametersT<double>;

/// Row l holds gamma^l.
struct RandomEffects {
  MatrixXd gamma;
};

/// Truncation ratio |beta_i| / |varsigma_i| of random-effect column i.
template <class Scalar>
Scalar truncation_ratio(const Scalar& beta, const Scalar& varsigma) {
  using std::abs;
  return abs(beta) / abs(varsigma);
}

/// Variance of an SDTN random effect with scale `varsigma` bounded by
/// +-|beta|: varsigma^2 * variance_factor(rho). Zero when either is zero.
template <class Scalar>
Scalar random_effect_variance(const Scalar& beta, const Scalar& varsigma) {
  if (varsigma == Scalar(0) || beta == Scalar(0)) return Scalar(0);
  return varsigma * varsigma *
         variance_factor(truncation_ratio(beta, varsigma));
}

/// The k diagonal entries of Delta.
template <class Scalar>
VectorX<Scalar> delta_diag(const ParametersT<Scalar>& params,
                           std::span<const Index> alpha) {
  const auto k = static_cast<Index>(alpha.size());
  if (params.varsigma.size() != k)
    throw DimensionError("varsigma length must equal |alpha|");
  VectorX<Scalar> d(k);
  for (Index i = 0; i < k; ++i)
    d[i] = random_effect_variance(params.beta[alpha[static_cast<std::size_t>(i)]],
                                  params.varsigma[i]);
  return d;
}

/// Diagonal of Lambda = blockdiag(Delta, ..., Delta), length k*g.
template <class Scalar>
VectorX<Scalar> lambda_diag(const ParametersT<Scalar>& params,
                            std::span<const Index> alpha, Index g) {
  const VectorX<Scalar> d = delta_diag(params, alpha);
  return d.replicate(g, 1);
}

/// Stacked matrices of the concise model form y = X b + Z gamma + e.
struct Assembled {
  MatrixXd X;
  /// Block diagonal, block l = X^l restricted to the columns alpha.
  MatrixXd Z;
  VectorXd y;
  /// g + 1 row offsets; group l occupies [offsets[l], offsets[l+1]).
  std::vector<Index> group_offsets;
};

Assembled assemble(const Dataset& data, const ModelSpec& spec);

/// Dense V = Z Lambda Z' + sigma^2 I (n x n). Intended for small problems
/// and for checking the block-wise route.
MatrixXd marginal_cov(const Parameters& params, const ModelSpec& spec,
                      const MatrixXd& Z, Index n);

/// Per-group sufficient statistics with A = [X^l | e^l], where e is the
/// residual of the stacked OLS fit (keeps quadratic forms well conditioned).
struct GroupStats {
  Index rows = 0;
  MatrixXd ZtZ;  // k x k
  MatrixXd ZtA;  // k x (p+1)
  MatrixXd AtA;  // (p+1) x (p+1)
};

/// Dataset + ModelSpec prepared for repeated likelihood evaluation.
class Design {
 public:
  Design(Dataset data, ModelSpec spec);

  const Dataset& data() const { return data_; }
  const ModelSpec& spec() const { return spec_; }
  std::span<const Index> alpha() const { return spec_.alpha; }
  std::span<const GroupStats> stats() const { return stats_; }

  Index n() const { return n_; }
  Index p() const { return p_; }
  Index k() const { return spec_.k(); }
  Index g() const { return data_.g(); }

  /// Z^l = X^l restricted to the random-effect columns.
  MatrixXd group_z(Index l) const;
  /// Sample standard deviation of the stacked response.
  double response_sd() const { return response_sd_; }
  /// Stacked OLS coefficients (minimum norm if X is rank deficient).
  const VectorXd& ols_beta() const { return ols_beta_; }
  /// OLS residual standard deviation, RSS / (n - p) (RSS / n if n <= p).
  double ols_sigma() const { return ols_sigma_; }

 private:
  Dataset data_;
  ModelSpec spec_;
  std::vector<GroupStats> stats_;
  Index n_ = 0;
  Index p_ = 0;
  double response_sd_ = 0.0;
  VectorXd ols_beta_;
  double ols_sigma_ = 0.0;
};

/// V^l = Z^l diag(lambda) Z^l' + s2 I reduced through the Woodbury identity.
template <class Scalar>
struct BlockSolve {
  Scalar logdet;             // ln |V^l|
  MatrixX<Scalar> AtViA;     // [X e]' V^-1 [X e]
  MatrixX<Scalar> ZtViA;     // Z' V^-1 [X e], only when requested
};

template <class Scalar>
BlockSolve<Scalar> solve_block(const GroupStats& st,
                               const VectorX<Scalar>& lambda,
                               const Scalar& s2, bool with_ztvia = false) {
  using std::log;
  using std::sqrt;
  const Index k = lambda.size();
  const MatrixX<Scalar> ZtA = st.ZtA.template cast<Scalar>();
  const MatrixX<Scalar> ZtZ = st.ZtZ.template cast<Scalar>();
  BlockSolve<Scalar> out;
  if (k == 0) {
    out.logdet = Scalar(st.rows) * log(s2);
    out.AtViA = st.AtA.template cast<Scalar>() / s2;
    if (with_ztvia) out.ZtViA = MatrixX<Scalar>(0, st.AtA.cols());
    return out;
  }
  VectorX<Scalar> d(k);
  for (Index i = 0; i < k; ++i) d[i] = sqrt(lambda[i]);
  const MatrixX<Scalar> DZtA = d.asDiagonal() * ZtA;
  MatrixX<Scalar> M = d.asDiagonal() * ZtZ * d.asDiagonal();
  M.diagonal().array() += s2;
  const Eigen::LLT<MatrixX<Scalar>> llt(M);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError("Woodbury core matrix is not PD");
  Scalar logdet_m(0);
  for (Index i = 0; i < k; ++i) logdet_m += log(llt.matrixL()(i, i));
  out.logdet = Scalar(st.rows - k) * log(s2) + Scalar(2) * logdet_m;
  const MatrixX<Scalar> MinvDZtA = llt.solve(DZtA);
  out.AtViA =
      (st.AtA.template cast<Scalar>() - DZtA.transpose() * MinvDZtA) / s2;
  if (with_ztvia)
    out.ZtViA = (ZtA - ZtZ * d.asDiagonal() * MinvDZtA) / s2;
  return out;
}

}  // namespace cslme
