//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace cslme {

Index Dataset::n() const {
  Index total = 0;
  for (const auto& grp : groups) total += grp.y.size();
  return total;
}

void Dataset::validate() const {
  if (groups.empty()) throw DimensionError("dataset has no groups");
  const Index cols = p();
  if (cols < 1) throw DimensionError("dataset has no feature columns");
  for (const auto& grp : groups) {
    if (grp.y.size() < 1)
      throw DimensionError("group '" + grp.label + "' is empty");
    if (grp.X.rows() != grp.y.size())
      throw DimensionError("group '" + grp.label +
                           "': X rows differ from y length");
    if (grp.X.cols() != cols)
      throw DimensionError("group '" + grp.label +
                           "': inconsistent column count");
  }
  if (!feature_names.empty() &&
      static_cast<Index>(feature_names.size()) != cols)
    throw DimensionError("feature_names length differs from p");
}

void Dataset::validate_for_fit() const {
  validate();
  if (g() < 2) throw DimensionError("at least two groups are required");
}

std::string Dataset::feature_name(Index j) const {
  if (j < static_cast<Index>(feature_names.size()))
    return feature_names[static_cast<std::size_t>(j)];
  return "x" + std::to_string(j);
}

void ModelSpec::validate(Index p) const {
  Index prev = -1;
  for (const Index a : alpha) {
    if (a < 0 || a >= p)
      throw DimensionError("random-effect column index out of range");
    if (a <= prev)
      throw DimensionError("random-effect columns must be strictly increasing");
    prev = a;
  }
  if (!constrain_column.empty() &&
      static_cast<Index>(constrain_column.size()) != p)
    throw DimensionError("constrain_column must have one entry per column");
}

Assembled assemble(const Dataset& data, const ModelSpec& spec) {
  data.validate();
  spec.validate(data.p());
  const Index n = data.n();
  const Index p = data.p();
  const Index k = spec.k();
  const Index g = data.g();

  Assembled out;
  out.X.resize(n, p);
  out.Z = MatrixXd::Zero(n, k * g);
  out.y.resize(n);
  out.group_offsets.reserve(static_cast<std::size_t>(g + 1));

  Index row = 0;
  for (Index l = 0; l < g; ++l) {
    const auto& grp = data.groups[static_cast<std::size_t>(l)];
    const Index m = grp.y.size();
    out.group_offsets.push_back(row);
    out.X.middleRows(row, m) = grp.X;
    out.y.segment(row, m) = grp.y;
    for (Index i = 0; i < k; ++i)
      out.Z.block(row, l * k + i, m, 1) =
          grp.X.col(spec.alpha[static_cast<std::size_t>(i)]);
    row += m;
  }
  out.group_offsets.push_back(row);
  return out;
}

MatrixXd marginal_cov(const Parameters& params, const ModelSpec& spec,
                      const MatrixXd& Z, Index n) {
  if (Z.rows() != n) throw DimensionError("Z must have n rows");
  if (!(params.sigma > 0.0)) throw DomainError("sigma must be > 0");
  const Index k = spec.k();
  if (k == 0) return params.sigma * params.sigma * MatrixXd::Identity(n, n);
  if (Z.cols() % k != 0) throw DimensionError("Z columns must be a multiple of k");
  const VectorXd lambda = lambda_diag(params, spec.alpha, Z.cols() / k);
  MatrixXd V = Z * lambda.asDiagonal() * Z.transpose();
  // The triple product is symmetric only up to rounding; averaging with the
  // transpose makes it exactly so.
  V = (0.5 * (V + V.transpose())).eval();
  V.diagonal().array() += params.sigma * params.sigma;
  return V;
}

Design::Design(Dataset data, ModelSpec spec)
    : data_(std::move(data)), spec_(std::move(spec)) {
  data_.validate();
  spec_.validate(data_.p());
  n_ = data_.n();
  p_ = data_.p();

  MatrixXd X(n_, p_);
  VectorXd y(n_);
  std::vector<Index> offsets;
  for (Index row = 0; const auto& grp : data_.groups) {
    offsets.push_back(row);
    X.middleRows(row, grp.y.size()) = grp.X;
    y.segment(row, grp.y.size()) = grp.y;
    row += grp.y.size();
  }
  ols_beta_ = X.completeOrthogonalDecomposition().solve(y);
  const VectorXd resid = y - X * ols_beta_;
  const Index dof = n_ > p_ ? n_ - p_ : n_;
  ols_sigma_ = std::sqrt(resid.squaredNorm() / static_cast<double>(dof));

  double sum = 0.0;
  double sumsq = 0.0;
  stats_.reserve(data_.groups.size());
  for (Index l = 0; l < data_.g(); ++l) {
    const auto& grp = data_.groups[static_cast<std::size_t>(l)];
    const Index off = offsets[static_cast<std::size_t>(l)];
    MatrixXd A(grp.y.size(), p_ + 1);
    A.leftCols(p_) = grp.X;
    A.col(p_) = resid.segment(off, grp.y.size());
    const MatrixXd Z = group_z(l);
    GroupStats st;
    st.rows = grp.y.size();
    st.ZtZ = Z.transpose() * Z;
    st.ZtA = Z.transpose() * A;
    st.AtA = A.transpose() * A;
    stats_.push_back(std::move(st));
    sum += grp.y.sum();
    sumsq += grp.y.squaredNorm();
  }
  const double mean = sum / static_cast<double>(n_);
  response_sd_ =
      n_ > 1 ? std::sqrt(std::max(0.0, (sumsq - n_ * mean * mean) /
                                           static_cast<double>(n_ - 1)))
             : 0.0;
}

MatrixXd Design::group_z(Index l) const {
  const auto& X = data_.groups[static_cast<std::size_t>(l)].X;
  MatrixXd Z(X.rows(), spec_.k());
  for (Index i = 0; i < spec_.k(); ++i)
    Z.col(i) = X.col(spec_.alpha[static_cast<std::size_t>(i)]);
  return Z;
}

}  // namespace cslme
