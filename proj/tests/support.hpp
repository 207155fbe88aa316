//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Independent oracles shared by the test binaries. Nothing here calls into
// the library's numerical kernels except where a test explicitly compares.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "cslme/model.hpp"

namespace testing {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using cslme::Index;

/// Adaptive Gauss-Kronrod integral on a finite interval.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13,
                                                                       &err);
}

/// Kolmogorov-Smirnov distance of a sample against a continuous CDF.
inline double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic Kolmogorov p-value with Stephens' small-sample correction.
inline double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// Two-sample KS p-value.
inline double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const auto ne = static_cast<std::size_t>(na * nb / (na + nb));
  return ks_pvalue(d, ne);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Random grouped dataset with an intercept column and N(0,1) features.
inline cslme::Dataset random_dataset(std::mt19937_64& rng, Index g, Index rows_lo,
                                     Index rows_hi, Index p) {
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<Index> rows(rows_lo, rows_hi);
  cslme::Dataset data;
  for (Index l = 0; l < g; ++l) {
    cslme::GroupData grp;
    grp.label = "g" + std::to_string(l);
    const Index m = rows(rng);
    grp.X.resize(m, p);
    grp.y.resize(m);
    for (Index r = 0; r < m; ++r) {
      grp.X(r, 0) = 1.0;
      for (Index j = 1; j < p; ++j) grp.X(r, j) = nd(rng);
      grp.y[r] = 1.0 + nd(rng) + 0.5 * static_cast<double>(l % 3);
      for (Index j = 1; j < p; ++j) grp.y[r] += 0.5 * grp.X(r, j);
    }
    data.groups.push_back(std::move(grp));
  }
  return data;
}

/// Dense V from explicit per-row Z and diagonal G, no Woodbury.
inline MatrixXd dense_v(const cslme::Assembled& a, const VectorXd& delta, double s2) {
  const Index g = static_cast<Index>(a.group_offsets.size()) - 1;
  const VectorXd lam = delta.replicate(g, 1);
  MatrixXd V = a.Z * lam.asDiagonal() * a.Z.transpose();
  V.diagonal().array() += s2;
  return V;
}

/// ln|M| from eigenvalues of a symmetric PD matrix.
inline double logdet_eigen(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  return es.eigenvalues().array().log().sum();
}

/// Exact minimizer of 1/2 g'Hg - c'g over the box [-b, b] by enumerating
/// all 3^k free/lower/upper patterns. Only for small k.
inline VectorXd box_qp_enumerate(const MatrixXd& H, const VectorXd& c, const VectorXd& b) {
  const Index k = c.size();
  Index patterns = 1;
  for (Index i = 0; i < k; ++i) patterns *= 3;
  VectorXd best = VectorXd::Zero(k);
  double best_f = 0.0;
  for (Index code = 0; code < patterns; ++code) {
    VectorXd g = VectorXd::Zero(k);
    std::vector<Index> free_idx;
    Index rest = code;
    for (Index i = 0; i < k; ++i) {
      const Index s = rest % 3;
      rest /= 3;
      if (s == 0) free_idx.push_back(i);
      else g[i] = s == 1 ? -b[i] : b[i];
    }
    const auto m = static_cast<Index>(free_idx.size());
    if (m > 0) {
      MatrixXd Hf(m, m);
      VectorXd rhs(m);
      for (Index a = 0; a < m; ++a) {
        rhs[a] = c[free_idx[static_cast<std::size_t>(a)]];
        for (Index i = 0; i < k; ++i)
          if (std::find(free_idx.begin(), free_idx.end(), i) == free_idx.end())
            rhs[a] -= H(free_idx[static_cast<std::size_t>(a)], i) * g[i];
        for (Index e = 0; e < m; ++e)
          Hf(a, e) = H(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(e)]);
      }
      const VectorXd sol = Hf.ldlt().solve(rhs);
      bool inside = true;
      for (Index a = 0; a < m; ++a) {
        const Index i = free_idx[static_cast<std::size_t>(a)];
        if (std::abs(sol[a]) > b[i]) inside = false;
        g[i] = sol[a];
      }
      if (!inside) continue;
    }
    const double f = 0.5 * g.dot(H * g) - c.dot(g);
    if (f < best_f) {
      best_f = f;
      best = g;
    }
  }
  return best;
}

}  // namespace testing
