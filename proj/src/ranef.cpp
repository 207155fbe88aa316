//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/ranef.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cslme/parallel.hpp"

namespace cslme {

void GroupQp::validate() const {
  const Index k = Z.cols();
  if (Z.rows() != y.size()) throw DimensionError("QP: Z rows differ from y length");
  if (sigma_diag.size() != k || bounds.size() != k)
    throw DimensionError("QP: one variance and one bound per column");
  if (!(sigma > 0.0)) throw DomainError("QP: sigma must be > 0");
  if ((sigma_diag.array() < 0.0).any() || (bounds.array() < 0.0).any())
    throw DomainError("QP: variances and bounds must be nonnegative");
}

namespace {

enum class Bound : signed char { kLower = -1, kFree = 0, kUpper = 1 };

}  // namespace

QpSolution solve_group_detail(const GroupQp& qp) {
  qp.validate();
  const Index k = qp.Z.cols();
  const double s2 = qp.sigma * qp.sigma;

  // Halved objective: 1/2 g'Hg - c'g.
  MatrixXd H = qp.Z.transpose() * qp.Z / s2;
  const VectorXd c = qp.Z.transpose() * qp.y / s2;

  std::vector<bool> pinned(static_cast<std::size_t>(k));
  std::vector<Index> vars;
  for (Index i = 0; i < k; ++i) {
    pinned[static_cast<std::size_t>(i)] =
        qp.sigma_diag[i] == 0.0 || qp.bounds[i] == 0.0;
    if (pinned[static_cast<std::size_t>(i)]) continue;
    H(i, i) += 1.0 / qp.sigma_diag[i];
    vars.push_back(i);
  }

  QpSolution sol;
  sol.gamma = VectorXd::Zero(k);
  std::vector<Bound> state(static_cast<std::size_t>(k), Bound::kFree);
  auto st = [&](Index i) -> Bound& { return state[static_cast<std::size_t>(i)]; };
  auto bound_value = [&](Index i) {
    return static_cast<double>(static_cast<signed char>(st(i))) * qp.bounds[i];
  };

  const double mult_tol = 1e-13 * (1.0 + c.cwiseAbs().maxCoeff());
  const int max_iter = 10 * static_cast<int>((vars.size() + 1) * (vars.size() + 1));
  VectorXd& g = sol.gamma;

  for (; sol.iterations < max_iter; ++sol.iterations) {
    std::vector<Index> free;
    for (const Index i : vars)
      if (st(i) == Bound::kFree) free.push_back(i);

    // Minimizer over the free coordinates with the working set fixed.
    VectorXd target = g;
    if (!free.empty()) {
      const auto m = static_cast<Index>(free.size());
      MatrixXd Hff(m, m);
      VectorXd rhs(m);
      for (Index a = 0; a < m; ++a) {
        rhs[a] = c[free[a]];
        for (const Index j : vars)
          if (st(j) != Bound::kFree) rhs[a] -= H(free[a], j) * bound_value(j);
        for (Index b = 0; b < m; ++b) Hff(a, b) = H(free[a], free[b]);
      }
      const VectorXd sub = Hff.llt().solve(rhs);
      for (Index a = 0; a < m; ++a) target[free[a]] = sub[a];
    }

    // Longest feasible step towards the target.
    double t = 1.0;
    Index blocking = -1;
    Bound hit = Bound::kFree;
    for (const Index i : free) {
      const double d = target[i] - g[i];
      if (d > 0.0 && target[i] > qp.bounds[i]) {
        const double ti = (qp.bounds[i] - g[i]) / d;
        if (ti < t) { t = ti; blocking = i; hit = Bound::kUpper; }
      } else if (d < 0.0 && target[i] < -qp.bounds[i]) {
        const double ti = (-qp.bounds[i] - g[i]) / d;
        if (ti < t) { t = ti; blocking = i; hit = Bound::kLower; }
      }
    }
    if (blocking >= 0) {
      for (const Index i : free) g[i] += t * (target[i] - g[i]);
      st(blocking) = hit;
      g[blocking] = bound_value(blocking);
      continue;
    }
    for (const Index i : free) g[i] = target[i];

    // Release the working-set coordinate with the most negative multiplier.
    const VectorXd grad = H * g - c;
    Index release = -1;
    double worst = -mult_tol;
    for (const Index i : vars) {
      if (st(i) == Bound::kFree) continue;
      const double lambda = st(i) == Bound::kLower ? grad[i] : -grad[i];
      if (lambda < worst) { worst = lambda; release = i; }
    }
    if (release < 0) break;
    st(release) = Bound::kFree;
  }

  // Rounding can never leave the box.
  g = g.cwiseMax(-qp.bounds).cwiseMin(qp.bounds);
  for (Index i = 0; i < k; ++i)
    if (pinned[static_cast<std::size_t>(i)]) g[i] = 0.0;

  const VectorXd grad = H * g - c;
  sol.at_bound.assign(static_cast<std::size_t>(k), false);
  for (Index i = 0; i < k; ++i) {
    const bool lo = g[i] <= -qp.bounds[i];
    const bool hi = g[i] >= qp.bounds[i];
    sol.at_bound[static_cast<std::size_t>(i)] = lo || hi;
    if (pinned[static_cast<std::size_t>(i)]) continue;
    double r = std::abs(grad[i]);
    if (lo) r = std::max(0.0, -grad[i]);
    if (hi) r = std::max(0.0, grad[i]);
    if (lo && hi) r = 0.0;
    sol.kkt_residual = std::max(sol.kkt_residual, r);
  }
  return sol;
}

double group_objective(const GroupQp& qp, const VectorXd& gamma) {
  const double s2 = qp.sigma * qp.sigma;
  double pen = 0.0;
  for (Index i = 0; i < gamma.size(); ++i)
    if (qp.sigma_diag[i] > 0.0) pen += gamma[i] * gamma[i] / qp.sigma_diag[i];
  return (qp.y - qp.Z * gamma).squaredNorm() / s2 + pen;
}

GroupQp make_group_qp(const Design& design, const Parameters& params, Index l) {
  const auto& grp = design.data().groups[static_cast<std::size_t>(l)];
  const auto alpha = design.alpha();
  GroupQp qp;
  qp.Z = design.group_z(l);
  qp.y = grp.y - grp.X * params.beta;
  qp.sigma = params.sigma;
  qp.sigma_diag = params.varsigma.array().square();
  qp.bounds.resize(design.k());
  for (Index i = 0; i < design.k(); ++i)
    qp.bounds[i] = std::abs(params.beta[alpha[static_cast<std::size_t>(i)]]);
  return qp;
}

RanefResult solve_all(const Design& design, const Parameters& params,
                      int threads) {
  const Index g = design.g();
  const Index k = design.k();
  if (params.beta.size() != design.p() || params.varsigma.size() != k)
    throw DimensionError("parameters do not match the design");
  RanefResult out;
  out.effects.gamma.resize(g, k);
  out.overall.resize(g, k);
  out.boundary.assign(static_cast<std::size_t>(g), false);
  std::vector<QpSolution> sols(static_cast<std::size_t>(g));
  parallel_for(static_cast<std::size_t>(g), threads, [&](std::size_t l) {
    sols[l] = solve_group_detail(make_group_qp(design, params, static_cast<Index>(l)));
  });
  const auto alpha = design.alpha();
  for (Index l = 0; l < g; ++l) {
    const auto& s = sols[static_cast<std::size_t>(l)];
    out.effects.gamma.row(l) = s.gamma.transpose();
    for (Index i = 0; i < k; ++i)
      out.overall(l, i) = params.beta[alpha[static_cast<std::size_t>(i)]] + s.gamma[i];
    out.boundary[static_cast<std::size_t>(l)] =
        std::any_of(s.at_bound.begin(), s.at_bound.end(), [](bool b) { return b; });
    out.max_kkt_residual = std::max(out.max_kkt_residual, s.kkt_residual);
  }
  return out;
}

}  // namespace cslme
