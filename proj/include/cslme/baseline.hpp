//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cslme/model.hpp"
#include "cslme/optim.hpp"

namespace cslme {

/// Variance components of the classical model: G = diag(varsigma^2),
/// R = sigma^2 I.
struct Theta {
  VectorXd varsigma;
  double sigma = 1.0;

  void validate(Index k) const;
};

enum class Criterion { kMl, kReml, kPit };

std::string to_string(Criterion c);

struct BaselineFit {
  Theta theta;
  VectorXd beta;
  RandomEffects gamma;
  /// beta_alpha + gamma^l, one row per group.
  MatrixXd overall;
  /// Maximized log-likelihood of the criterion; for PIT the negative of the
  /// minimized objective.
  double loglik = 0.0;
  Criterion criterion = Criterion::kReml;
  bool converged = false;
  int iterations = 0;
  std::vector<double> trace;
  std::string stop_reason;

  Parameters params() const { return {beta, theta.varsigma, theta.sigma}; }
};

/// (X' V^-1 X)^-1 X' V^-1 y at theta. SingularError on a rank-deficient
/// X' V^-1 X.
VectorXd profile_beta(const Theta& theta, const Design& design);

/// -(1/2) (ln|V| + r' V^-1 r), r = y - X beta_tilde(theta).
double profile_loglik(const Theta& theta, const Design& design);

/// profile_loglik - (1/2) ln|X' V^-1 X|.
double reml_loglik(const Theta& theta, const Design& design);

/// gamma^l = G Z^l' (V^l)^-1 (y^l - X^l beta), per group.
RandomEffects blup(const Theta& theta, const VectorXd& beta,
                   const Design& design);

struct BaselineConfig {
  int n_starts = 3;
  int max_iter = 500;
  double tol_obj = 1e-9;
  double tol_grad = 1e-6;
  std::uint64_t seed = 0;
};

/// Maximizes the ML or REML criterion over (varsigma >= 0, ln sigma), then
/// beta by GLS and gamma by blup(). Non-convergence is reported through the
/// `converged` flag; ConvergenceError only if no start gives a finite value.
BaselineFit fit_unconstrained(const Design& design, Criterion criterion,
                              const BaselineConfig& config = {});

struct JointSolution {
  VectorXd beta;
  RandomEffects gamma;
};

/// Dense Henderson mixed-model equations
///   [X'X      X'Z          ] [b]   [X'y]
///   [Z'X  Z'Z + s2 G^-1    ] [g] = [Z'y].
/// SingularError when any varsigma is zero (G not invertible).
JointSolution joint_system_solve(const Theta& theta, const Design& design);

/// Gauss-Hermite rule for E[h(d)], d ~ N(0, 1): nodes d_q = sqrt(2) z_q and
/// log(phi(d_q) w_q) = log(eta_q / sqrt(pi)), with (z_q, eta_q) from the
/// physicists' table. Q must be 2 or 4.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> log_mass;
};

GaussHermiteRule gauss_hermite_rule(int q);

struct PitValue {
  double value = 0.0;
  /// Some quadrature term's density product is below DBL_MIN, i.e. it would
  /// be flushed to zero (or denormal) if formed in linear space.
  bool underflow = false;
};

/// Negative log of the quadrature marginal likelihood (k = 1). Accumulated
/// in log space; the underflow condition is reported, not hidden.
PitValue pit_objective(const Parameters& params, const Design& design, int q);

/// Minimizes pit_objective from `initial` over the same box as the PLS fit.
/// UnderflowError if the objective underflows at the starting point or at
/// the returned optimum. gamma is the box-constrained posterior mode.
BaselineFit fit_pit(const Design& design, int q, const Parameters& initial,
                    const OptimOptions& opts = {});

}  // namespace cslme
