//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/baseline.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numbers>

#include "cslme/estimate.hpp"
#include "cslme/linalg.hpp"
#include "cslme/ranef.hpp"
#include "cslme/rng.hpp"

namespace cslme {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

GlsSummary summary_at(const Theta& theta, const Design& design) {
  theta.validate(design.k());
  return gls_summary(design, theta.varsigma.array().square().matrix(),
                     theta.sigma * theta.sigma);
}

double loglik_value(Criterion c, const Theta& theta, const Design& design) {
  const auto s = summary_at(theta, design);
  const double prof = -0.5 * (s.logdet_v + gls_quad_form(s, gls_beta(s)));
  if (c == Criterion::kMl) return prof;
  return prof - 0.5 * logdet_pd(s.XtViX);
}

}  // namespace

void Theta::validate(Index k) const {
  if (varsigma.size() != k)
    throw DimensionError("theta: one varsigma per random effect");
  if ((varsigma.array() < 0.0).any()) throw DomainError("theta: varsigma must be >= 0");
  if (!(sigma > 0.0)) throw DomainError("theta: sigma must be > 0");
}

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::kMl: return "ML";
    case Criterion::kReml: return "REML";
    case Criterion::kPit: return "PIT";
  }
  return "?";
}

VectorXd profile_beta(const Theta& theta, const Design& design) {
  return gls_beta(summary_at(theta, design));
}

double profile_loglik(const Theta& theta, const Design& design) {
  return loglik_value(Criterion::kMl, theta, design);
}

double reml_loglik(const Theta& theta, const Design& design) {
  return loglik_value(Criterion::kReml, theta, design);
}

RandomEffects blup(const Theta& theta, const VectorXd& beta,
                   const Design& design) {
  theta.validate(design.k());
  const Index p = design.p();
  const VectorXd G = theta.varsigma.array().square();
  const double s2 = theta.sigma * theta.sigma;
  const VectorXd d = beta - design.ols_beta();
  RandomEffects out;
  out.gamma.resize(design.g(), design.k());
  Index l = 0;
  for (const auto& st : design.stats()) {
    const auto blk = solve_block<double>(st, G, s2, /*with_ztvia=*/true);
    const VectorXd ztvir = blk.ZtViA.col(p) - blk.ZtViA.leftCols(p) * d;
    out.gamma.row(l++) = G.cwiseProduct(ztvir).transpose();
  }
  return out;
}

BaselineFit fit_unconstrained(const Design& design, Criterion criterion,
                              const BaselineConfig& config) {
  if (criterion == Criterion::kPit)
    throw ConfigError("use fit_pit for the quadrature estimator");
  design.data().validate_for_fit();
  const Index k = design.k();
  if (k < 1) throw ConfigError("baseline fit needs at least one random effect");
  if (config.n_starts < 1) throw ConfigError("n_starts must be >= 1");

  // x = (varsigma, ln sigma); the starts reuse the PLS recipe.
  BoxBounds box = BoxBounds::unbounded(k + 1);
  box.lower.head(k).setZero();
  const double sd = design.response_sd();
  box.lower[k] = sd > 0.0 ? std::log(1e-6 * sd) : -kInf;
  const Objective f = [&](const VectorXd& x) {
    try {
      const Theta th{x.head(k), std::exp(x[k])};
      return -loglik_value(criterion, th, design);
    } catch (const Error&) {
      return kInf;
    }
  };
  const OptimOptions opts{config.max_iter, config.tol_obj, config.tol_grad};

  OptimResult best;
  bool have = false;
  for (const auto& start : initial_points(design, config.n_starts, config.seed)) {
    VectorXd x0(k + 1);
    x0 << start.varsigma, std::log(start.sigma);
    OptimResult run;
    try {
      run = minimize_box(f, x0, box, opts);
    } catch (const Error&) {
      continue;
    }
    if (!have || run.f < best.f - config.tol_obj * (1.0 + std::abs(best.f))) {
      best = std::move(run);
      have = true;
    }
  }
  if (!have || !std::isfinite(best.f))
    throw ConvergenceError(to_string(criterion) + ": no start produced a finite likelihood");

  BaselineFit out;
  out.criterion = criterion;
  out.theta = {best.x.head(k), std::exp(best.x[k])};
  out.beta = profile_beta(out.theta, design);
  out.gamma = blup(out.theta, out.beta, design);
  out.overall.resize(design.g(), k);
  for (Index i = 0; i < k; ++i)
    out.overall.col(i) = out.gamma.gamma.col(i).array() +
                         out.beta[design.alpha()[static_cast<std::size_t>(i)]];
  out.loglik = -best.f;
  out.converged = best.converged;
  out.iterations = best.iterations;
  out.trace = best.trace;
  out.stop_reason = to_string(best.reason);
  return out;
}

JointSolution joint_system_solve(const Theta& theta, const Design& design) {
  theta.validate(design.k());
  if ((theta.varsigma.array() == 0.0).any())
    throw SingularError("G is singular: a random-effect scale is zero");
  const Assembled a = assemble(design.data(), design.spec());
  const Index p = design.p();
  const Index q = a.Z.cols();
  const double s2 = theta.sigma * theta.sigma;

  MatrixXd C(p + q, p + q);
  C.topLeftCorner(p, p) = a.X.transpose() * a.X;
  C.topRightCorner(p, q) = a.X.transpose() * a.Z;
  C.bottomLeftCorner(q, p) = C.topRightCorner(p, q).transpose();
  C.bottomRightCorner(q, q) = a.Z.transpose() * a.Z;
  const VectorXd ginv = theta.varsigma.array().square().inverse();
  C.bottomRightCorner(q, q).diagonal() += s2 * ginv.replicate(design.g(), 1);
  VectorXd rhs(p + q);
  rhs << a.X.transpose() * a.y, a.Z.transpose() * a.y;

  const Eigen::FullPivLU<MatrixXd> lu(C);
  if (!lu.isInvertible()) throw SingularError("mixed-model equations are singular");
  const VectorXd sol = lu.solve(rhs);
  JointSolution out;
  out.beta = sol.head(p);
  out.gamma.gamma = sol.tail(q).reshaped(design.k(), design.g()).transpose();
  return out;
}

GaussHermiteRule gauss_hermite_rule(int q) {
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  std::vector<double> z;
  std::vector<double> eta;
  if (q == 2) {
    z = {-std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0};
    eta = {sqrt_pi / 2.0, sqrt_pi / 2.0};
  } else if (q == 4) {
    const double s6 = std::sqrt(6.0);
    const double inner = std::sqrt((3.0 - s6) / 2.0);
    const double outer = std::sqrt((3.0 + s6) / 2.0);
    const double w_inner = sqrt_pi * (3.0 + s6) / 12.0;
    const double w_outer = sqrt_pi * (3.0 - s6) / 12.0;
    z = {-outer, -inner, inner, outer};
    eta = {w_outer, w_inner, w_inner, w_outer};
  } else {
    throw ConfigError("Gauss-Hermite order must be 2 or 4");
  }
  GaussHermiteRule rule;
  for (std::size_t i = 0; i < z.size(); ++i) {
    rule.nodes.push_back(std::numbers::sqrt2 * z[i]);
    rule.log_mass.push_back(std::log(eta[i] / sqrt_pi));
  }
  return rule;
}

PitValue pit_objective(const Parameters& params, const Design& design, int q) {
  if (design.k() != 1)
    throw ConfigError("the quadrature estimator supports one random effect only");
  if (params.beta.size() != design.p() || params.varsigma.size() != 1)
    throw DimensionError("parameters do not match the design");
  if (!(params.sigma > 0.0)) throw DomainError("sigma must be > 0");

  const auto rule = gauss_hermite_rule(q);
  const double sigma = params.sigma;
  const double bound = std::abs(params.beta[design.alpha()[0]]);
  const double vs = std::abs(params.varsigma[0]);
  const bool degenerate = vs == 0.0 || bound == 0.0;
  const SdtnParams<double> law{0.0, degenerate ? 1.0 : vs,
                               degenerate ? 1.0 : bound / vs};

  std::vector<double> u(rule.nodes.size(), 0.0);
  if (!degenerate)
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] = sdtn_quantile(std_normal_cdf(rule.nodes[i]), law);

  const double log_floor = std::log(DBL_MIN);
  const double log_norm = -std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  PitValue out;
  std::vector<double> terms(u.size());
  for (Index l = 0; l < design.g(); ++l) {
    const auto& grp = design.data().groups[static_cast<std::size_t>(l)];
    const VectorXd r = grp.y - grp.X * params.beta;
    const VectorXd z = grp.X.col(design.alpha()[0]);
    const double rr = r.squaredNorm();
    const double zr = z.dot(r);
    const double zz = z.squaredNorm();
    const double nl = static_cast<double>(grp.y.size());
    double top = -kInf;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double ss = std::max(0.0, rr - 2.0 * u[i] * zr + u[i] * u[i] * zz);
      const double log_prod = nl * log_norm - 0.5 * ss / (sigma * sigma);
      if (log_prod < log_floor) out.underflow = true;
      terms[i] = log_prod + rule.log_mass[i];
      top = std::max(top, terms[i]);
    }
    double acc = 0.0;
    for (const double t : terms) acc += std::exp(t - top);
    out.value -= top + std::log(acc);
  }
  return out;
}

BaselineFit fit_pit(const Design& design, int q, const Parameters& initial,
                    const OptimOptions& opts) {
  design.data().validate_for_fit();
  gauss_hermite_rule(q);  // validates q
  if (pit_objective(initial, design, q).underflow)
    throw UnderflowError(
        "quadrature density product underflows at the starting point "
        "(too many rows per group for a linear-space product)");

  const Index p = design.p();
  const Objective f = [&](const VectorXd& x) {
    try {
      return pit_objective(unpack(x, p, 1), design, q).value;
    } catch (const Error&) {
      return kInf;
    }
  };
  const auto run = minimize_box(f, pack(initial), fit_bounds(design), opts);
  const Parameters est = unpack(run.x, p, 1);
  if (pit_objective(est, design, q).underflow)
    throw UnderflowError("quadrature density product underflows at the optimum");

  BaselineFit out;
  out.criterion = Criterion::kPit;
  out.theta = {est.varsigma, est.sigma};
  out.beta = est.beta;
  auto re = solve_all(design, est);
  out.gamma = std::move(re.effects);
  out.overall = std::move(re.overall);
  out.loglik = -run.f;
  out.converged = run.converged;
  out.iterations = run.iterations;
  out.trace = run.trace;
  out.stop_reason = to_string(run.reason);
  return out;
}

}  // namespace cslme
