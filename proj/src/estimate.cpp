//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cslme/linalg.hpp"
#include "cslme/parallel.hpp"
#include "cslme/ranef.hpp"
#include "cslme/rng.hpp"

namespace cslme {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shape(const Parameters& params, const Design& design) {
  if (params.beta.size() != design.p() || params.varsigma.size() != design.k())
    throw DimensionError("parameters do not match the design");
  if (!(params.sigma > 0.0)) throw DomainError("sigma must be > 0");
}

GlsSummary summary_at(const Parameters& params, const Design& design) {
  check_shape(params, design);
  return gls_summary(design, delta_diag(params, design.alpha()),
                     params.sigma * params.sigma);
}

// Objective on packed coordinates; failures become +inf so line searches
// simply back off.
Objective packed_objective(const Design& design, Method method) {
  return [&design, method](const VectorXd& x) {
    try {
      return objective_value(method, unpack(x, design.p(), design.k()), design);
    } catch (const Error&) {
      return kInf;
    }
  };
}

}  // namespace

void FitConfig::validate() const {
  if (method != Method::kPls && method != Method::kPrls)
    throw ConfigError("fit supports PLS and PRLS only");
  if (n_starts < 1) throw ConfigError("n_starts must be >= 1");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(tol_obj > 0.0) || !(tol_grad > 0.0))
    throw ConfigError("tolerances must be > 0");
}

double pls_objective(const Parameters& params, const Design& design) {
  const auto s = summary_at(params, design);
  return gls_quad_form(s, params.beta) + s.logdet_v;
}

double prls_objective(const Parameters& params, const Design& design) {
  const auto s = summary_at(params, design);
  return gls_quad_form(s, params.beta) + s.logdet_v + logdet_pd(s.XtViX);
}

double approx_loglik(const Parameters& params, const Design& design) {
  const double n = static_cast<double>(design.n());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) -
         0.5 * pls_objective(params, design);
}

double objective_value(Method method, const Parameters& params,
                       const Design& design) {
  switch (method) {
    case Method::kPls: return pls_objective(params, design);
    case Method::kPrls: return prls_objective(params, design);
    default: throw ConfigError("no approximated-likelihood objective for " + to_string(method));
  }
}

BoxBounds fit_bounds(const Design& design) {
  const Index p = design.p();
  const Index k = design.k();
  BoxBounds box = BoxBounds::unbounded(p + k + 1);
  for (Index j = 0; j < p; ++j)
    if (design.spec().column_constrained(j)) box.lower[j] = 0.0;
  box.lower.segment(p, k).setZero();
  const double sd = design.response_sd();
  box.lower[p + k] = sd > 0.0 ? std::log(1e-6 * sd) : -kInf;
  return box;
}

std::vector<Parameters> initial_points(const Design& design, int n_starts,
                                       std::uint64_t seed) {
  const Index p = design.p();
  const Index k = design.k();
  const auto alpha = design.alpha();
  const double sd = design.response_sd();

  Parameters base;
  base.beta = design.ols_beta();
  for (Index j = 0; j < p; ++j)
    if (design.spec().column_constrained(j)) base.beta[j] = std::max(0.0, base.beta[j]);
  base.varsigma.resize(k);
  for (Index i = 0; i < k; ++i)
    base.varsigma[i] =
        0.5 * std::abs(design.ols_beta()[alpha[static_cast<std::size_t>(i)]]) + 0.1 * sd;
  base.sigma = design.ols_sigma() > 0.0 ? design.ols_sigma() : (sd > 0.0 ? sd : 1.0);

  std::vector<Parameters> out{base};
  for (int s = 1; s < n_starts; ++s) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
    Parameters q = base;
    for (Index j = 0; j < p; ++j) q.beta[j] *= std::exp(0.5 * rng.normal());
    for (Index i = 0; i < k; ++i) q.varsigma[i] *= std::exp(0.5 * rng.normal());
    q.sigma *= std::exp(0.5 * rng.normal());
    out.push_back(std::move(q));
  }
  return out;
}

FitResult fit(const Design& design, const FitConfig& config) {
  config.validate();
  design.data().validate_for_fit();
  if (design.k() < 1) throw ConfigError("fit needs at least one random effect");

  const BoxBounds box = fit_bounds(design);
  const Objective f = packed_objective(design, config.method);
  const OptimOptions opts{config.max_iter, config.tol_obj, config.tol_grad};
  const auto starts = initial_points(design, config.n_starts, config.seed);

  std::vector<OptimResult> runs(starts.size());
  std::vector<StartReport> reports(starts.size());
  parallel_for(starts.size(), config.threads, [&](std::size_t s) {
    auto& rep = reports[s];
    rep.index = static_cast<int>(s);
    rep.initial = starts[s];
    try {
      runs[s] = minimize_box(f, pack(starts[s]), box, opts);
      rep.objective = runs[s].f;
      rep.converged = runs[s].converged;
      rep.iterations = runs[s].iterations;
      rep.stop_reason = to_string(runs[s].reason);
    } catch (const Error& e) {
      rep.failed = true;
      rep.objective = kInf;
      rep.error = e.what();
    }
  });

  // Sequential scan keeps the earliest start on (near) ties.
  int best = -1;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    if (reports[s].failed || !std::isfinite(reports[s].objective)) continue;
    if (best < 0) { best = static_cast<int>(s); continue; }
    const double fb = reports[static_cast<std::size_t>(best)].objective;
    if (reports[s].objective < fb - config.tol_obj * (1.0 + std::abs(fb)))
      best = static_cast<int>(s);
  }
  if (best < 0) {
    std::string msg = "all starts failed:";
    for (const auto& r : reports)
      msg += " [start " + std::to_string(r.index) + ": " +
             (r.error.empty() ? "non-finite objective" : r.error) + "]";
    throw ConvergenceError(msg);
  }

  const auto& run = runs[static_cast<std::size_t>(best)];
  FitResult res;
  res.params = unpack(run.x, design.p(), design.k());
  res.objective = objective_value(config.method, res.params, design);
  res.objective_trace = run.trace;
  res.start_index = best;
  res.converged = run.converged;
  res.iterations = run.iterations;
  res.projected_gradient = run.projected_gradient;
  res.stop_reason = to_string(run.reason);
  res.starts = std::move(reports);

  auto ranef = solve_all(design, res.params);
  res.gamma = std::move(ranef.effects);
  res.overall = std::move(ranef.overall);
  res.boundary = std::move(ranef.boundary);
  const R2 r2 = r_squared(design, res.params, config.r2_mode);
  res.r2_marginal = r2.marginal;
  res.r2_conditional = r2.conditional;
  return res;
}

PartialFit fit_partial(const Design& design, Method method,
                       const Parameters& start,
                       std::span<const std::string> free_labels,
                       const OptimOptions& opts) {
  check_shape(start, design);
  const Index p = design.p();
  const Index k = design.k();
  const auto labels = parameter_labels(p, k);
  std::vector<Index> idx;
  for (const auto& lab : free_labels) {
    const auto it = std::find(labels.begin(), labels.end(), lab);
    if (it == labels.end()) throw ConfigError("'" + lab + "' is not a model parameter");
    idx.push_back(static_cast<Index>(it - labels.begin()));
  }
  const BoxBounds full_box = fit_bounds(design);
  const VectorXd base = pack(start);
  const auto m = static_cast<Index>(idx.size());
  BoxBounds box{VectorXd(m), VectorXd(m)};
  VectorXd x0(m);
  for (Index a = 0; a < m; ++a) {
    box.lower[a] = full_box.lower[idx[static_cast<std::size_t>(a)]];
    box.upper[a] = full_box.upper[idx[static_cast<std::size_t>(a)]];
    x0[a] = base[idx[static_cast<std::size_t>(a)]];
  }
  auto expand = [&](const VectorXd& z) {
    VectorXd x = base;
    for (Index a = 0; a < m; ++a) x[idx[static_cast<std::size_t>(a)]] = z[a];
    return x;
  };
  const Objective full = packed_objective(design, method);
  const auto run = minimize_box([&](const VectorXd& z) { return full(expand(z)); },
                                x0, box, opts);
  PartialFit out;
  out.params = unpack(expand(run.x), p, k);
  out.objective = run.f;
  out.converged = run.converged;
  return out;
}

}  // namespace cslme
