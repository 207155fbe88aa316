//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>

#include "cslme/baseline.hpp"
#include "cslme/estimate.hpp"
#include "cslme/parallel.hpp"
#include "cslme/rng.hpp"
#include "cslme/sdtn.hpp"

namespace cslme {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool in_alpha(const std::vector<Index>& alpha, Index j) {
  return std::find(alpha.begin(), alpha.end(), j) != alpha.end();
}

double random_effect_sd(double beta, double varsigma) {
  return std::sqrt(random_effect_variance(beta, varsigma));
}

// Quantities of one fitted model in the report layout.
LabeledValues report_values(const Scenario& sc, const VectorXd& beta,
                            const MatrixXd& overall, const VectorXd& sd,
                            double sigma) {
  LabeledValues out;
  for (std::size_t i = 0; i < sc.alpha.size(); ++i)
    for (Index l = 0; l < sc.g; ++l)
      out["beta_" + std::to_string(l + 1) + "_" + std::to_string(sc.alpha[i])] =
          overall(l, static_cast<Index>(i));
  for (Index j = 0; j < sc.p; ++j)
    if (!in_alpha(sc.alpha, j)) out["beta_" + std::to_string(j)] = beta[j];
  for (std::size_t i = 0; i < sc.alpha.size(); ++i)
    out["s_gamma_" + std::to_string(sc.alpha[i])] = sd[static_cast<Index>(i)];
  out["sigma"] = sigma;
  return out;
}

}  // namespace

void Scenario::validate() const {
  if (g < 2) throw ConfigError("scenario needs g >= 2");
  if (p < 1) throw ConfigError("scenario needs p >= 1");
  if (n < g) throw ConfigError("scenario needs at least one row per group");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (!(gamma_scale > 0.0)) throw ConfigError("gamma_scale must be > 0");
  try {
    spec().validate(p);
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
  if (truth.beta.size() != p) throw ConfigError("truth beta must have p entries");
  if (truth.varsigma.size() != static_cast<Index>(alpha.size()))
    throw ConfigError("truth varsigma must have one entry per random effect");
  if (!(truth.sigma > 0.0)) throw ConfigError("truth sigma must be > 0");
  if ((truth.varsigma.array() < 0.0).any()) throw ConfigError("truth varsigma must be >= 0");
  for (const Index a : alpha)
    if (truth.beta[a] < 0.0)
      throw ConfigError("truth beta must be >= 0 on the random-effect columns");
}

ModelSpec Scenario::spec() const {
  ModelSpec s;
  s.alpha = alpha;
  s.intercept = intercept;
  s.constrained = true;
  return s;
}

std::vector<Index> Scenario::group_sizes() const {
  std::vector<Index> sizes(static_cast<std::size_t>(g), n / g);
  for (Index l = 0; l < n % g; ++l) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

Dataset gen_design(const Scenario& sc, std::uint64_t seed) {
  Rng rng(seed);
  Dataset data;
  Index label = 1;
  for (const Index rows : sc.group_sizes()) {
    GroupData grp;
    grp.label = std::to_string(label++);
    grp.y = VectorXd::Zero(rows);
    grp.X.resize(rows, sc.p);
    for (Index r = 0; r < rows; ++r)
      for (Index j = 0; j < sc.p; ++j)
        grp.X(r, j) = (sc.intercept && j == 0) ? 1.0 : rng.gamma_int(2, sc.gamma_scale);
    data.groups.push_back(std::move(grp));
  }
  return data;
}

Generated gen_response(Dataset design, const Parameters& truth,
                       const ModelSpec& spec, std::uint64_t seed) {
  design.validate();
  spec.validate(design.p());
  const Index k = spec.k();
  if (truth.beta.size() != design.p() || truth.varsigma.size() != k)
    throw DimensionError("truth does not match the design");
  Rng rng(seed);
  Generated out;
  out.gamma.gamma = MatrixXd::Zero(design.g(), k);
  for (Index l = 0; l < design.g(); ++l) {
    auto& grp = design.groups[static_cast<std::size_t>(l)];
    VectorXd coef = truth.beta;
    for (Index i = 0; i < k; ++i) {
      const double b = std::abs(truth.beta[spec.alpha[static_cast<std::size_t>(i)]]);
      const double s = truth.varsigma[i];
      const double u = rng.uniform();
      if (s > 0.0 && b > 0.0)
        out.gamma.gamma(l, i) = sdtn_quantile(u, SdtnParams<double>{0.0, s, b / s});
      coef[spec.alpha[static_cast<std::size_t>(i)]] += out.gamma.gamma(l, i);
    }
    grp.y = grp.X * coef;
    for (Index r = 0; r < grp.y.size(); ++r) grp.y[r] += truth.sigma * rng.normal();
  }
  out.data = std::move(design);
  return out;
}

std::vector<std::string> report_labels(const Scenario& sc) {
  const auto zero = MatrixXd::Zero(sc.g, static_cast<Index>(sc.alpha.size()));
  const auto vals = report_values(sc, VectorXd::Zero(sc.p), zero,
                                  VectorXd::Zero(static_cast<Index>(sc.alpha.size())), 1.0);
  std::vector<std::string> out;
  for (const auto& [key, v] : vals) out.push_back(key);
  return out;
}

std::vector<std::string> report_labels_without_sd(const Scenario& sc) {
  auto all = report_labels(sc);
  std::erase_if(all, [](const std::string& s) { return s.starts_with("s_gamma_"); });
  return all;
}

LabeledValues truth_values(const Scenario& sc, const RandomEffects& gamma) {
  const Index k = static_cast<Index>(sc.alpha.size());
  MatrixXd overall = gamma.gamma;
  VectorXd sd(k);
  for (Index i = 0; i < k; ++i) {
    const double b = sc.truth.beta[sc.alpha[static_cast<std::size_t>(i)]];
    overall.col(i).array() += b;
    sd[i] = random_effect_sd(b, sc.truth.varsigma[i]);
  }
  return report_values(sc, sc.truth.beta, overall, sd, sc.truth.sigma);
}

ScenarioReport run_scenario(const Scenario& scenario,
                            std::span<const Method> methods,
                            const SimOptions& options) {
  scenario.validate();
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (options.pit_q != 2 && options.pit_q != 4) throw ConfigError("pit_q must be 2 or 4");

  const auto reps = static_cast<std::size_t>(scenario.replications);
  const std::size_t m = methods.size();
  const auto labels = report_labels(scenario);
  const auto labels5 = report_labels_without_sd(scenario);
  const ModelSpec spec = scenario.spec();
  const Index k = spec.k();

  ScenarioReport report;
  report.scenario = scenario;
  report.methods.assign(methods.begin(), methods.end());
  report.records.resize(reps * m);

  parallel_for(reps, options.threads, [&](std::size_t r) {
    const std::uint64_t rep_seed = derive_seed(scenario.seed, r);
    Generated gen = gen_response(gen_design(scenario, derive_seed(rep_seed, 0)),
                                 scenario.truth, spec, derive_seed(rep_seed, 1));
    const LabeledValues truth = truth_values(scenario, gen.gamma);
    std::unique_ptr<Design> design;
    std::string design_error;
    try {
      design = std::make_unique<Design>(std::move(gen.data), spec);
    } catch (const Error& e) {
      design_error = e.what();
    }

    for (std::size_t mi = 0; mi < m; ++mi) {
      auto& rec = report.records[r * m + mi];
      rec.replication = static_cast<int>(r);
      rec.method = methods[mi];
      rec.truth = truth;
      if (!design) {
        rec.error = design_error;
        continue;
      }
      try {
        Parameters est;
        MatrixXd overall;
        VectorXd sd(k);
        switch (methods[mi]) {
          case Method::kPls:
          case Method::kPrls: {
            FitConfig cfg;
            cfg.method = methods[mi];
            cfg.n_starts = options.n_starts;
            cfg.seed = rep_seed;
            cfg.threads = 1;
            const FitResult fr = fit(*design, cfg);
            est = fr.params;
            overall = fr.overall;
            rec.converged = fr.converged;
            for (Index i = 0; i < k; ++i)
              sd[i] = random_effect_sd(est.beta[spec.alpha[static_cast<std::size_t>(i)]],
                                       est.varsigma[i]);
            break;
          }
          case Method::kMl:
          case Method::kReml: {
            BaselineConfig cfg;
            cfg.seed = rep_seed;
            const BaselineFit bf = fit_unconstrained(
                *design, methods[mi] == Method::kMl ? Criterion::kMl : Criterion::kReml, cfg);
            est = bf.params();
            overall = bf.overall;
            rec.converged = bf.converged;
            sd = est.varsigma;
            break;
          }
          case Method::kPit: {
            const Parameters init = initial_points(*design, 1, rep_seed).front();
            const BaselineFit bf = fit_pit(*design, options.pit_q, init);
            est = bf.params();
            overall = bf.overall;
            rec.converged = bf.converged;
            for (Index i = 0; i < k; ++i)
              sd[i] = random_effect_sd(est.beta[spec.alpha[static_cast<std::size_t>(i)]],
                                       est.varsigma[i]);
            break;
          }
        }
        rec.estimate = report_values(scenario, est.beta, overall, sd, est.sigma);
        rec.rmse = rmse(rec.estimate, truth, labels);
        rec.rmse_without_sd = rmse(rec.estimate, truth, labels5);
        const R2 r2 = r_squared(*design, est, options.r2_mode);
        rec.r2_marginal = r2.marginal;
        rec.r2_conditional = r2.conditional;
        rec.beta_nonnegative = (est.beta.array() >= 0.0).all();
        rec.ok = true;
      } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
      }
    }
  });

  report.summary = summarize(scenario, methods, report.records);
  return report;
}

std::vector<SummaryRow> summarize(const Scenario& scenario,
                                  std::span<const Method> methods,
                                  std::span<const ReplicationRecord> records) {
  auto stats = [](std::vector<double> v, SummaryRow& row) {
    row.count = static_cast<int>(v.size());
    if (v.empty()) {
      row.mean = row.median = row.sd = kNaN;
      return;
    }
    const double n = static_cast<double>(v.size());
    row.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (const double x : v) ss += (x - row.mean) * (x - row.mean);
    row.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    row.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  };

  std::vector<SummaryRow> out;
  const auto labels = report_labels(scenario);
  for (const Method method : methods) {
    std::vector<const ReplicationRecord*> ok;
    int failures = 0;
    for (const auto& rec : records) {
      if (rec.method != method) continue;
      if (rec.ok) ok.push_back(&rec); else ++failures;
    }
    const std::string name = to_string(method);
    for (const auto& lab : labels) {
      SummaryRow row{name, lab};
      std::vector<double> est;
      double truth_sum = 0.0;
      for (const auto* rec : ok) {
        est.push_back(rec->estimate.at(lab));
        truth_sum += rec->truth.at(lab);
      }
      stats(std::move(est), row);
      row.truth = ok.empty() ? kNaN : truth_sum / static_cast<double>(ok.size());
      out.push_back(row);
    }
    auto metric = [&](const char* q, double ReplicationRecord::*field) {
      SummaryRow row{name, q, kNaN};
      std::vector<double> v;
      for (const auto* rec : ok) v.push_back(rec->*field);
      stats(std::move(v), row);
      out.push_back(row);
    };
    metric("rmse", &ReplicationRecord::rmse);
    metric("rmse_without_sd", &ReplicationRecord::rmse_without_sd);
    metric("r2_marginal", &ReplicationRecord::r2_marginal);
    metric("r2_conditional", &ReplicationRecord::r2_conditional);
    out.push_back({name, "failures", kNaN, kNaN, kNaN, kNaN, failures});
  }
  return out;
}

void write_summary_csv(std::ostream& os, const ScenarioReport& report) {
  auto num = [](double v) {
    if (std::isnan(v)) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "scenario,n,method,quantity,truth,mean,median,sd,count\n";
  for (const auto& row : report.summary)
    os << report.scenario.name << ',' << report.scenario.n << ',' << row.method << ','
       << row.quantity << ',' << num(row.truth) << ',' << num(row.mean) << ','
       << num(row.median) << ',' << num(row.sd) << ',' << row.count << '\n';
}

Scenario builtin_scenario(std::string_view name) {
  Scenario sc;
  sc.name = std::string(name);
  auto set_n = [&](std::string_view prefix, std::initializer_list<Index> allowed) {
    const auto tail = name.substr(prefix.size());
    for (const Index n : allowed)
      if (tail == "n" + std::to_string(n)) {
        sc.n = n;
        return true;
      }
    return false;
  };
  auto ones = [](Index m) { return VectorXd::Ones(m).eval(); };

  if (name.starts_with("table1-") && set_n("table1-", {300, 500, 1000})) {
    sc.p = 3;
    sc.alpha = {0};
    sc.truth = {VectorXd::Constant(3, 1.0), ones(1), 1.0};
    sc.truth.beta[0] = 0.1;
  } else if (name.starts_with("table2-") && set_n("table2-", {500, 1000, 2000})) {
    sc.p = 3;
    sc.alpha = {0, 1, 2};
    sc.truth = {ones(3), ones(3), 1.0};
  } else if (name.starts_with("table3-") && set_n("table3-", {1000, 2000, 4000})) {
    sc.p = 7;
    sc.alpha = {0};
    sc.truth = {ones(7), ones(1), 1.0};
  } else if (name.starts_with("table4-") && set_n("table4-", {1000, 2000, 4000})) {
    sc.p = 7;
    sc.alpha = {0, 1, 2, 3, 4, 5, 6};
    sc.truth = {ones(7), ones(7), 1.0};
  } else if (name.starts_with("pit-") && set_n("pit-", {300, 500, 1000})) {
    sc.p = 3;
    sc.alpha = {0};
    sc.truth = {VectorXd::Constant(3, 1.0), ones(1), 1.0};
    sc.truth.beta[0] = 0.1;
    sc.replications = 100;
  } else if (name == "merit-n30") {
    sc.n = 30;
    sc.p = 3;
    sc.alpha = {0};
    sc.truth = {VectorXd::Constant(3, 0.001), ones(1), 1.0};
    sc.truth.beta[0] = 0.1;
  } else if (name == "sales-analog") {
    // Price-elasticity shaped: small positive slope with a wide random slope,
    // so unconstrained per-group slopes are often negative.
    sc.n = 400;
    sc.p = 2;
    sc.g = 8;
    sc.alpha = {0, 1};
    sc.truth = {VectorXd::Constant(2, 0.05), VectorXd::Constant(2, 0.5), 1.0};
    sc.truth.beta[0] = 1.0;
    sc.replications = 50;
  } else {
    throw ConfigError("unknown built-in scenario '" + std::string(name) + "'");
  }
  return sc;
}

std::vector<std::string> builtin_scenario_names() {
  return {"table1-n300", "table1-n500",  "table1-n1000", "table2-n500",
          "table2-n1000", "table2-n2000", "table3-n1000", "table3-n2000",
          "table3-n4000", "table4-n1000", "table4-n2000", "table4-n4000",
          "pit-n300",     "pit-n500",     "pit-n1000",    "merit-n30",
          "sales-analog"};
}

double Axis::at(int i) const {
  if (steps == 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
}

void ContourRequest::validate(Index p, Index k) const {
  if (objective != Method::kPls && objective != Method::kPrls)
    throw ConfigError("contour objective must be PLS or PRLS");
  if (vary[0] == vary[1]) throw ConfigError("contour axes must differ");
  for (const auto& ax : ranges) {
    if (ax.steps < 1) throw ConfigError("contour steps must be >= 1");
    if (!(ax.hi >= ax.lo)) throw ConfigError("contour range needs lo <= hi");
  }
  if (fixed.beta.size() != p || fixed.varsigma.size() != k)
    throw ConfigError("fixed parameters do not match the model");
  Parameters probe = fixed;
  for (const auto& lab : vary) parameter_ref(probe, lab);
}

std::vector<ContourCell> contour_grid(const ContourRequest& request,
                                      const Design& design) {
  request.validate(design.p(), design.k());
  std::vector<ContourCell> cells;
  cells.reserve(static_cast<std::size_t>(request.ranges[0].steps) *
                static_cast<std::size_t>(request.ranges[1].steps));
  Parameters params = request.fixed;
  double& px = parameter_ref(params, request.vary[0]);
  double& py = parameter_ref(params, request.vary[1]);
  for (int i = 0; i < request.ranges[0].steps; ++i) {
    for (int j = 0; j < request.ranges[1].steps; ++j) {
      px = request.ranges[0].at(i);
      py = request.ranges[1].at(j);
      ContourCell cell{px, py, kNaN};
      try {
        cell.value = objective_value(request.objective, params, design);
      } catch (const Error&) {
        // recorded as missing
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::vector<ContourCell> cells_near_levels(std::span<const ContourCell> cells,
                                           std::span<const double> levels,
                                           double band) {
  std::vector<ContourCell> out;
  for (const auto& c : cells)
    for (const double lv : levels)
      if (std::abs(c.value - lv) <= band) {
        out.push_back(c);
        break;
      }
  return out;
}

}  // namespace cslme
