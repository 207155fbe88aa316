//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cslme/metrics.hpp"
#include "cslme/model.hpp"
#include "cslme/params.hpp"

namespace cslme {

struct Scenario {
  std::string name = "custom";
  Index n = 300;
  Index p = 3;  // including the intercept column when `intercept` is set
  Index g = 2;
  bool intercept = true;
  std::vector<Index> alpha{0};
  Parameters truth;
  int replications = 200;
  std::uint64_t seed = 1;
  /// Design columns are Gamma(2, gamma_scale) (shape-scale, mean 2 scale).
  double gamma_scale = 1.0;

  void validate() const;
  ModelSpec spec() const;
  /// Rows per group: n / g, the first n % g groups get one extra row.
  std::vector<Index> group_sizes() const;
};

/// Design matrices with y = 0. Column 0 is all ones when `intercept`,
/// every other column is i.i.d. Gamma(2, gamma_scale).
Dataset gen_design(const Scenario& scenario, std::uint64_t seed);

struct Generated {
  Dataset data;
  RandomEffects gamma;
};

/// gamma^l_i ~ SDTN(0, varsigma_i^2, |beta_i| / varsigma_i) (zero when
/// varsigma_i or beta_i is zero), eps ~ N(0, sigma^2), y = X b + Z g + eps.
Generated gen_response(Dataset design, const Parameters& truth,
                       const ModelSpec& spec, std::uint64_t seed);

/// Labels of the reported quantities: per-group overall coefficients
/// beta_<l>_<j> for random-effect columns (l 1-based), beta_<j> for the
/// remaining columns, s_gamma_<j> (random-effect sd) and sigma.
std::vector<std::string> report_labels(const Scenario& scenario);

/// Same set without the random-effect sd entries.
std::vector<std::string> report_labels_without_sd(const Scenario& scenario);

/// Truth for a realized dataset.
LabeledValues truth_values(const Scenario& scenario, const RandomEffects& gamma);

struct SimOptions {
  int pit_q = 2;
  int n_starts = 5;
  /// Replication workers; 0 uses max_threads(). Fits inside a replication
  /// are single threaded.
  int threads = 0;
  R2Mode r2_mode = R2Mode::kRaw;
};

struct ReplicationRecord {
  int replication = 0;
  Method method = Method::kPls;
  bool ok = false;
  std::string error;
  LabeledValues estimate;
  LabeledValues truth;
  double rmse = 0.0;
  double rmse_without_sd = 0.0;
  double r2_marginal = 0.0;
  double r2_conditional = 0.0;
  bool beta_nonnegative = false;
  bool converged = false;
};

struct SummaryRow {
  std::string method;
  std::string quantity;
  double truth = 0.0;  // NaN for rmse / R^2 / failures rows
  double mean = 0.0;
  double median = 0.0;
  double sd = 0.0;
  int count = 0;
};

struct ScenarioReport {
  Scenario scenario;
  std::vector<Method> methods;
  /// replication-major, then method order
  std::vector<ReplicationRecord> records;
  std::vector<SummaryRow> summary;
};

/// Fits every method on every replication. Replication r uses the seed
/// derive_seed(scenario.seed, r), so tables do not depend on scheduling.
/// Failed fits are kept as records with ok == false and counted.
ScenarioReport run_scenario(const Scenario& scenario,
                            std::span<const Method> methods,
                            const SimOptions& options = {});

std::vector<SummaryRow> summarize(const Scenario& scenario,
                                  std::span<const Method> methods,
                                  std::span<const ReplicationRecord> records);

/// CSV: scenario,n,method,quantity,truth,mean,median,sd,count.
void write_summary_csv(std::ostream& os, const ScenarioReport& report);

/// Names: table1-n300|n500|n1000, table2-n500|n1000|n2000,
/// table3-n1000|n2000|n4000, table4-n1000|n2000|n4000, pit-n300|n500|n1000,
/// merit-n30, sales-analog.
Scenario builtin_scenario(std::string_view name);
std::vector<std::string> builtin_scenario_names();

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  int steps = 2;

  double at(int i) const;
};

struct ContourRequest {
  Method objective = Method::kPls;
  std::array<std::string, 2> vary{"beta_1", "beta_2"};
  std::array<Axis, 2> ranges;
  Parameters fixed;

  void validate(Index p, Index k) const;
};

struct ContourCell {
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;  // NaN when the objective failed in this cell
};

/// Row-major over the first axis (x outer, y inner).
std::vector<ContourCell> contour_grid(const ContourRequest& request,
                                      const Design& design);

/// Cells whose value lies within `band` of one of `levels`.
std::vector<ContourCell> cells_near_levels(std::span<const ContourCell> cells,
                                           std::span<const double> levels,
                                           double band);

}  // namespace cslme
