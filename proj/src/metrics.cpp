//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/metrics.hpp"

#include <cmath>

namespace cslme {

double rmse(const LabeledValues& estimates, const LabeledValues& truth,
            std::span<const std::string> subset) {
  auto lookup = [](const LabeledValues& m, const std::string& key,
                   const char* which) {
    const auto it = m.find(key);
    if (it == m.end())
      throw DimensionError("rmse: label '" + key + "' missing from " + which);
    return it->second;
  };
  double sum = 0.0;
  std::size_t count = 0;
  auto add = [&](const std::string& key) {
    const double d = lookup(estimates, key, "estimates") - lookup(truth, key, "truth");
    sum += d * d;
    ++count;
  };
  if (subset.empty()) {
    for (const auto& [key, value] : truth) add(key);
  } else {
    for (const auto& key : subset) add(key);
  }
  if (count == 0) throw DimensionError("rmse: empty parameter set");
  return std::sqrt(sum / static_cast<double>(count));
}

R2 r_squared(const Design& design, const Parameters& params, R2Mode mode) {
  if (params.beta.size() != design.p() || params.varsigma.size() != design.k())
    throw DimensionError("parameters do not match the design");
  // Two passes for a stable spread.
  double sum = 0.0;
  for (const auto& grp : design.data().groups) sum += (grp.X * params.beta).sum();
  const double mean = sum / static_cast<double>(design.n());
  double ss = 0.0;
  for (const auto& grp : design.data().groups)
    ss += ((grp.X * params.beta).array() - mean).square().sum();
  const double fixed = ss / static_cast<double>(design.n());

  double random = 0.0;
  const auto alpha = design.alpha();
  for (Index i = 0; i < design.k(); ++i) {
    const double s = params.varsigma[i];
    random += mode == R2Mode::kRaw
                  ? s * s
                  : random_effect_variance(params.beta[alpha[static_cast<std::size_t>(i)]], s);
  }
  const double total = fixed + random + params.sigma * params.sigma;
  if (!(total > 0.0)) throw DomainError("R^2: total variance is zero");
  return {fixed / total, (fixed + random) / total};
}

}  // namespace cslme
