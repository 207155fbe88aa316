//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <map>
#include <span>
#include <string>

#include "cslme/model.hpp"

namespace cslme {

using LabeledValues = std::map<std::string, double>;

/// sqrt(mean over `subset` of (estimate - truth)^2). An empty subset means
/// every label of `truth`. Missing labels raise DimensionError.
double rmse(const LabeledValues& estimates, const LabeledValues& truth,
            std::span<const std::string> subset = {});

enum class R2Mode {
  /// Random-effect variance taken as the raw scales sum varsigma_i^2.
  kRaw,
  /// Non-standard sensitivity variant: varsigma_i^2 * variance_factor(rho_i).
  kEffective,
};

struct R2 {
  double marginal = 0.0;
  double conditional = 0.0;
};

/// Marginal and conditional R^2 with fixed-effect predictions X beta. The
/// fixed-effect variance is the (1/n) spread of X beta around its mean.
/// DomainError if the total variance is zero.
R2 r_squared(const Design& design, const Parameters& params,
             R2Mode mode = R2Mode::kRaw);

}  // namespace cslme
