//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cslme/model.hpp"

namespace cslme {

enum class Method { kPls, kPrls, kMl, kReml, kPit };

std::string to_string(Method m);
/// Case-insensitive; throws ConfigError on unknown names.
Method parse_method(std::string_view name);

// Parameter labels are 0-based to follow the usual beta_0-is-the-intercept
// convention: beta_<j>, varsigma_<i>, sigma. Per-group overall coefficients
// use beta_<l>_<i> with a 1-based group index l.
std::vector<std::string> parameter_labels(Index p, Index k);

/// Mutable access to one scalar of `params` by label; ConfigError if the
/// label does not name a parameter of this shape.
double& parameter_ref(Parameters& params, std::string_view label);

/// Optimizer coordinates: x = (beta, varsigma, ln sigma).
VectorXd pack(const Parameters& params);
Parameters unpack(const VectorXd& x, Index p, Index k);

}  // namespace cslme
