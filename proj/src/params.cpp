//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/params.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace cslme {

std::string to_string(Method m) {
  switch (m) {
    case Method::kPls: return "PLS";
    case Method::kPrls: return "PRLS";
    case Method::kMl: return "ML";
    case Method::kReml: return "REML";
    case Method::kPit: return "PIT";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (Method m : {Method::kPls, Method::kPrls, Method::kMl, Method::kReml,
                   Method::kPit})
    if (up == to_string(m)) return m;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::vector<std::string> parameter_labels(Index p, Index k) {
  std::vector<std::string> out;
  for (Index j = 0; j < p; ++j) out.push_back("beta_" + std::to_string(j));
  for (Index i = 0; i < k; ++i) out.push_back("varsigma_" + std::to_string(i));
  out.push_back("sigma");
  return out;
}

namespace {

bool parse_suffix(std::string_view label, std::string_view prefix, Index& out) {
  if (!label.starts_with(prefix)) return false;
  const auto digits = label.substr(prefix.size());
  if (digits.empty()) return false;
  long long v = 0;
  const auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return false;
  out = static_cast<Index>(v);
  return true;
}

}  // namespace

double& parameter_ref(Parameters& params, std::string_view label) {
  if (label == "sigma") return params.sigma;
  Index i = -1;
  if (parse_suffix(label, "beta_", i) && i >= 0 && i < params.beta.size())
    return params.beta[i];
  if (parse_suffix(label, "varsigma_", i) && i >= 0 && i < params.varsigma.size())
    return params.varsigma[i];
  throw ConfigError("'" + std::string(label) + "' is not a model parameter");
}

VectorXd pack(const Parameters& params) {
  const Index p = params.beta.size();
  const Index k = params.varsigma.size();
  VectorXd x(p + k + 1);
  x << params.beta, params.varsigma, std::log(params.sigma);
  return x;
}

Parameters unpack(const VectorXd& x, Index p, Index k) {
  if (x.size() != p + k + 1) throw DimensionError("packed vector has wrong length");
  return {x.head(p), x.segment(p, k), std::exp(x[p + k])};
}

}  // namespace cslme
