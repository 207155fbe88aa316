//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "cslme/common.hpp"
#include "cslme/rng.hpp"

// Truncated normal (TN) and symmetric doubly truncated normal (SDTN) laws.
//
// SDTN(mu, eta^2, rho) is TN(mu, eta^2, [mu - rho*eta, mu + rho*eta]). All
// functions are pure and templated on the scalar type.

namespace cslme {

template <class Scalar>
Scalar std_normal_pdf(const Scalar& x) {
  using std::exp;
  constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343819;
  return Scalar(inv_sqrt_2pi) * exp(-x * x / Scalar(2));
}

template <class Scalar>
Scalar std_normal_cdf(const Scalar& x) {
  using std::erfc;
  return Scalar(0.5) * erfc(-x / Scalar(std::numbers::sqrt2));
}

/// Phi(b) - Phi(a) for a <= b, evaluated in whichever tail keeps precision.
template <class Scalar>
Scalar std_normal_mass(const Scalar& a, const Scalar& b) {
  using std::erf;
  if (a >= Scalar(0)) return std_normal_cdf(-a) - std_normal_cdf(-b);
  if (b <= Scalar(0)) return std_normal_cdf(b) - std_normal_cdf(a);
  const Scalar s = Scalar(std::numbers::sqrt2);
  return Scalar(0.5) * (erf(b / s) - erf(a / s));
}

template <class Scalar>
struct TnParams {
  Scalar mu{0};
  Scalar eta{1};
  Scalar a{-std::numeric_limits<double>::infinity()};
  Scalar b{std::numeric_limits<double>::infinity()};

  void validate() const {
    if (!(eta > Scalar(0))) throw DomainError("TN scale eta must be > 0");
    if (!(a < b)) throw DomainError("TN bounds must satisfy a < b");
  }
};

template <class Scalar>
struct SdtnParams {
  Scalar mu{0};
  Scalar eta{1};
  Scalar rho{1};

  Scalar lower() const { return mu - rho * eta; }
  Scalar upper() const { return mu + rho * eta; }

  TnParams<Scalar> as_tn() const { return {mu, eta, lower(), upper()}; }

  void validate() const {
    if (!(eta > Scalar(0))) throw DomainError("SDTN scale eta must be > 0");
    if (!(rho > Scalar(0))) throw DomainError("SDTN ratio rho must be > 0");
  }
};

namespace detail {

template <class Scalar>
Scalar tn_mass_checked(const TnParams<Scalar>& p) {
  const Scalar mass =
      std_normal_mass((p.a - p.mu) / p.eta, (p.b - p.mu) / p.eta);
  if (!(mass > Scalar(0)))
    throw DomainError("TN truncation mass underflows to zero");
  return mass;
}

// x * phi(x), with the infinite endpoints mapped to 0.
template <class Scalar>
Scalar x_phi(const Scalar& x) {
  using std::isinf;
  if (isinf(x)) return Scalar(0);
  return x * std_normal_pdf(x);
}

}  // namespace detail

template <class Scalar>
Scalar tn_pdf(const Scalar& x, const TnParams<Scalar>& p) {
  p.validate();
  const Scalar mass = detail::tn_mass_checked(p);
  if (x < p.a || x > p.b) return Scalar(0);
  return std_normal_pdf((x - p.mu) / p.eta) / (p.eta * mass);
}

template <class Scalar>
struct TnMoments {
  Scalar mean;
  Scalar variance;
};

template <class Scalar>
TnMoments<Scalar> tn_moments(const TnParams<Scalar>& p) {
  p.validate();
  const Scalar mass = detail::tn_mass_checked(p);
  const Scalar ap = (p.a - p.mu) / p.eta;
  const Scalar bp = (p.b - p.mu) / p.eta;
  const Scalar dphi = std_normal_pdf(ap) - std_normal_pdf(bp);
  const Scalar ratio = dphi / mass;
  const Scalar mean = p.mu + ratio * p.eta;
  const Scalar variance =
      p.eta * p.eta *
      (Scalar(1) + (detail::x_phi(ap) - detail::x_phi(bp)) / mass -
       ratio * ratio);
  return {mean, variance};
}

/// Below this rho the variance factor is taken from its Taylor series.
inline constexpr double kVarianceFactorSeriesThreshold = 1e-3;

/// Series branch of variance_factor, valid for small rho.
template <class Scalar>
Scalar variance_factor_series(const Scalar& rho) {
  const Scalar r2 = rho * rho;
  return r2 * (Scalar(1.0 / 3.0) +
               r2 * (Scalar(-2.0 / 45.0) +
                     r2 * (Scalar(2.0 / 945.0) + r2 * Scalar(2.0 / 14175.0))));
}

/// Closed-form branch: 1 - 2 rho phi(rho) / (2 Phi(rho) - 1).
template <class Scalar>
Scalar variance_factor_closed(const Scalar& rho) {
  using std::erf;
  const Scalar mass = erf(rho / Scalar(std::numbers::sqrt2));
  return Scalar(1) - Scalar(2) * rho * std_normal_pdf(rho) / mass;
}

/// Var[SDTN(mu, eta^2, rho)] / eta^2, in [0, 1) and nondecreasing in rho.
template <class Scalar>
Scalar variance_factor(const Scalar& rho) {
  if (!(rho > Scalar(0))) throw DomainError("variance_factor needs rho > 0");
  if (rho < Scalar(kVarianceFactorSeriesThreshold))
    return variance_factor_series(rho);
  const Scalar v = variance_factor_closed(rho);
  return v < Scalar(1) ? v : Scalar(1);
}

template <class Scalar>
Scalar sdtn_variance(const SdtnParams<Scalar>& p) {
  p.validate();
  return p.eta * p.eta * variance_factor(p.rho);
}

template <class Scalar>
Scalar sdtn_pdf(const Scalar& x, const SdtnParams<Scalar>& p) {
  using std::abs;
  using std::erf;
  p.validate();
  const Scalar xi = (x - p.mu) / p.eta;
  if (abs(xi) > p.rho) return Scalar(0);
  const Scalar mass = erf(p.rho / Scalar(std::numbers::sqrt2));
  return std_normal_pdf(xi) / (p.eta * mass);
}

template <class Scalar>
Scalar sdtn_cdf(const Scalar& x, const SdtnParams<Scalar>& p) {
  using std::erf;
  p.validate();
  const Scalar xi = (x - p.mu) / p.eta;
  if (xi <= -p.rho) return Scalar(0);
  if (xi >= p.rho) return Scalar(1);
  const Scalar s = Scalar(std::numbers::sqrt2);
  return (erf(xi / s) + erf(p.rho / s)) / (Scalar(2) * erf(p.rho / s));
}

/// Inverse CDF: mu + eta * Phi^-1(Phi(-rho) + u (2 Phi(rho) - 1)), clamped
/// to the support.
inline double sdtn_quantile(double u, const SdtnParams<double>& p) {
  p.validate();
  const double lo_tail = std_normal_cdf(-p.rho);
  const double mass = std::erf(p.rho / std::numbers::sqrt2);
  double xi = std_normal_quantile(lo_tail + u * mass);
  if (xi < -p.rho) xi = -p.rho;
  if (xi > p.rho) xi = p.rho;
  return p.mu + p.eta * xi;
}

/// `count` i.i.d. draws by inverse CDF; deterministic given `seed`.
VectorXd sdtn_sample(const SdtnParams<double>& p, Index count,
                     std::uint64_t seed);

/// Law of k0 + k1 * x for x ~ p. Shifts by mu first, so any mu is accepted.
template <class Scalar>
SdtnParams<Scalar> sdtn_linear_transform(const SdtnParams<Scalar>& p,
                                         const Scalar& k0, const Scalar& k1) {
  using std::abs;
  p.validate();
  if (k1 == Scalar(0)) throw DomainError("linear transform needs k1 != 0");
  return {k0 + k1 * p.mu, abs(k1) * p.eta, p.rho};
}

/// Per draw (row of `samples`), sum_i w_i (x_i - mu_i) / t_n with
/// t_n^2 = sum_i w_i^2 Var[x_i]. Empty `weights` means all ones.
VectorXd standardized_sum(std::span<const SdtnParams<double>> laws,
                          const MatrixXd& samples,
                          std::span<const double> weights = {});

}  // namespace cslme
