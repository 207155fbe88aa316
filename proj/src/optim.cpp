//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "cslme/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace cslme {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Counted {
  const Objective& f;
  int evaluations = 0;

  double operator()(const VectorXd& x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  }
};

double projected_gradient_norm(const VectorXd& x, const VectorXd& g,
                               const BoxBounds& box) {
  return (box.project(x - g) - x).cwiseAbs().maxCoeff();
}

// Coordinates held at a bound because the gradient points out of the box.
std::vector<bool> active_set(const VectorXd& x, const VectorXd& g,
                             const BoxBounds& box) {
  std::vector<bool> active(static_cast<std::size_t>(x.size()), false);
  for (Index i = 0; i < x.size(); ++i) {
    const bool at_lower = x[i] <= box.lower[i] && g[i] > 0.0;
    const bool at_upper = x[i] >= box.upper[i] && g[i] < 0.0;
    active[static_cast<std::size_t>(i)] = at_lower || at_upper;
  }
  return active;
}

struct Pair {
  VectorXd s;
  VectorXd y;
  double rho;
};

VectorXd two_loop(const VectorXd& g, const std::deque<Pair>& mem,
                  const std::vector<bool>& active) {
  auto mask = [&](VectorXd v) {
    for (Index i = 0; i < v.size(); ++i)
      if (active[static_cast<std::size_t>(i)]) v[i] = 0.0;
    return v;
  };
  VectorXd q = mask(g);
  std::vector<double> alpha(mem.size());
  for (std::size_t j = mem.size(); j-- > 0;) {
    const VectorXd s = mask(mem[j].s);
    alpha[j] = mem[j].rho * s.dot(q);
    q -= alpha[j] * mask(mem[j].y);
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t j = 0; j < mem.size(); ++j) {
    const double b = mem[j].rho * mask(mem[j].y).dot(q);
    q += (alpha[j] - b) * mask(mem[j].s);
  }
  return -mask(q);
}

}  // namespace

BoxBounds BoxBounds::unbounded(Index n) {
  return {VectorXd::Constant(n, -kInf), VectorXd::Constant(n, kInf)};
}

VectorXd BoxBounds::project(const VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::kGradientTolerance: return "gradient_tolerance";
    case StopReason::kObjectiveTolerance: return "objective_tolerance";
    case StopReason::kMaxIterations: return "max_iterations";
    case StopReason::kLineSearchStalled: return "line_search_stalled";
  }
  return "unknown";
}

VectorXd numerical_gradient(const Objective& f, const VectorXd& x, double f0,
                            const BoxBounds& box) {
  VectorXd g(x.size());
  VectorXd probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = std::max(1e-6, 1e-7 * std::abs(x[i]));
    const double xi = x[i];
    if (xi - h >= box.lower[i] && xi + h <= box.upper[i]) {
      probe[i] = xi + h;
      const double fp = f(probe);
      probe[i] = xi - h;
      const double fm = f(probe);
      g[i] = (fp - fm) / (2.0 * h);
    } else {
      const double dir = (xi + 2.0 * h <= box.upper[i]) ? 1.0 : -1.0;
      probe[i] = xi + dir * h;
      const double f1 = f(probe);
      probe[i] = xi + dir * 2.0 * h;
      const double f2 = f(probe);
      g[i] = dir * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h);
    }
    probe[i] = xi;
  }
  return g;
}

OptimResult minimize_box(const Objective& f, const VectorXd& x0,
                         const BoxBounds& box, const OptimOptions& opts) {
  if (box.lower.size() != x0.size() || box.upper.size() != x0.size())
    throw DimensionError("bounds must match the parameter dimension");
  if ((box.lower.array() > box.upper.array()).any())
    throw DomainError("lower bound exceeds upper bound");

  Counted obj{f};
  OptimResult res;
  VectorXd x = box.project(x0);
  double fx = obj(x);
  if (!std::isfinite(fx))
    throw DomainError("objective is not finite at the starting point");
  VectorXd g = numerical_gradient(std::ref(obj), x, fx, box);
  res.trace.push_back(fx);

  std::deque<Pair> mem;
  constexpr double c1 = 1e-4;
  constexpr int max_backtracks = 50;

  for (int iter = 0;; ++iter) {
    res.projected_gradient = projected_gradient_norm(x, g, box);
    if (res.projected_gradient < opts.tol_grad) {
      res.reason = StopReason::kGradientTolerance;
      res.converged = true;
      break;
    }
    if (iter >= opts.max_iter) {
      res.reason = StopReason::kMaxIterations;
      break;
    }

    const auto active = active_set(x, g, box);
    VectorXd d = two_loop(g, mem, active);
    if (mem.empty() || !(g.dot(d) < 0.0)) {
      mem.clear();
      d = two_loop(g, mem, active);
      const double gn = d.norm();
      if (gn > 1.0) d /= gn;
    }

    double t = 1.0;
    VectorXd x_new;
    double f_new = kInf;
    bool accepted = false;
    for (int bt = 0; bt < max_backtracks; ++bt) {
      x_new = box.project(x + t * d);
      f_new = obj(x_new);
      if (f_new <= fx + c1 * g.dot(x_new - x) && f_new <= fx) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted || (x_new - x).cwiseAbs().maxCoeff() == 0.0) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      res.reason = StopReason::kLineSearchStalled;
      res.converged =
          res.projected_gradient < 1e-4 * (1.0 + std::abs(fx));
      break;
    }

    const VectorXd g_new = numerical_gradient(std::ref(obj), x_new, f_new, box);
    Pair pr{x_new - x, g_new - g, 0.0};
    const double sy = pr.s.dot(pr.y);
    if (sy > 1e-12 * pr.s.norm() * pr.y.norm()) {
      pr.rho = 1.0 / sy;
      mem.push_back(std::move(pr));
      if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
    }

    const double df = fx - f_new;
    x = x_new;
    fx = f_new;
    g = g_new;
    res.trace.push_back(fx);
    res.iterations = iter + 1;
    if (df < opts.tol_obj * (1.0 + std::abs(fx))) {
      res.projected_gradient = projected_gradient_norm(x, g, box);
      res.reason = StopReason::kObjectiveTolerance;
      res.converged = true;
      break;
    }
  }

  res.x = x;
  res.f = fx;
  res.evaluations = obj.evaluations;
  return res;
}

}  // namespace cslme
