#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <vector>

#include "mfinfo/error.hpp"

namespace mfinfo {

inline constexpr int kDefaultQuadratureOrder = 128;

/// Gauss–Hermite rule targeting the standard normal measure Dz directly:
/// sum_i weights[i] * f(nodes[i]) approximates E[f(Z)], Z ~ N(0, 1).
struct QuadratureRule {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive, sum to one

  int order() const noexcept { return static_cast<int>(nodes.size()); }
};

/// Builds a rule from the eigen-decomposition of the Hermite Jacobi matrix.
QuadratureRule make_gauss_hermite_rule(int order);

/// Process-wide cached rule; safe to call concurrently.
std::shared_ptr<const QuadratureRule> gauss_hermite_rule(int order = kDefaultQuadratureOrder);

namespace detail {
[[noreturn]] void throw_non_finite(double value, double x);
[[noreturn]] void throw_non_finite(double value, double x, double y);
}  // namespace detail

template <class F>
double gauss_integrate(F&& f, const QuadratureRule& rule) {
  double sum = 0.0;
  const std::size_t n = rule.nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = f(rule.nodes[i]);
    if (!std::isfinite(v)) detail::throw_non_finite(v, rule.nodes[i]);
    sum += rule.weights[i] * v;
  }
  return sum;
}

/// Tensor-product rule for E[f(X, Y)] with X, Y independent standard normals.
template <class F>
double gauss_integrate_2d(F&& f, const QuadratureRule& rule) {
  double sum = 0.0;
  const std::size_t n = rule.nodes.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rule.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = f(x, rule.nodes[j]);
      if (!std::isfinite(v)) detail::throw_non_finite(v, x, rule.nodes[j]);
      inner += rule.weights[j] * v;
    }
    sum += rule.weights[i] * inner;
  }
  return sum;
}

/// |I(order) - I(2 order)|, the accuracy estimate reported for an integrand.
template <class F>
double refinement_error(F&& f, int order) {
  const double coarse = gauss_integrate(f, *gauss_hermite_rule(order));
  const double fine = gauss_integrate(f, *gauss_hermite_rule(2 * order));
  return std::abs(coarse - fine);
}

inline constexpr double kRefinementTolerance = 1e-9;
inline constexpr int kMaxRefinedOrder = 4096;
inline constexpr int kMaxRefinedOrder2d = 1024;

struct RefinedIntegral {
  double value = 0.0;
  double error = 0.0;  // |I(n) - I(2n)| at the returned order
  int order = 0;       // order of the rule that produced `value`
};

/// Starts at `rule` and doubles the order until successive estimates agree
/// within `tol` (or max_order is reached). Tanh-type integrands with a wide
/// argument have poles close to the real axis and need far more nodes than
/// a narrow one, so a fixed order is not enough across the phase plane.
template <class F>
RefinedIntegral integrate_refined(F&& f, const QuadratureRule& rule,
                                  double tol = kRefinementTolerance,
                                  int max_order = kMaxRefinedOrder) {
  RefinedIntegral out;
  double coarse = gauss_integrate(f, rule);
  int order = rule.order();
  while (true) {
    const int next = 2 * order;
    const double fine = gauss_integrate(f, *gauss_hermite_rule(next));
    out = {fine, std::abs(fine - coarse), next};
    if (out.error < tol || 2 * next > max_order) return out;
    coarse = fine;
    order = next;
  }
}

template <class F>
RefinedIntegral integrate_refined_2d(F&& f, const QuadratureRule& rule,
                                     double tol = kRefinementTolerance,
                                     int max_order = kMaxRefinedOrder2d) {
  RefinedIntegral out;
  double coarse = gauss_integrate_2d(f, rule);
  int order = rule.order();
  while (true) {
    const int next = 2 * order;
    const double fine = gauss_integrate_2d(f, *gauss_hermite_rule(next));
    out = {fine, std::abs(fine - coarse), next};
    if (out.error < tol || 2 * next > max_order) return out;
    coarse = fine;
    order = next;
  }
}

}  // namespace mfinfo
