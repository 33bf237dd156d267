#pragma once

#include <span>
#include <string>
#include <vector>

#include "mfinfo/activation.hpp"
#include "mfinfo/quadrature.hpp"

namespace mfinfo {

/// Below this variance the fixed point is the degenerate sigma* = 0 state.
inline constexpr double kQFloor = 1e-10;

/// Initialization hyperparameters: weight scale and bias standard deviation.
struct PhasePoint {
  double sigma_w = 1.0;
  double sigma_b = 0.0;

  friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

/// Throws ConfigError unless sigma_w > 0 and sigma_b >= 0 are finite.
void validate(const PhasePoint& point);

struct FixedPointOptions {
  double q0 = 1.0;
  double tol = 1e-12;
  int max_iter = 10000;
};

struct FixedPointResult {
  double q_star = 0.0;  // fixed-point variance (sigma*)^2
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;  // |V(q_star) - q_star|
  bool damped = false;    // damping was engaged after oscillation
};

const QuadratureRule& default_rule();

/// One step of the variance recursion:
/// sigma_w^2 * E[psi(sqrt(q) Z)^2] + sigma_b^2. All maps use variances q.
double variance_map(double q, const PhasePoint& point, const Activation& act,
                    const QuadratureRule& rule = default_rule());

/// Derivative of variance_map with respect to q.
double variance_map_slope(double q, const PhasePoint& point, const Activation& act,
                          const QuadratureRule& rule = default_rule());

/// Iterates the variance map to its stable fixed point. Non-convergence is
/// reported through `converged`, never thrown.
FixedPointResult solve_fixed_point(const PhasePoint& point, const Activation& act,
                                   const FixedPointOptions& options = {},
                                   const QuadratureRule& rule = default_rule());

/// As solve_fixed_point, but throws a convergence Error instead of returning
/// an unconverged result.
double fixed_point_variance(const PhasePoint& point, const Activation& act,
                            const QuadratureRule& rule = default_rule());

/// Correlation recursion at the fixed point q_star:
/// (sigma_w^2 E[psi(s x) psi(s (c x + sqrt(1-c^2) y))] + sigma_b^2) / q_star,
/// with s = sqrt(q_star). Throws DegenerateError if q_star < kQFloor.
double correlation_map(double c, double q_star, const PhasePoint& point, const Activation& act,
                       const QuadratureRule& rule = default_rule());

/// Slope of the correlation map at c = 1: sigma_w^2 E[psi'(sigma* Z)^2].
double slope_zeta(const PhasePoint& point, const Activation& act,
                  const QuadratureRule& rule = default_rule());
double slope_zeta_at(double q_star, double sigma_w, const Activation& act,
                     const QuadratureRule& rule = default_rule());

/// Input-to-layer correlation transfer coefficient
/// sigma_w * E[psi(sigma* Z) Z] / sigma*; equals sigma_w * psi'(0) when
/// q_star < kQFloor.
double beta(const PhasePoint& point, const Activation& act,
            const QuadratureRule& rule = default_rule());
double beta_at(double q_star, double sigma_w, const Activation& act,
               const QuadratureRule& rule = default_rule());

struct EocOmission {
  double sigma_w;
  std::string reason;
};

struct EocCurve {
  std::vector<PhasePoint> points;  // in grid order
  std::vector<EocOmission> omitted;
};

inline constexpr double kDefaultEocSigmaBMax = 2.0;
inline constexpr int kEocMaxBisections = 200;

/// Traces zeta(sigma_w, sigma_b) = 1 by bisection on sigma_b in
/// [0, sigma_b_max] for every sigma_w of the grid. Grid values with no
/// bracketed root are listed in `omitted`.
EocCurve eoc_curve(const Activation& act, std::span<const double> sigma_w_grid,
                   double sigma_b_max = kDefaultEocSigmaBMax, double tol = 1e-10,
                   const QuadratureRule& rule = default_rule());

/// Dynamic-isometry point (1 / psi'(0), 0).
PhasePoint di_point(const Activation& act);

}  // namespace mfinfo
