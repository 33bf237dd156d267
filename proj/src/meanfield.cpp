#include "mfinfo/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfinfo {

namespace {

// Picard iterations before switching to safeguarded Newton steps on
// V(q) - q. Near-critical points (V'(q*) -> 1) converge sublinearly under
// plain Picard, e.g. q_n ~ 1/(2n) for tanh at sigma_w = 1.
constexpr int kPicardBudget = 200;
constexpr double kDivergenceCeiling = 1e200;

}  // namespace

void validate(const PhasePoint& point) {
  if (!std::isfinite(point.sigma_w) || !(point.sigma_w > 0.0)) {
    std::ostringstream os;
    os << "sigma_w must be finite and positive, got " << point.sigma_w;
    throw ConfigError(os.str());
  }
  if (!std::isfinite(point.sigma_b) || point.sigma_b < 0.0) {
    std::ostringstream os;
    os << "sigma_b must be finite and nonnegative, got " << point.sigma_b;
    throw ConfigError(os.str());
  }
}

const QuadratureRule& default_rule() {
  static const std::shared_ptr<const QuadratureRule> rule =
      gauss_hermite_rule(kDefaultQuadratureOrder);
  return *rule;
}

double variance_map(double q, const PhasePoint& point, const Activation& act,
                    const QuadratureRule& rule) {
  if (!(q >= 0.0)) throw Error(ErrorCode::invalid_argument, "variance must be nonnegative");
  const double s = std::sqrt(q);
  const double second = integrate_refined(
      [&](double x) {
        const double v = act.eval(s * x);
        return v * v;
      },
      rule).value;
  return point.sigma_w * point.sigma_w * second + point.sigma_b * point.sigma_b;
}

double variance_map_slope(double q, const PhasePoint& point, const Activation& act,
                          const QuadratureRule& rule) {
  const double w2 = point.sigma_w * point.sigma_w;
  if (q <= 0.0) {
    const double d0 = act.deriv_at_zero();
    return w2 * d0 * d0;
  }
  const double s = std::sqrt(q);
  const double integral = integrate_refined(
      [&](double x) { return act.eval(s * x) * act.deriv(s * x) * x / s; }, rule).value;
  return w2 * integral;
}

FixedPointResult solve_fixed_point(const PhasePoint& point, const Activation& act,
                                   const FixedPointOptions& options,
                                   const QuadratureRule& rule) {
  validate(point);
  if (!(options.q0 >= 0.0) || !std::isfinite(options.q0))
    throw Error(ErrorCode::invalid_argument, "initial variance must be finite and nonnegative");
  if (!(options.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "tolerance must be positive");

  const double floor = point.sigma_b * point.sigma_b;
  FixedPointResult result;
  double q = options.q0;
  double prev_step = 0.0;
  double prev_delta = 0.0;
  int sign_flips = 0;

  for (int it = 1; it <= options.max_iter; ++it) {
    result.iterations = it;
    const double mapped = variance_map(q, point, act, rule);
    const double step = mapped - q;
    double next = mapped;

    if (it > kPicardBudget) {
      const double slope = variance_map_slope(q, point, act, rule) - 1.0;
      if (slope < 0.0) {
        next = q - step / slope;
        if (next < floor) next = floor + 0.5 * (q - floor);
      }
    } else if (result.damped) {
      next = q + 0.5 * step;
    }

    if (step * prev_step < 0.0) {
      if (++sign_flips >= 2) result.damped = true;
    } else {
      sign_flips = 0;
    }
    prev_step = step;

    if (!std::isfinite(next) || next > kDivergenceCeiling) {
      result.q_star = q;
      result.residual = std::abs(step);
      return result;
    }
    // Besides a small step, require the geometric tail implied by the
    // observed contraction rate to be small, so slowly contracting maps do
    // not stop far from q*.
    const double delta = std::abs(next - q);
    const double ratio = prev_delta > 0.0 ? delta / prev_delta : 1.0;
    const double remaining = ratio < 1.0 ? delta * ratio / (1.0 - ratio) : delta;
    prev_delta = delta;
    q = next;
    if (delta < options.tol && remaining < options.tol) {
      result.converged = true;
      break;
    }
  }

  result.q_star = q;
  result.residual = std::abs(variance_map(q, point, act, rule) - q);
  return result;
}

double fixed_point_variance(const PhasePoint& point, const Activation& act,
                            const QuadratureRule& rule) {
  const FixedPointResult fp = solve_fixed_point(point, act, {}, rule);
  if (!fp.converged) {
    std::ostringstream os;
    os << "variance map did not converge at (sigma_w=" << point.sigma_w
       << ", sigma_b=" << point.sigma_b << ") after " << fp.iterations
       << " iterations, residual " << fp.residual;
    throw Error(ErrorCode::convergence, os.str());
  }
  return fp.q_star;
}

double correlation_map(double c, double q_star, const PhasePoint& point, const Activation& act,
                       const QuadratureRule& rule) {
  validate(point);
  if (!(std::abs(c) <= 1.0)) throw Error(ErrorCode::invalid_argument, "correlation must lie in [-1, 1]");
  if (!(q_star >= kQFloor))
    throw DegenerateError("correlation is undefined at the trivial fixed point q* = 0");

  const double s = std::sqrt(q_star);
  const double orth = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double cross = integrate_refined_2d(
      [&](double x, double y) { return act.eval(s * x) * act.eval(s * (c * x + orth * y)); },
      rule).value;
  const double value =
      (point.sigma_w * point.sigma_w * cross + point.sigma_b * point.sigma_b) / q_star;
  if (!(std::abs(value) <= 1.0 + 1e-8)) {
    std::ostringstream os;
    os << "correlation map left [-1, 1]: " << value << " (is q_star a converged fixed point?)";
    throw EvaluationError(os.str());
  }
  return std::clamp(value, -1.0, 1.0);
}

double slope_zeta_at(double q_star, double sigma_w, const Activation& act,
                     const QuadratureRule& rule) {
  const double s = std::sqrt(std::max(0.0, q_star));
  const double mean_sq_slope = integrate_refined(
      [&](double x) {
        const double d = act.deriv(s * x);
        return d * d;
      },
      rule).value;
  return sigma_w * sigma_w * mean_sq_slope;
}

double slope_zeta(const PhasePoint& point, const Activation& act, const QuadratureRule& rule) {
  return slope_zeta_at(fixed_point_variance(point, act, rule), point.sigma_w, act, rule);
}

double beta_at(double q_star, double sigma_w, const Activation& act, const QuadratureRule& rule) {
  if (q_star < kQFloor) return sigma_w * act.deriv_at_zero();
  const double s = std::sqrt(q_star);
  const double integral =
      integrate_refined([&](double z) { return act.eval(s * z) * z; }, rule).value;
  return sigma_w * integral / s;
}

double beta(const PhasePoint& point, const Activation& act, const QuadratureRule& rule) {
  return beta_at(fixed_point_variance(point, act, rule), point.sigma_w, act, rule);
}

EocCurve eoc_curve(const Activation& act, std::span<const double> sigma_w_grid,
                   double sigma_b_max, double tol, const QuadratureRule& rule) {
  if (!(sigma_b_max > 0.0) || !std::isfinite(sigma_b_max))
    throw ConfigError("sigma_b_max must be finite and positive");
  if (!(tol > 0.0)) throw Error(ErrorCode::invalid_argument, "tolerance must be positive");

  EocCurve curve;
  for (const double sw : sigma_w_grid) {
    auto excess = [&](double sb) { return slope_zeta(PhasePoint{sw, sb}, act, rule) - 1.0; };
    try {
      validate(PhasePoint{sw, 0.0});
      double lo = 0.0;
      double hi = sigma_b_max;
      double f_lo = excess(lo);
      if (std::abs(f_lo) <= tol) {
        curve.points.push_back({sw, lo});
        continue;
      }
      double f_hi = excess(hi);
      if (std::abs(f_hi) <= tol) {
        curve.points.push_back({sw, hi});
        continue;
      }
      if ((f_lo > 0.0) == (f_hi > 0.0)) {
        curve.omitted.push_back({sw, "no sign change of zeta - 1 on [0, sigma_b_max]"});
        continue;
      }
      double mid = 0.5 * (lo + hi);
      double f_mid = excess(mid);
      for (int it = 0; it < kEocMaxBisections && hi - lo > 1e-15; ++it) {
        mid = 0.5 * (lo + hi);
        f_mid = excess(mid);
        if (f_mid == 0.0) break;
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
          lo = mid;
          f_lo = f_mid;
        } else {
          hi = mid;
        }
      }
      if (std::abs(f_mid) <= tol) {
        curve.points.push_back({sw, mid});
      } else {
        std::ostringstream os;
        os << "bisection stalled with |zeta - 1| = " << std::abs(f_mid);
        curve.omitted.push_back({sw, os.str()});
      }
    } catch (const Error& e) {
      curve.omitted.push_back({sw, e.what()});
    }
  }
  return curve;
}

PhasePoint di_point(const Activation& act) {
  const double d0 = act.deriv_at_zero();
  if (!(d0 > 0.0)) throw DegenerateError("psi'(0) = 0: no dynamic-isometry point exists");
  return PhasePoint{1.0 / d0, 0.0};
}

}  // namespace mfinfo
