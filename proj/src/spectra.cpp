#include "mfinfo/spectra.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

namespace mfinfo {

double mu_tilde_at(int k, double q_star, const Activation& act, const QuadratureRule& rule) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "mu_tilde order k must be positive");
  // Below the floor the fixed point is the degenerate state q* = 0.
  const double s = q_star < kQFloor ? 0.0 : std::sqrt(q_star);
  return integrate_refined([&](double z) { return std::pow(act.deriv(s * z), 2 * k); }, rule)
      .value;
}

double mu_tilde(int k, const PhasePoint& point, const Activation& act, const QuadratureRule& rule) {
  return mu_tilde_at(k, fixed_point_variance(point, act, rule), act, rule);
}

double s1_coefficient(InitKind init) noexcept {
  return init == InitKind::orthogonal ? 0.0 : -1.0;
}

SpectrumMoments jacobian_moments(const PhasePoint& point, const Activation& act, int depth,
                                 InitKind init, const QuadratureRule& rule) {
  if (depth < 1) throw ConfigError("depth must be at least 1");
  const double q_star = fixed_point_variance(point, act, rule);

  SpectrumMoments out;
  out.depth = depth;
  out.mu1 = mu_tilde_at(1, q_star, act, rule);
  out.mu2 = mu_tilde_at(2, q_star, act, rule);
  out.s1 = s1_coefficient(init);

  const double l = depth;
  const double gain = point.sigma_w * point.sigma_w * out.mu1;
  out.m1 = std::pow(gain, l);
  if (out.mu1 > 0.0) {
    out.m2 = std::pow(gain, 2.0 * l) * (out.mu2 / (out.mu1 * out.mu1) + 1.0 / l - 1.0 - out.s1) * l;
  }
  return out;
}

Eigen::MatrixXd empirical_jacobian(const NetworkRealization& net, const Eigen::VectorXd& input,
                                   const Activation& act) {
  if (net.weights.empty()) throw ConfigError("network has no layers");
  if (input.size() != net.weights.front().cols()) {
    std::ostringstream os;
    os << "input has length " << input.size() << ", network expects " << net.weights.front().cols();
    throw ConfigError(os.str());
  }

  Eigen::VectorXd pre = input;
  Eigen::MatrixXd jac;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const Eigen::MatrixXd& w = net.weights[l];
    if (l == 0) {
      pre = w * pre + net.biases[l];
    } else {
      pre = w * pre.unaryExpr([&](double z) { return act.eval(z); }) + net.biases[l];
    }
    if (!pre.allFinite()) throw EvaluationError("non-finite pre-activation in Jacobian forward pass");
    const Eigen::VectorXd d = pre.unaryExpr([&](double z) { return act.deriv(z); });
    if (l == 0) {
      jac = d.asDiagonal() * w;
    } else {
      jac = d.asDiagonal() * (w * jac);
    }
  }
  return jac;
}

Eigen::VectorXd empirical_jacobian_spectrum(const NetworkRealization& net,
                                            const Eigen::VectorXd& input, const Activation& act) {
  const Eigen::MatrixXd jac = empirical_jacobian(net, input, act);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(jac);
  return svd.singularValues();
}

EmpiricalMoments empirical_jacobian_moments(const NetworkRealization& net,
                                            const Eigen::VectorXd& input, const Activation& act) {
  const Eigen::MatrixXd jac = empirical_jacobian(net, input, act);
  const double n0 = static_cast<double>(jac.cols());
  Eigen::MatrixXd h(jac.cols(), jac.cols());
  h.setZero();
  h.selfadjointView<Eigen::Lower>().rankUpdate(jac.transpose());
  h = h.selfadjointView<Eigen::Lower>();
  EmpiricalMoments out;
  out.m1 = h.trace() / n0;
  out.m2 = h.squaredNorm() / n0;
  return out;
}

MomentEstimate sample_jacobian_moments(const PhasePoint& point, const Activation& act, int depth,
                                       int width, InitKind init, int realizations,
                                       std::uint64_t seed, const QuadratureRule& rule) {
  if (realizations < 2) throw ConfigError("need at least 2 realizations for a standard error");
  const StableVariance sv = stable_input_variance(point, act, rule);
  const double scale = sv.floored ? 0.0 : std::sqrt(sv.variance);

  double s1 = 0.0, s1sq = 0.0, s2 = 0.0, s2sq = 0.0;
  for (int r = 0; r < realizations; ++r) {
    const std::uint64_t rseed = derive_seed(seed, Stream::repetition, static_cast<std::uint64_t>(r));
    const NetworkRealization net =
        init_network(NetworkConfig::uniform(depth, width, width, point, init, rseed));
    Rng rng(derive_seed(rseed, Stream::inputs));
    Eigen::VectorXd x(width);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = scale * rng.gaussian();
    const EmpiricalMoments m = empirical_jacobian_moments(net, x, act);
    s1 += m.m1;
    s1sq += m.m1 * m.m1;
    s2 += m.m2;
    s2sq += m.m2 * m.m2;
  }

  const double n = realizations;
  auto stderr_of = [n](double sum, double sumsq) {
    const double mean = sum / n;
    const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0));
    return std::sqrt(var / n);
  };
  MomentEstimate out;
  out.realizations = realizations;
  out.m1_mean = s1 / n;
  out.m1_stderr = stderr_of(s1, s1sq);
  out.m2_mean = s2 / n;
  out.m2_stderr = stderr_of(s2, s2sq);
  return out;
}

}  // namespace mfinfo
