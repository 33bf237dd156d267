#include "mfinfo/pathology.hpp"

#include <cmath>
#include <sstream>

namespace mfinfo {

namespace {

double gaussian_first_moment(double s, const Activation& act, const QuadratureRule& rule) {
  return integrate_refined([&](double z) { return act.eval(s * z) * z; }, rule).value;
}

double gaussian_second_moment(double s, const Activation& act, const QuadratureRule& rule) {
  return integrate_refined(
      [&](double z) {
        const double v = act.eval(s * z);
        return v * v;
      },
      rule).value;
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Eigen::MatrixXd w(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = scale * rng.gaussian();
  return w;
}

double sample_variance(const std::vector<double>& xs, double* mean_out) {
  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= n;
  double ss = 0.0;
  for (const double x : xs) ss += (x - mean) * (x - mean);
  if (mean_out) *mean_out = mean;
  return xs.size() > 1 ? ss / (n - 1.0) : 0.0;
}

}  // namespace

Eigen::MatrixXd first_layer_correlation(const Eigen::MatrixXd& w1, const Activation& act,
                                        const Eigen::VectorXd& input_vars,
                                        CorrelationNormalization norm, const QuadratureRule& rule) {
  if (input_vars.size() != w1.cols()) {
    std::ostringstream os;
    os << "expected " << w1.cols() << " input variances, got " << input_vars.size();
    throw ConfigError(os.str());
  }
  const Eigen::Index n0 = w1.cols();
  Eigen::VectorXd numer(n0), second(n0);
  for (Eigen::Index i = 0; i < n0; ++i) {
    if (!(input_vars(i) > 0.0) || !std::isfinite(input_vars(i)))
      throw ConfigError("input variances must be finite and positive");
    const double s = std::sqrt(input_vars(i));
    numer(i) = gaussian_first_moment(s, act, rule);
    second(i) = gaussian_second_moment(s, act, rule);
  }

  const Eigen::VectorXd power = w1.cwiseAbs2() * second;  // per unit j
  Eigen::MatrixXd c(n0, w1.rows());
  for (Eigen::Index j = 0; j < w1.rows(); ++j) {
    if (!(power(j) > 0.0)) {
      std::ostringstream os;
      os << "unit " << j << " has a zero denominator (all-zero weight row)";
      throw DegenerateError(os.str());
    }
    const double denom =
        norm == CorrelationNormalization::standard_deviation ? std::sqrt(power(j)) : power(j);
    for (Eigen::Index i = 0; i < n0; ++i) c(i, j) = w1(j, i) * numer(i) / denom;
  }
  return c;
}

Eigen::MatrixXd first_layer_correlation(const NetworkRealization& net, const Activation& act,
                                        const Eigen::VectorXd& input_vars,
                                        CorrelationNormalization norm, const QuadratureRule& rule) {
  if (net.weights.empty()) throw ConfigError("network has no layers");
  return first_layer_correlation(net.weights.front(), act, input_vars, norm, rule);
}

CorrelationVariance correlation_variance_mc(int n0, int width, const PhasePoint& point,
                                            const Activation& act, int trials, std::uint64_t seed,
                                            double input_var, CorrelationNormalization norm,
                                            const QuadratureRule& rule) {
  if (trials < kMinPathologyTrials) {
    std::ostringstream os;
    os << "trials must be at least " << kMinPathologyTrials << ", got " << trials;
    throw ConfigError(os.str());
  }
  if (n0 < 1 || width < 1) throw ConfigError("n0 and width must be at least 1");
  validate(point);

  const double s = std::sqrt(input_var);
  const double numer = gaussian_first_moment(s, act, rule);
  const double second = gaussian_second_moment(s, act, rule);
  const double scale = point.sigma_w / std::sqrt(static_cast<double>(n0));

  CorrelationVariance out;
  out.samples.reserve(static_cast<std::size_t>(trials));
  int above = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, Stream::trial, static_cast<std::uint64_t>(t)));
    const Eigen::MatrixXd w = gaussian_matrix(width, n0, scale, rng);
    const double power = w.row(0).squaredNorm() * second;
    if (!(power > 0.0)) throw DegenerateError("zero denominator in first-layer correlation");
    const double denom = norm == CorrelationNormalization::standard_deviation ? std::sqrt(power) : power;
    const double c = w(0, 0) * numer / denom;
    if (std::abs(c) > 1.0) ++above;
    out.samples.push_back(c);
  }
  out.variance = sample_variance(out.samples, &out.mean);
  out.fraction_above_one = static_cast<double>(above) / trials;
  return out;
}

std::vector<double> correlation_variance_recursion(double v1, const PhasePoint& point,
                                                   const Activation& act, int depth,
                                                   const QuadratureRule& rule) {
  if (!(v1 > 0.0)) throw ConfigError("initial variance must be positive");
  if (depth < 1) throw ConfigError("depth must be at least 1");
  const double q_star = fixed_point_variance(point, act, rule);
  if (q_star < kQFloor) throw DegenerateError("fixed point is degenerate (q* = 0)");
  const double m = gaussian_first_moment(std::sqrt(q_star), act, rule);
  const double coef = point.sigma_w * point.sigma_w * m * m / q_star;

  std::vector<double> out(static_cast<std::size_t>(depth));
  out[0] = v1;
  for (int l = 1; l < depth; ++l) out[l] = out[l - 1] * coef;
  return out;
}

std::vector<double> correlation_depth_mc(int n0, int width, const PhasePoint& point,
                                         const Activation& act, int depth, int trials,
                                         std::uint64_t seed, double input_var,
                                         const QuadratureRule& rule) {
  if (trials < kMinPathologyTrials) {
    std::ostringstream os;
    os << "trials must be at least " << kMinPathologyTrials << ", got " << trials;
    throw ConfigError(os.str());
  }
  if (n0 < 1 || width < 1 || depth < 1) throw ConfigError("n0, width and depth must be at least 1");
  validate(point);
  const double q_star = fixed_point_variance(point, act, rule);
  if (q_star < kQFloor) throw DegenerateError("fixed point is degenerate (q* = 0)");

  const double s_in = std::sqrt(input_var);
  const double numer_in = gaussian_first_moment(s_in, act, rule);
  const double second_in = gaussian_second_moment(s_in, act, rule);
  const double s_star = std::sqrt(q_star);
  const double numer = gaussian_first_moment(s_star, act, rule);
  const double alpha = gaussian_second_moment(s_star, act, rule);

  std::vector<std::vector<double>> per_layer(static_cast<std::size_t>(depth));
  for (auto& v : per_layer) v.reserve(static_cast<std::size_t>(trials));

  for (int t = 0; t < trials; ++t) {
    const std::uint64_t tseed = derive_seed(seed, Stream::trial, static_cast<std::uint64_t>(t));
    Rng rng0(derive_seed(tseed, Stream::weights, 0));
    const Eigen::MatrixXd w1 =
        gaussian_matrix(width, n0, point.sigma_w / std::sqrt(static_cast<double>(n0)), rng0);
    Eigen::VectorXd c(width);
    for (Eigen::Index j = 0; j < width; ++j) {
      const double power = w1.row(j).squaredNorm() * second_in;
      c(j) = w1(j, 0) * numer_in / std::sqrt(power);
    }
    per_layer[0].push_back(c(0));

    const double scale = point.sigma_w / std::sqrt(static_cast<double>(width));
    for (int l = 1; l < depth; ++l) {
      Rng rng(derive_seed(tseed, Stream::weights, static_cast<std::uint64_t>(l)));
      const Eigen::MatrixXd w = gaussian_matrix(width, width, scale, rng);
      const Eigen::VectorXd sigma = (alpha * w.rowwise().squaredNorm()).cwiseSqrt();
      c = (numer * (w * c)).cwiseQuotient(sigma);
      per_layer[l].push_back(c(0));
    }
  }

  std::vector<double> out;
  out.reserve(per_layer.size());
  for (const auto& v : per_layer) out.push_back(sample_variance(v, nullptr));
  return out;
}

}  // namespace mfinfo
