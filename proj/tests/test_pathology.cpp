#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mfinfo/pathology.hpp"
#include "oracle.hpp"

using namespace mfinfo;

namespace {
const Activation kTanh = Activation::tanh();
const Activation kLinear = Activation::linear();
constexpr auto kVarianceNorm = CorrelationNormalization::variance;
}  // namespace

TEST_CASE("first-layer correlation closed forms") {
  const auto net = init_network(NetworkConfig::uniform(1, 5, 3, {1.1, 0.0}, InitKind::gaussian, 6));
  const Eigen::MatrixXd& w = net.weights[0];
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(5);

  const Eigen::MatrixXd var_form = first_layer_correlation(net, kLinear, ones, kVarianceNorm);
  const Eigen::MatrixXd sd_form = first_layer_correlation(net, kLinear, ones);
  REQUIRE(var_form.rows() == 5);
  REQUIRE(var_form.cols() == 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(var_form(i, j) - w(j, i) / w.row(j).squaredNorm()) <= 1e-13);
      CHECK(std::abs(sd_form(i, j) - w(j, i) / w.row(j).norm()) <= 1e-13);
    }

  // A single input: the weight scale enters through one power ratio only.
  const double m = oracle::simpson_gauss([](double z) { return std::tanh(z) * z; });
  const double alpha = oracle::frozen::kTanhSquared;
  for (const double w11 : {-2.0, -0.3, 0.7}) {
    const Eigen::MatrixXd w1 = Eigen::MatrixXd::Constant(1, 1, w11);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
    const double v = first_layer_correlation(w1, kTanh, one, kVarianceNorm)(0, 0);
    CHECK(std::abs(v - m / (w11 * alpha)) <= 1e-8);
    const double s = first_layer_correlation(w1, kTanh, one)(0, 0);
    CHECK(std::abs(s - std::copysign(1.0, w11) * m / std::sqrt(alpha)) <= 1e-8);
  }
}

TEST_CASE("first-layer correlation matches a sample correlation") {
  const int n0 = 16, width = 4, samples = 1000000;
  const auto net = init_network(NetworkConfig::uniform(1, n0, width, {1.2, 0.0}, InitKind::gaussian, 12));
  const Eigen::MatrixXd c = first_layer_correlation(net, kTanh, Eigen::VectorXd::Ones(n0));
  const Eigen::MatrixXd& w = net.weights[0];

  std::mt19937_64 gen(99);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd sxy = Eigen::MatrixXd::Zero(n0, width);
  Eigen::VectorXd sxx = Eigen::VectorXd::Zero(n0), syy = Eigen::VectorXd::Zero(width);
  Eigen::VectorXd x(n0);
  for (int t = 0; t < samples; ++t) {
    for (int i = 0; i < n0; ++i) x(i) = normal(gen);
    const Eigen::VectorXd y = w * x.array().tanh().matrix();
    sxy.noalias() += x * y.transpose();
    sxx += x.cwiseAbs2();
    syy += y.cwiseAbs2();
  }
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < width; ++j) {
      const double r = sxy(i, j) / std::sqrt(sxx(i) * syy(j));
      CHECK(std::abs(r - c(i, j)) <= 0.01);
    }
}

TEST_CASE("first-layer correlation errors") {
  Eigen::MatrixXd w = Eigen::MatrixXd::Ones(2, 3);
  w.row(1).setZero();
  CHECK_THROWS_AS(first_layer_correlation(w, kTanh, Eigen::VectorXd::Ones(3)), DegenerateError);
  CHECK_THROWS_AS(first_layer_correlation(Eigen::MatrixXd::Ones(2, 3), kTanh, Eigen::VectorXd::Ones(2)),
                  ConfigError);
  CHECK_THROWS_AS(first_layer_correlation(Eigen::MatrixXd::Ones(2, 3), kTanh, Eigen::VectorXd::Zero(3)),
                  ConfigError);
}

TEST_CASE("correlation_variance_mc") {
  CHECK_THROWS_AS(correlation_variance_mc(16, 64, {1.2, 0.0}, kTanh, 999, 1), ConfigError);

  const auto single = correlation_variance_mc(1, 8, {1.0, 0.0}, kLinear, 1000, 2, 1.0, kVarianceNorm);
  CHECK(single.variance > 0.0);
  CHECK(single.samples.size() == 1000);

  std::vector<double> variances;
  for (const int width : {64, 256, 1024}) {
    const auto v = correlation_variance_mc(16, width, {1.2, 0.0}, kTanh, 2000, 3);
    CHECK(v.variance > 0.0);
    CHECK(v.fraction_above_one >= 0.0);
    CHECK(v.fraction_above_one <= 1.0);
    variances.push_back(v.variance);
  }
  for (const double v : variances) {
    CHECK(v / variances[0] < 3.0);
    CHECK(variances[0] / v < 3.0);
  }

  // A true correlation never leaves [-1, 1]; the printed variance form does.
  CHECK(correlation_variance_mc(2, 8, {1.2, 0.0}, kTanh, 2000, 4).fraction_above_one == 0.0);
  CHECK(correlation_variance_mc(2, 8, {1.2, 0.0}, kTanh, 2000, 4, 1.0, kVarianceNorm)
            .fraction_above_one > 0.0);

  const auto a = correlation_variance_mc(16, 64, {1.2, 0.0}, kTanh, 1000, 5);
  const auto b = correlation_variance_mc(16, 64, {1.2, 0.0}, kTanh, 1000, 5);
  CHECK(a.samples == b.samples);
}

TEST_CASE("chi-square concentration of row norms") {
  const double sw = 1.2;
  for (const int fan_in : {64, 256, 1024}) {
    std::vector<double> norms;
    for (std::uint64_t s = 0; s < 40; ++s) {
      const auto net =
          init_network(NetworkConfig::uniform(1, fan_in, 64, {sw, 0.0}, InitKind::gaussian, 500 + s));
      for (Eigen::Index j = 0; j < 64; ++j)
        norms.push_back(net.weights[0].row(j).squaredNorm() / (sw * sw));
    }
    double mean = 0.0;
    for (const double x : norms) mean += x;
    mean /= norms.size();
    double var = 0.0;
    for (const double x : norms) var += (x - mean) * (x - mean);
    var /= norms.size() - 1.0;
    const double ratio = var / (2.0 / fan_in);
    CAPTURE(fan_in);
    CHECK(ratio > 1.0 / 1.5);
    CHECK(ratio < 1.5);
  }
}

TEST_CASE("correlation variance recursion") {
  const PhasePoint p{1.5, 0.05};
  const auto traj = correlation_variance_recursion(0.3, p, kTanh, 20);
  REQUIRE(traj.size() == 20);
  const double b = beta(p, kTanh);
  for (std::size_t l = 0; l < traj.size(); ++l) {
    CHECK(std::abs(traj[l] - 0.3 * std::pow(b * b, static_cast<double>(l))) <= 1e-12);
    CHECK(traj[l] > 0.0);
    if (l > 0) CHECK(traj[l] < traj[l - 1]);
  }
  for (const double v : correlation_variance_recursion(0.5, {1.0, 0.0}, kLinear, 6))
    CHECK(std::abs(v - 0.5) <= 1e-12);
  CHECK_THROWS_AS(correlation_variance_recursion(0.5, {1.0, 0.0}, kTanh, 5), DegenerateError);
  CHECK_THROWS_AS(correlation_variance_recursion(0.0, p, kTanh, 5), ConfigError);
}

TEST_CASE("Monte-Carlo depth decay matches beta squared") {
  const PhasePoint p{1.2, 0.0};
  const auto mc = correlation_depth_mc(16, 64, p, kTanh, 6, 4000, 21);
  REQUIRE(mc.size() == 6);
  const double b2 = std::pow(beta(p, kTanh), 2);
  for (std::size_t l = 2; l < mc.size(); ++l) {
    CAPTURE(l);
    CHECK(std::abs(mc[l] / mc[l - 1] / b2 - 1.0) <= 0.2);
  }
  CHECK_THROWS_AS(correlation_depth_mc(16, 64, {1.0, 0.0}, kTanh, 4, 1000, 1), DegenerateError);
}
