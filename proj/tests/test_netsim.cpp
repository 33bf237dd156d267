#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfinfo/netsim.hpp"
#include "oracle.hpp"

using namespace mfinfo;

namespace {
const Activation kTanh = Activation::tanh();

double sample_variance(const std::vector<double>& xs) {
  double mean = 0.0;
  for (const double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (const double x : xs) var += (x - mean) * (x - mean);
  return var / static_cast<double>(xs.size() - 1);
}
}  // namespace

TEST_CASE("kind parsing") {
  CHECK(parse_init_kind("gaussian") == InitKind::gaussian);
  CHECK(parse_init_kind("orthogonal") == InitKind::orthogonal);
  CHECK(parse_input_kind("stable") == InputKind::stable);
  CHECK(parse_input_kind("unit") == InputKind::unit);
  CHECK_THROWS_AS(parse_init_kind("xavier"), ConfigError);
  CHECK_THROWS_AS(parse_input_kind("uniform"), ConfigError);
  CHECK(std::string(to_string(InitKind::orthogonal)) == "orthogonal");
}

TEST_CASE("network config validation") {
  const PhasePoint p{1.2, 0.1};
  CHECK_THROWS_AS(validate(NetworkConfig::uniform(0, 4, 4, p, InitKind::gaussian, 0)), ConfigError);
  CHECK_THROWS_AS(validate(NetworkConfig::uniform(2, 0, 4, p, InitKind::gaussian, 0)), ConfigError);
  CHECK_THROWS_AS(validate(NetworkConfig::uniform(2, 8, 4, p, InitKind::orthogonal, 0)), ConfigError);
  CHECK_NOTHROW(validate(NetworkConfig::uniform(2, 8, 4, p, InitKind::gaussian, 0)));
  CHECK_NOTHROW(validate(NetworkConfig::uniform(2, 4, 8, p, InitKind::orthogonal, 0)));

  NetworkConfig c = NetworkConfig::uniform(3, 4, 8, p, InitKind::orthogonal, 0);
  c.widths[2] = 9;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.init = InitKind::gaussian;
  CHECK_NOTHROW(validate(c));
  c.widths.pop_back();
  CHECK_THROWS_AS(validate(c), ConfigError);
  CHECK_THROWS_AS(init_network(NetworkConfig::uniform(2, 4, 4, {-1.0, 0.0}, InitKind::gaussian, 0)),
                  ConfigError);
}

TEST_CASE("init_network is deterministic in the seed") {
  const auto cfg = NetworkConfig::uniform(3, 5, 7, {1.3, 0.2}, InitKind::gaussian, 42);
  const auto a = init_network(cfg);
  const auto b = init_network(cfg);
  REQUIRE(a.weights.size() == 3);
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    CHECK(a.weights[l] == b.weights[l]);
    CHECK(a.biases[l] == b.biases[l]);
  }
  CHECK(a.weights[0].rows() == 7);
  CHECK(a.weights[0].cols() == 5);
  auto other = cfg;
  other.seed = 43;
  CHECK(init_network(other).weights[0] != a.weights[0]);
  CHECK(a.weights[1] != a.weights[2]);
}

TEST_CASE("gaussian weight statistics") {
  const int n = 256;
  const double sw = 1.7;
  std::vector<double> entries, row_norms;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto net = init_network(NetworkConfig::uniform(2, n, n, {sw, 0.0}, InitKind::gaussian, seed));
    const auto& w = net.weights[1];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      row_norms.push_back(w.row(i).squaredNorm() / (sw * sw));
      if (seed < 2)
        for (Eigen::Index j = 0; j < w.cols(); ++j) entries.push_back(w(i, j));
    }
  }
  // Entry variance sigma_w^2 / N within a few standard errors.
  const double var = sample_variance(entries);
  CHECK(std::abs(var / (sw * sw / n) - 1.0) < 0.03);
  // sum_k W_jk^2 / sigma_w^2 is chi-square(N) / N: mean 1, variance 2 / N.
  double mean = 0.0;
  for (const double r : row_norms) mean += r;
  mean /= static_cast<double>(row_norms.size());
  CHECK(std::abs(mean - 1.0) < 0.01);
  const double ratio = sample_variance(row_norms) / (2.0 / n);
  CHECK(ratio > 1.0 / 1.5);
  CHECK(ratio < 1.5);
}

TEST_CASE("orthogonal layers") {
  const double sw = 1.4;
  const auto net = init_network(NetworkConfig::uniform(3, 6, 16, {sw, 0.0}, InitKind::orthogonal, 3));
  for (const auto& w : net.weights) {
    const Eigen::MatrixXd gram = w.transpose() * w;
    CHECK((gram - sw * sw * Eigen::MatrixXd::Identity(w.cols(), w.cols())).cwiseAbs().maxCoeff() <
          1e-10);
  }
  CHECK(net.weights[0].rows() == 16);
  CHECK(net.weights[0].cols() == 6);
}

TEST_CASE("haar_orthogonal has zero mean trace") {
  Rng rng(11);
  const int draws = 2000;
  double sum = 0.0, sum_sq = 0.0;
  for (int t = 0; t < draws; ++t) {
    const Eigen::MatrixXd q = haar_orthogonal(8, 8, rng);
    const double tr = q.trace();
    sum += tr;
    sum_sq += tr * tr;
  }
  // For Haar O(n), E[tr Q] = 0 and E[tr(Q)^2] = 1.
  CHECK(std::abs(sum / draws) < 4.0 / std::sqrt(draws));
  CHECK(std::abs(sum_sq / draws - 1.0) < 0.15);
}

TEST_CASE("biases") {
  const auto zero = init_network(NetworkConfig::uniform(2, 4, 64, {1.0, 0.0}, InitKind::gaussian, 1));
  for (const auto& b : zero.biases) CHECK(b.isZero(0.0));
  const auto net = init_network(NetworkConfig::uniform(4, 4, 4096, {1.0, 0.3}, InitKind::gaussian, 1));
  for (const auto& b : net.biases) {
    const double ms = b.squaredNorm() / static_cast<double>(b.size());
    CHECK(std::abs(ms / 0.09 - 1.0) < 0.1);
  }
}

TEST_CASE("stable input variance") {
  const auto sv = stable_input_variance({1.5, 0.05}, kTanh);
  CHECK_FALSE(sv.floored);
  CHECK(std::abs(sv.variance - oracle::frozen::kStableVTanh_1p5_0p05) <= 1e-8);
  CHECK(std::abs(1.5 * 1.5 * sv.variance + 0.05 * 0.05 - sv.q_star) <= 1e-14);

  const auto di = stable_input_variance({1.0, 0.0}, kTanh);
  CHECK(di.floored);
  CHECK(di.variance == kVFloor);
  CHECK(stable_input_variance({0.7, 0.3}, kTanh).floored == false);
}

TEST_CASE("correlation presets") {
  const auto t = toeplitz_correlation(5, 0.5);
  CHECK(t(0, 3) == doctest::Approx(0.125));
  CHECK_NOTHROW(check_correlation_matrix(t));
  CHECK_THROWS_AS(toeplitz_correlation(3, 1.0), ConfigError);

  const auto w1 = wishart_correlation(6, 10, 9);
  const auto w2 = wishart_correlation(6, 10, 9);
  CHECK(w1 == w2);
  CHECK(w1 != wishart_correlation(6, 10, 10));
  CHECK_NOTHROW(check_correlation_matrix(w1));
  CHECK_THROWS_AS(wishart_correlation(6, 5, 1), ConfigError);

  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(check_correlation_matrix(bad), Error);
  bad = Eigen::MatrixXd::Identity(3, 3);
  bad(0, 1) = 0.3;
  CHECK_THROWS_AS(check_correlation_matrix(bad), Error);
  bad(1, 0) = 0.3;
  CHECK_NOTHROW(check_correlation_matrix(bad));
  bad(0, 1) = bad(1, 0) = 1.5;
  CHECK_THROWS_AS(check_correlation_matrix(bad), Error);
}

TEST_CASE("sample_inputs reproduces the requested covariance") {
  const PhasePoint p{1.5, 0.05};
  const auto c = toeplitz_correlation(4, 0.6);
  const auto ens = sample_inputs(InputKind::stable, c, 40000, p, kTanh, 5);
  CHECK(ens.samples.rows() == 40000);
  CHECK(ens.samples.cols() == 4);
  const Eigen::MatrixXd cov = ens.samples.transpose() * ens.samples / 40000.0;
  CHECK(((cov - ens.variance * c).cwiseAbs().maxCoeff()) < 0.04 * ens.variance);

  const auto again = sample_inputs(InputKind::stable, c, 40000, p, kTanh, 5);
  CHECK(again.samples == ens.samples);
  const auto unit = sample_inputs(InputKind::unit, c, 10, p, kTanh, 5);
  CHECK(unit.variance == 1.0);
  CHECK_FALSE(unit.floored);
  CHECK(sample_inputs(InputKind::stable, c, 10, {1.0, 0.0}, kTanh, 5).floored);
}

TEST_CASE("forward pass") {
  const PhasePoint p{1.5, 0.05};
  const auto net = init_network(NetworkConfig::uniform(3, 4, 6, p, InitKind::gaussian, 2));
  const auto ens = sample_inputs(InputKind::unit, identity_correlation(4), 5, p, kTanh, 1);
  const auto rec = forward(net, ens.samples, kTanh);
  REQUIRE(rec.size() == 4);
  CHECK(rec[0].layer == 0);
  CHECK(rec[0].signals == ens.samples);
  Eigen::MatrixXd h1 = ens.samples * net.weights[0].transpose();
  h1.rowwise() += net.biases[0].transpose();
  CHECK((rec[1].signals - h1).cwiseAbs().maxCoeff() < 1e-14);
  Eigen::MatrixXd h2 = h1.array().tanh().matrix() * net.weights[1].transpose();
  h2.rowwise() += net.biases[1].transpose();
  CHECK((rec[2].signals - h2).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((forward_output(net, ens.samples, kTanh) - rec[3].signals).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(forward(net, Eigen::MatrixXd::Zero(2, 3), kTanh), ConfigError);
}

TEST_CASE("signals stay at the fixed point through depth") {
  for (const InitKind init : {InitKind::gaussian, InitKind::orthogonal}) {
    const PhasePoint p{1.5, 0.05};
    const auto net = init_network(NetworkConfig::uniform(10, 256, 256, p, init, 8));
    const auto ens = sample_inputs(InputKind::stable, identity_correlation(256), 2000, p, kTanh, 3);
    const double q = fixed_point_variance(p, kTanh);
    const auto rec = forward(net, ens.samples, kTanh);
    for (std::size_t l = 1; l < rec.size(); ++l) {
      CAPTURE(l);
      CHECK(std::abs(mean_square(rec[l].signals) / q - 1.0) < 0.05);
    }
  }
}
