#include <doctest.h>

#include <cmath>
#include <vector>

#include "mfinfo/spectra.hpp"
#include "oracle.hpp"

using namespace mfinfo;

namespace {
const Activation kTanh = Activation::tanh();
const Activation kLinear = Activation::linear();
}  // namespace

TEST_CASE("mu_tilde examples") {
  for (const int k : {1, 2, 3}) {
    CHECK(std::abs(mu_tilde(k, {0.7, 0.4}, kLinear) - 1.0) <= 1e-14);
    CHECK(std::abs(mu_tilde(k, {1.0, 0.0}, kTanh) - 1.0) <= 1e-12);
  }
  CHECK(std::abs(mu_tilde(1, {1.5, 0.05}, kTanh) - oracle::frozen::kMu1Tanh_1p5_0p05) <= 1e-8);
  CHECK(std::abs(mu_tilde(2, {1.5, 0.05}, kTanh) - oracle::frozen::kMu2Tanh_1p5_0p05) <= 1e-8);
  CHECK_THROWS_AS(mu_tilde_at(0, 1.0, kTanh), Error);
}

TEST_CASE("jacobian_moments examples") {
  for (const int depth : {1, 3, 10, 50}) {
    const auto orth = jacobian_moments({1.0, 0.0}, kTanh, depth, InitKind::orthogonal);
    CHECK(std::abs(orth.m1 - 1.0) <= 1e-9);
    CHECK(std::abs(orth.m2 - 1.0) <= 1e-9);
    CHECK(orth.s1 == 0.0);
    CHECK(orth.depth == depth);
  }
  const auto g = jacobian_moments({1.0, 0.0}, kTanh, 7, InitKind::gaussian);
  CHECK(g.s1 == -1.0);
  CHECK(std::abs(g.m1 - 1.0) <= 1e-9);
  CHECK(std::abs(g.m2 - 8.0) <= 1e-9);

  const auto lin = jacobian_moments({0.9, 0.2}, kLinear, 3, InitKind::orthogonal);
  CHECK(std::abs(lin.m1 - 0.531441) <= 1e-12);
  CHECK(std::abs(lin.m2 - std::pow(0.9, 12)) <= 1e-12);
  CHECK_THROWS_AS(jacobian_moments({1.0, 0.0}, kTanh, 0, InitKind::gaussian), ConfigError);
}

TEST_CASE("moment invariants over the phase plane") {
  for (double sw = 0.5; sw <= 2.5 + 1e-12; sw += 0.25)
    for (double sb = 0.0; sb <= 0.5 + 1e-12; sb += 0.125)
      for (const InitKind init : {InitKind::gaussian, InitKind::orthogonal}) {
        const auto m = jacobian_moments({sw, sb}, kTanh, 6, init);
        CAPTURE(sw);
        CAPTURE(sb);
        CHECK(m.mu2 >= m.mu1 * m.mu1 - 1e-14);
        CHECK(m.m1 >= 0.0);
        CHECK(m.m2 >= 0.0);
        CHECK(std::abs(m.m1 - std::pow(sw * sw * m.mu1, 6)) <= 1e-12 * std::max(1.0, m.m1));
      }
}

TEST_CASE("Cauchy-Schwarz gap closes as q* shrinks") {
  double prev = 1.0;
  for (const double q : {1e-1, 1e-2, 1e-4, 1e-6}) {
    const double mu1 = mu_tilde_at(1, q, kTanh);
    const double gap = mu_tilde_at(2, q, kTanh) - mu1 * mu1;
    CHECK(gap >= 0.0);
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("identity-like network has unit singular values") {
  const auto net = init_network(NetworkConfig::uniform(6, 32, 32, {1.0, 0.0}, InitKind::orthogonal, 4));
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(32, -1.0, 1.0);
  const Eigen::VectorXd sv = empirical_jacobian_spectrum(net, x, kLinear);
  REQUIRE(sv.size() == 32);
  CHECK((sv.array() - 1.0).abs().maxCoeff() <= 1e-10);
}

TEST_CASE("empirical jacobian matches finite differences") {
  const PhasePoint p{1.4, 0.1};
  const auto net = init_network(NetworkConfig::uniform(3, 5, 7, p, InitKind::gaussian, 9));
  Eigen::VectorXd x(5);
  x << 0.3, -0.2, 0.5, 0.1, -0.4;
  const Eigen::MatrixXd jac = empirical_jacobian(net, x, kTanh);
  REQUIRE(jac.rows() == 7);
  REQUIRE(jac.cols() == 5);
  auto out = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    Eigen::VectorXd h = net.weights[0] * v + net.biases[0];
    for (std::size_t l = 1; l < net.weights.size(); ++l)
      h = net.weights[l] * h.array().tanh().matrix() + net.biases[l];
    return h.array().tanh();
  };
  const double eps = 1e-6;
  for (int j = 0; j < 5; ++j) {
    Eigen::VectorXd up = x, dn = x;
    up(j) += eps;
    dn(j) -= eps;
    const Eigen::VectorXd fd = (out(up) - out(dn)) / (2 * eps);
    CHECK((fd - jac.col(j)).cwiseAbs().maxCoeff() < 1e-7);
  }
  const auto em = empirical_jacobian_moments(net, x, kTanh);
  const Eigen::MatrixXd h = jac.transpose() * jac;
  CHECK(std::abs(em.m1 - h.trace() / 5.0) < 1e-12);
  CHECK(std::abs(em.m2 - (h * h).trace() / 5.0) < 1e-12);
  CHECK_THROWS_AS(empirical_jacobian(net, Eigen::VectorXd::Zero(4), kTanh), ConfigError);
}

TEST_CASE("Marchenko-Pastur first moment") {
  double sum = 0.0;
  for (std::uint64_t r = 0; r < 32; ++r) {
    const auto net = init_network(NetworkConfig::uniform(1, 256, 256, {1.0, 0.0}, InitKind::gaussian, r));
    const Eigen::VectorXd sv = empirical_jacobian_spectrum(net, Eigen::VectorXd::Zero(256), kLinear);
    sum += sv.squaredNorm() / 256.0;
  }
  CHECK(std::abs(sum / 32.0 - 1.0) <= 0.1);
}

TEST_CASE("tanh at dynamical isometry with orthogonal weights") {
  const auto est = sample_jacobian_moments({1.0, 0.0}, kTanh, 16, 256, InitKind::orthogonal, 4, 1);
  CHECK(std::abs(est.m1_mean - 1.0) <= 0.1);
  CHECK(est.m2_mean <= 2.0);
}

TEST_CASE("analytic and empirical first moments agree") {
  for (const PhasePoint p : {PhasePoint{1.5, 0.05}, PhasePoint{0.9, 0.3}, PhasePoint{1.2, 0.1}})
    for (const InitKind init : {InitKind::gaussian, InitKind::orthogonal}) {
      const auto est = sample_jacobian_moments(p, kTanh, 4, 128, init, 32, 77);
      const auto m = jacobian_moments(p, kTanh, 4, init);
      CAPTURE(p.sigma_w);
      CAPTURE(to_string(init));
      CHECK(est.realizations == 32);
      CHECK(std::abs(est.m1_mean - m.m1) <= 3.0 * est.m1_stderr);
    }
}

TEST_CASE("sampled moments are reproducible") {
  const auto a = sample_jacobian_moments({1.3, 0.1}, kTanh, 3, 32, InitKind::gaussian, 4, 5);
  const auto b = sample_jacobian_moments({1.3, 0.1}, kTanh, 3, 32, InitKind::gaussian, 4, 5);
  CHECK(a.m1_mean == b.m1_mean);
  CHECK(a.m2_stderr == b.m2_stderr);
  CHECK_THROWS_AS(sample_jacobian_moments({1.3, 0.1}, kTanh, 3, 32, InitKind::gaussian, 1, 5),
                  ConfigError);
}

TEST_CASE("second moment grows linearly in depth for gaussian weights at DI") {
  const std::vector<int> depths = {4, 8, 16, 32};
  std::vector<double> m2;
  for (const int d : depths)
    m2.push_back(sample_jacobian_moments({1.0, 0.0}, kTanh, d, 512, InitKind::gaussian, 2, 3).m2_mean);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    mx += depths[i];
    my += m2[i];
  }
  mx /= depths.size();
  my /= depths.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    sxy += (depths[i] - mx) * (m2[i] - my);
    sxx += (depths[i] - mx) * (depths[i] - mx);
  }
  const double slope = sxy / sxx;
  CAPTURE(slope);
  CHECK(std::abs(slope - 1.0) <= 0.3);
}
