#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "mfinfo/mfinfo.h"

namespace {

struct Act {
  mfi_activation* p = nullptr;
  explicit Act(const char* name, double a = 1.0, double b = 1.0) {
    REQUIRE(mfi_activation_create(name, a, b, &p) == MFI_OK);
  }
  ~Act() { mfi_activation_destroy(p); }
};

std::string take(mfi_string* s) {
  std::string out(mfi_string_data(s), mfi_string_size(s));
  mfi_string_destroy(s);
  return out;
}

}  // namespace

TEST_CASE("version and status strings") {
  CHECK(std::string(mfi_version()).size() > 0);
  CHECK(std::string(mfi_status_string(MFI_OK)) != std::string(mfi_status_string(MFI_ERR_DOMAIN)));
  mfi_activation* act = nullptr;
  CHECK(mfi_activation_create("relu", 1.0, 1.0, &act) == MFI_ERR_CONFIG);
  CHECK(act == nullptr);
  CHECK(std::string(mfi_last_error()).find("relu") != std::string::npos);
  CHECK(mfi_activation_create("tanh", 1.0, 1.0, nullptr) == MFI_ERR_INVALID_ARGUMENT);
  mfi_activation_destroy(nullptr);
}

TEST_CASE("activation evaluation") {
  Act tanh_act("tanh");
  double v = 0.0, d = 0.0;
  REQUIRE(mfi_activation_eval(tanh_act.p, 0.5, &v, &d) == MFI_OK);
  CHECK(v == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
  CHECK(d == doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)).epsilon(1e-14));
  Act scaled("scaled_tanh", 2.0, 0.5);
  REQUIRE(mfi_activation_eval(scaled.p, 1.0, &v, nullptr) == MFI_OK);
  CHECK(v == doctest::Approx(2.0 * std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("mean-field quantities") {
  Act act("tanh");
  mfi_fixed_point fp{};
  REQUIRE(mfi_fixed_point_solve(act.p, 1.5, 0.05, 0, &fp) == MFI_OK);
  CHECK(fp.converged == 1);
  CHECK(fp.q_star == doctest::Approx(0.7983871143087915).epsilon(1e-9));

  double beta = 0.0, zeta = 0.0, c = 0.0;
  REQUIRE(mfi_beta(act.p, 1.0, 0.0, 0, &beta) == MFI_OK);
  CHECK(std::abs(beta - 1.0) <= 1e-6);
  REQUIRE(mfi_zeta(act.p, 1.0, 0.0, 0, &zeta) == MFI_OK);
  CHECK(std::abs(zeta - 1.0) <= 1e-9);
  REQUIRE(mfi_correlation_map(act.p, 1.5, 0.05, 1.0, 0, &c) == MFI_OK);
  CHECK(std::abs(c - 1.0) <= 1e-9);

  double sw = 0.0, sb = 0.0;
  REQUIRE(mfi_di_point(act.p, &sw, &sb) == MFI_OK);
  CHECK(sw == doctest::Approx(1.0));
  CHECK(sb == 0.0);

  Act lin("linear");
  REQUIRE(mfi_fixed_point_solve(lin.p, 1.5, 0.05, 0, &fp) == MFI_OK);
  CHECK(fp.converged == 0);
  CHECK(mfi_zeta(lin.p, 1.5, 0.05, 0, &zeta) == MFI_ERR_CONVERGENCE);
  CHECK(mfi_beta(act.p, -1.0, 0.0, 0, &beta) == MFI_ERR_CONFIG);
  CHECK(mfi_correlation_map(act.p, 1.5, 0.05, 1.5, 0, &c) == MFI_ERR_INVALID_ARGUMENT);
}

TEST_CASE("edge-of-chaos curve") {
  Act act("tanh");
  const double grid[] = {0.8, 1.2, 1.5};
  double sb[3];
  int found[3];
  REQUIRE(mfi_eoc_curve(act.p, grid, 3, 1.0, 0, sb, found) == MFI_OK);
  CHECK(found[0] == 0);
  CHECK(std::isnan(sb[0]));
  for (int k = 1; k < 3; ++k) {
    CHECK(found[k] == 1);
    double zeta = 0.0;
    REQUIRE(mfi_zeta(act.p, grid[k], sb[k], 0, &zeta) == MFI_OK);
    CHECK(std::abs(zeta - 1.0) <= 1e-9);
  }
}

TEST_CASE("spectra through the C interface") {
  Act act("tanh");
  mfi_spectrum_moments m{};
  REQUIRE(mfi_jacobian_moments(act.p, 1.0, 0.0, 5, MFI_INIT_GAUSSIAN, 0, &m) == MFI_OK);
  CHECK(m.depth == 5);
  CHECK(m.s1 == -1.0);
  CHECK(std::abs(m.m2 - 6.0) <= 1e-9);

  mfi_moment_estimate est{};
  REQUIRE(mfi_sample_jacobian_moments(act.p, 1.3, 0.1, 3, 32, MFI_INIT_ORTHOGONAL, 4, 1, &est) == MFI_OK);
  CHECK(est.realizations == 4);
  CHECK(est.m1_mean > 0.0);

  const int widths[] = {4, 6, 5};
  mfi_network* net = nullptr;
  REQUIRE(mfi_network_create(2, widths, 1.2, 0.1, MFI_INIT_GAUSSIAN, 3, &net) == MFI_OK);
  const double x[] = {0.1, -0.2, 0.3, 0.0};
  double sv[4];
  size_t count = 0;
  CHECK(mfi_network_jacobian_spectrum(net, act.p, x, 4, sv, 2, &count) == MFI_ERR_INVALID_ARGUMENT);
  REQUIRE(mfi_network_jacobian_spectrum(net, act.p, x, 4, sv, 4, &count) == MFI_OK);
  CHECK(count == 4);
  for (size_t k = 1; k < count; ++k) CHECK(sv[k] <= sv[k - 1]);
  CHECK(mfi_network_jacobian_spectrum(net, act.p, x, 3, sv, 4, &count) == MFI_ERR_CONFIG);
  mfi_network_destroy(net);
}

TEST_CASE("mutual information from a joint covariance") {
  // Scalar pair with correlation r: I = -1/2 log(1 - r^2).
  const double r = 0.6;
  const double joint[] = {1.0, r, r, 1.0};
  double mi = 0.0;
  REQUIRE(mfi_mi_from_joint(joint, 1, 1, 0.0, &mi) == MFI_OK);
  CHECK(mi == doctest::Approx(-0.5 * std::log(1.0 - r * r)).epsilon(1e-13));
  const double singular[] = {1.0, 1.0, 1.0, 1.0};
  CHECK(mfi_mi_from_joint(singular, 1, 1, 0.0, &mi) == MFI_ERR_CONDITIONING);
}

TEST_CASE("sweep through the C interface") {
  mfi_sweep_config* cfg = nullptr;
  REQUIRE(mfi_sweep_config_create(&cfg) == MFI_OK);
  CHECK(mfi_sweep_config_set_json(cfg, R"({"bogus": 1})") == MFI_ERR_CONFIG);
  REQUIRE(mfi_sweep_config_set_json(
              cfg, R"({"sigma_w_min": 0.5, "sigma_w_max": 1.5, "sigma_w_steps": 3, "sigma_b_steps": 2})") ==
          MFI_OK);
  REQUIRE(mfi_sweep_config_validate(cfg) == MFI_OK);

  mfi_string* json = nullptr;
  REQUIRE(mfi_sweep_config_to_json(cfg, &json) == MFI_OK);
  CHECK(take(json).find("\"sigma_w_steps\": 3") != std::string::npos);

  int calls = 0;
  mfi_sweep_result* res = nullptr;
  REQUIRE(mfi_sweep_run(cfg, [](int, int, void* u) { ++*static_cast<int*>(u); }, &calls, &res) == MFI_OK);
  CHECK(calls == 6);
  REQUIRE(mfi_sweep_result_size(res) == 6);
  mfi_sweep_row row{};
  REQUIRE(mfi_sweep_result_row(res, 2, &row) == MFI_OK);
  CHECK(row.sigma_w == 1.0);
  CHECK(row.sigma_b == 0.0);
  CHECK(std::abs(row.value - 1.0) <= 1e-6);
  CHECK(mfi_sweep_result_row(res, 6, &row) == MFI_ERR_INVALID_ARGUMENT);

  mfi_string* csv = nullptr;
  REQUIRE(mfi_sweep_result_csv(res, &csv) == MFI_OK);
  const std::string text = take(csv);
  CHECK(text.rfind("sigma_w,sigma_b,value,stderr,flags\n", 0) == 0);
  CHECK(mfi_sweep_result_write(res, "/nonexistent-dir/plane.csv") == MFI_ERR_IO);
  mfi_sweep_result_destroy(res);

  mfi_string* flags = nullptr;
  REQUIRE(mfi_flags_string(1u | 32u, &flags) == MFI_OK);
  CHECK(take(flags) == "degenerate|floored_input");

  REQUIRE(mfi_sweep_config_set_json(cfg, R"({"activation": "linear"})") == MFI_OK);
  mfi_string* eoc = nullptr;
  REQUIRE(mfi_eoc_profile_csv(cfg, nullptr, nullptr, &eoc) == MFI_OK);
  CHECK(take(eoc).rfind("# ", 0) == 0);

  REQUIRE(mfi_sweep_config_set_json(cfg, R"({"trials": 10})") == MFI_OK);
  mfi_string* report = nullptr;
  CHECK(mfi_pathology_report_json(cfg, &report) == MFI_ERR_CONFIG);
  CHECK(mfi_sweep_config_load(cfg, "/nonexistent-dir/cfg.json") == MFI_ERR_IO);
  mfi_sweep_config_destroy(cfg);
}
