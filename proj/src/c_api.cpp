#include "mfinfo/mfinfo.h"

#include <cmath>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include "mfinfo/infotheory.hpp"
#include "mfinfo/meanfield.hpp"
#include "mfinfo/netsim.hpp"
#include "mfinfo/spectra.hpp"
#include "mfinfo/sweep.hpp"

struct mfi_activation {
  mfinfo::Activation act;
};

struct mfi_network {
  mfinfo::NetworkRealization net;
};

struct mfi_sweep_config {
  mfinfo::SweepConfig config;
};

struct mfi_sweep_result {
  mfinfo::SweepResult result;
};

struct mfi_string {
  std::string text;
};

namespace {

thread_local std::string g_last_error;

mfi_status status_of(mfinfo::ErrorCode code) {
  using mfinfo::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return MFI_ERR_INVALID_ARGUMENT;
    case ErrorCode::config: return MFI_ERR_CONFIG;
    case ErrorCode::evaluation: return MFI_ERR_EVALUATION;
    case ErrorCode::degenerate: return MFI_ERR_DEGENERATE;
    case ErrorCode::convergence: return MFI_ERR_CONVERGENCE;
    case ErrorCode::conditioning: return MFI_ERR_CONDITIONING;
    case ErrorCode::domain: return MFI_ERR_DOMAIN;
    case ErrorCode::io: return MFI_ERR_IO;
  }
  return MFI_ERR_INTERNAL;
}

mfi_status fail(mfi_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <class F>
mfi_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MFI_OK;
  } catch (const mfinfo::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(MFI_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MFI_ERR_INTERNAL, e.what());
  }
}

#define MFI_REQUIRE(cond, what) \
  do {                          \
    if (!(cond)) return fail(MFI_ERR_INVALID_ARGUMENT, what); \
  } while (0)

const mfinfo::QuadratureRule& rule_for(int order, std::shared_ptr<const mfinfo::QuadratureRule>& hold) {
  hold = mfinfo::gauss_hermite_rule(order > 0 ? order : mfinfo::kDefaultQuadratureOrder);
  return *hold;
}

mfinfo::InitKind init_of(mfi_init init) {
  return init == MFI_INIT_ORTHOGONAL ? mfinfo::InitKind::orthogonal : mfinfo::InitKind::gaussian;
}

mfinfo::ProgressFn progress_of(mfi_progress_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](int done, int total) { fn(done, total, user); };
}

mfi_status emit(std::string text, mfi_string** out) {
  *out = new mfi_string{std::move(text)};
  return MFI_OK;
}

}  // namespace

extern "C" {

const char* mfi_version(void) { return MFINFO_VERSION; }

const char* mfi_last_error(void) { return g_last_error.c_str(); }

const char* mfi_status_string(mfi_status status) {
  switch (status) {
    case MFI_OK: return "ok";
    case MFI_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MFI_ERR_CONFIG: return "configuration error";
    case MFI_ERR_EVALUATION: return "evaluation error";
    case MFI_ERR_DEGENERATE: return "degenerate state";
    case MFI_ERR_CONVERGENCE: return "convergence failure";
    case MFI_ERR_CONDITIONING: return "conditioning error";
    case MFI_ERR_DOMAIN: return "domain error";
    case MFI_ERR_IO: return "i/o error";
    case MFI_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mfi_string_data(const mfi_string* s) { return s ? s->text.c_str() : ""; }
size_t mfi_string_size(const mfi_string* s) { return s ? s->text.size() : 0; }
void mfi_string_destroy(mfi_string* s) { delete s; }

mfi_status mfi_activation_create(const char* name, double a, double b, mfi_activation** out) {
  MFI_REQUIRE(name && out, "name and out must be non-null");
  return guarded([&] { *out = new mfi_activation{mfinfo::Activation::from_name(name, a, b)}; });
}

void mfi_activation_destroy(mfi_activation* act) { delete act; }

mfi_status mfi_activation_eval(const mfi_activation* act, double z, double* value, double* derivative) {
  MFI_REQUIRE(act, "activation must be non-null");
  if (value) *value = act->act.eval(z);
  if (derivative) *derivative = act->act.deriv(z);
  g_last_error.clear();
  return MFI_OK;
}

mfi_status mfi_fixed_point_solve(const mfi_activation* act, double sigma_w, double sigma_b,
                                 int quadrature_order, mfi_fixed_point* out) {
  MFI_REQUIRE(act && out, "activation and out must be non-null");
  return guarded([&] {
    std::shared_ptr<const mfinfo::QuadratureRule> hold;
    const auto fp = mfinfo::solve_fixed_point({sigma_w, sigma_b}, act->act, {},
                                              rule_for(quadrature_order, hold));
    *out = {fp.q_star, fp.residual, fp.iterations, fp.converged ? 1 : 0};
  });
}

mfi_status mfi_beta(const mfi_activation* act, double sigma_w, double sigma_b, int quadrature_order,
                    double* out) {
  MFI_REQUIRE(act && out, "activation and out must be non-null");
  return guarded([&] {
    std::shared_ptr<const mfinfo::QuadratureRule> hold;
    *out = mfinfo::beta({sigma_w, sigma_b}, act->act, rule_for(quadrature_order, hold));
  });
}

mfi_status mfi_zeta(const mfi_activation* act, double sigma_w, double sigma_b, int quadrature_order,
                    double* out) {
  MFI_REQUIRE(act && out, "activation and out must be non-null");
  return guarded([&] {
    std::shared_ptr<const mfinfo::QuadratureRule> hold;
    *out = mfinfo::slope_zeta({sigma_w, sigma_b}, act->act, rule_for(quadrature_order, hold));
  });
}

mfi_status mfi_correlation_map(const mfi_activation* act, double sigma_w, double sigma_b, double c,
                               int quadrature_order, double* out) {
  MFI_REQUIRE(act && out, "activation and out must be non-null");
  return guarded([&] {
    std::shared_ptr<const mfinfo::QuadratureRule> hold;
    const auto& rule = rule_for(quadrature_order, hold);
    const mfinfo::PhasePoint p{sigma_w, sigma_b};
    *out = mfinfo::correlation_map(c, mfinfo::fixed_point_variance(p, act->act, rule), p, act->act, rule);
  });
}

mfi_status mfi_di_point(const mfi_activation* act, double* sigma_w, double* sigma_b) {
  MFI_REQUIRE(act && sigma_w && sigma_b, "arguments must be non-null");
  return guarded([&] {
    const auto p = mfinfo::di_point(act->act);
    *sigma_w = p.sigma_w;
    *sigma_b = p.sigma_b;
  });
}

mfi_status mfi_eoc_curve(const mfi_activation* act, const double* sigma_w_grid, size_t n,
                         double sigma_b_max, int quadrature_order, double* sigma_b_out, int* found) {
  MFI_REQUIRE(act && (n == 0 || (sigma_w_grid && sigma_b_out && found)), "arguments must be non-null");
  return guarded([&] {
    std::shared_ptr<const mfinfo::QuadratureRule> hold;
    const std::vector<double> grid(sigma_w_grid, sigma_w_grid + n);
    const auto curve =
        mfinfo::eoc_curve(act->act, grid, sigma_b_max, 1e-10, rule_for(quadrature_order, hold));
    std::size_t next = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (next < curve.points.size() && curve.points[next].sigma_w == grid[k]) {
        sigma_b_out[k] = curve.points[next].sigma_b;
        found[k] = 1;
        ++next;
      } else {
        sigma_b_out[k] = std::numeric_limits<double>::quiet_NaN();
        found[k] = 0;
      }
    }
  });
}

mfi_status mfi_jacobian_moments(const mfi_activation* act, double sigma_w, double sigma_b, int depth,
                                mfi_init init, int quadrature_order, mfi_spectrum_moments* out) {
  MFI_REQUIRE(act && out, "activation and out must be non-null");
  return guarded([&] {
    std::shared_ptr<const mfinfo::QuadratureRule> hold;
    const auto m = mfinfo::jacobian_moments({sigma_w, sigma_b}, act->act, depth, init_of(init),
                                            rule_for(quadrature_order, hold));
    *out = {m.m1, m.m2, m.mu1, m.mu2, m.s1, m.depth};
  });
}

mfi_status mfi_sample_jacobian_moments(const mfi_activation* act, double sigma_w, double sigma_b,
                                       int depth, int width, mfi_init init, int realizations,
                                       uint64_t seed, mfi_moment_estimate* out) {
  MFI_REQUIRE(act && out, "activation and out must be non-null");
  return guarded([&] {
    const auto e = mfinfo::sample_jacobian_moments({sigma_w, sigma_b}, act->act, depth, width,
                                                   init_of(init), realizations, seed);
    *out = {e.m1_mean, e.m1_stderr, e.m2_mean, e.m2_stderr, e.realizations};
  });
}

mfi_status mfi_network_create(int depth, const int* widths, double sigma_w, double sigma_b,
                              mfi_init init, uint64_t seed, mfi_network** out) {
  MFI_REQUIRE(widths && out, "widths and out must be non-null");
  MFI_REQUIRE(depth >= 1, "depth must be at least 1");
  return guarded([&] {
    mfinfo::NetworkConfig cfg;
    cfg.depth = depth;
    cfg.widths.assign(widths, widths + depth + 1);
    cfg.point = {sigma_w, sigma_b};
    cfg.init = init_of(init);
    cfg.seed = seed;
    *out = new mfi_network{mfinfo::init_network(cfg)};
  });
}

void mfi_network_destroy(mfi_network* net) { delete net; }

mfi_status mfi_network_jacobian_spectrum(const mfi_network* net, const mfi_activation* act,
                                         const double* input, size_t input_len, double* values,
                                         size_t capacity, size_t* count) {
  MFI_REQUIRE(net && act && input && count, "arguments must be non-null");
  return guarded([&] {
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(input, static_cast<Eigen::Index>(input_len));
    const Eigen::VectorXd sv = mfinfo::empirical_jacobian_spectrum(net->net, x, act->act);
    *count = static_cast<size_t>(sv.size());
    if (!values || capacity < *count)
      throw mfinfo::Error(mfinfo::ErrorCode::invalid_argument,
                          "output buffer holds " + std::to_string(capacity) + " values, need " +
                              std::to_string(*count));
    for (Eigen::Index k = 0; k < sv.size(); ++k) values[k] = sv(k);
  });
}

mfi_status mfi_mi_from_joint(const double* joint, size_t n0, size_t nl, double jitter, double* out) {
  MFI_REQUIRE(joint && out && n0 > 0 && nl > 0, "joint and out must be non-null, blocks non-empty");
  return guarded([&] {
    const auto n = static_cast<Eigen::Index>(n0 + nl);
    const Eigen::MatrixXd j = Eigen::Map<const Eigen::MatrixXd>(joint, n, n);
    mfinfo::CovarianceTriple t;
    const auto a = static_cast<Eigen::Index>(n0);
    const auto b = static_cast<Eigen::Index>(nl);
    t.sigma0 = j.topLeftCorner(a, a);
    t.sigmal = j.bottomRightCorner(b, b);
    t.cross = j.topRightCorner(a, b);
    t = mfinfo::regularize(std::move(t), {mfinfo::JitterMode::relative, jitter});
    *out = mfinfo::mi_lower_bound(t).value;
  });
}

mfi_status mfi_sweep_config_create(mfi_sweep_config** out) {
  MFI_REQUIRE(out, "out must be non-null");
  return guarded([&] { *out = new mfi_sweep_config{}; });
}

void mfi_sweep_config_destroy(mfi_sweep_config* cfg) { delete cfg; }

mfi_status mfi_sweep_config_set_json(mfi_sweep_config* cfg, const char* json) {
  MFI_REQUIRE(cfg && json, "cfg and json must be non-null");
  return guarded([&] { cfg->config = mfinfo::parse_sweep_config(json, cfg->config); });
}

mfi_status mfi_sweep_config_load(mfi_sweep_config* cfg, const char* path) {
  MFI_REQUIRE(cfg && path, "cfg and path must be non-null");
  return guarded([&] { cfg->config = mfinfo::load_sweep_config(path, cfg->config); });
}

mfi_status mfi_sweep_config_validate(const mfi_sweep_config* cfg) {
  MFI_REQUIRE(cfg, "cfg must be non-null");
  return guarded([&] { mfinfo::validate(cfg->config); });
}

mfi_status mfi_sweep_config_to_json(const mfi_sweep_config* cfg, mfi_string** out) {
  MFI_REQUIRE(cfg && out, "cfg and out must be non-null");
  return guarded([&] { emit(mfinfo::to_json(cfg->config), out); });
}

mfi_status mfi_sweep_run(const mfi_sweep_config* cfg, mfi_progress_fn progress, void* user,
                         mfi_sweep_result** out) {
  MFI_REQUIRE(cfg && out, "cfg and out must be non-null");
  return guarded([&] {
    *out = new mfi_sweep_result{mfinfo::run_sweep(cfg->config, progress_of(progress, user))};
  });
}

void mfi_sweep_result_destroy(mfi_sweep_result* result) { delete result; }

size_t mfi_sweep_result_size(const mfi_sweep_result* result) {
  return result ? result->result.rows.size() : 0;
}

mfi_status mfi_sweep_result_row(const mfi_sweep_result* result, size_t index, mfi_sweep_row* out) {
  MFI_REQUIRE(result && out, "result and out must be non-null");
  MFI_REQUIRE(index < result->result.rows.size(), "row index out of range");
  const auto& r = result->result.rows[index];
  *out = {r.sigma_w, r.sigma_b, r.value, r.stderr_, r.flags};
  g_last_error.clear();
  return MFI_OK;
}

mfi_status mfi_sweep_result_csv(const mfi_sweep_result* result, mfi_string** out) {
  MFI_REQUIRE(result && out, "result and out must be non-null");
  return guarded([&] { emit(mfinfo::format_csv(result->result), out); });
}

mfi_status mfi_sweep_result_write(const mfi_sweep_result* result, const char* path) {
  MFI_REQUIRE(result && path, "result and path must be non-null");
  return guarded([&] { mfinfo::write_sweep(result->result, path); });
}

mfi_status mfi_flags_string(unsigned flags, mfi_string** out) {
  MFI_REQUIRE(out, "out must be non-null");
  return guarded([&] { emit(mfinfo::flags_to_string(flags), out); });
}

mfi_status mfi_eoc_profile_csv(const mfi_sweep_config* cfg, mfi_progress_fn progress, void* user,
                               mfi_string** out) {
  MFI_REQUIRE(cfg && out, "cfg and out must be non-null");
  return guarded([&] {
    const auto profile = mfinfo::run_eoc_profile(cfg->config, progress_of(progress, user));
    emit(mfinfo::format_eoc_csv(profile, cfg->config.bits), out);
  });
}

mfi_status mfi_pathology_report_json(const mfi_sweep_config* cfg, mfi_string** out) {
  MFI_REQUIRE(cfg && out, "cfg and out must be non-null");
  return guarded([&] { emit(mfinfo::format_pathology_json(mfinfo::run_pathology_report(cfg->config)), out); });
}

}  // extern "C"
