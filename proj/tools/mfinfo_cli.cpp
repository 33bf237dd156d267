// mfinfo command-line front end. Talks to the library only through the C
// interface in mfinfo/mfinfo.h.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfinfo/mfinfo.h"

using nlohmann::json;

namespace {

enum Exit { kOk = 0, kGeneric = 1, kConfig = 2, kNumeric = 3 };

struct Failure {
  mfi_status status;
  std::string message;
};

int exit_code_for(mfi_status s) {
  switch (s) {
    case MFI_OK: return kOk;
    case MFI_ERR_INVALID_ARGUMENT:
    case MFI_ERR_CONFIG: return kConfig;
    case MFI_ERR_IO:
    case MFI_ERR_INTERNAL: return kGeneric;
    default: return kNumeric;
  }
}

void check(mfi_status s) {
  if (s != MFI_OK) throw Failure{s, mfi_last_error()};
}

struct StringDeleter {
  void operator()(mfi_string* s) const { mfi_string_destroy(s); }
};
using OwnedString = std::unique_ptr<mfi_string, StringDeleter>;

std::string take(mfi_string* raw) {
  OwnedString s(raw);
  return std::string(mfi_string_data(s.get()), mfi_string_size(s.get()));
}

struct ConfigDeleter {
  void operator()(mfi_sweep_config* c) const { mfi_sweep_config_destroy(c); }
};
struct ActivationDeleter {
  void operator()(mfi_activation* a) const { mfi_activation_destroy(a); }
};
struct ResultDeleter {
  void operator()(mfi_sweep_result* r) const { mfi_sweep_result_destroy(r); }
};

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw Failure{MFI_ERR_IO, "cannot open '" + out + "' for writing"};
  f << text;
}

void progress_to_stderr(int done, int total, void*) {
  if (done == total || done % 64 == 0) std::fprintf(stderr, "\r%d/%d cells", done, total);
  if (done == total) std::fprintf(stderr, "\n");
}

// Options that map one-to-one onto config keys. Only flags given on the
// command line end up in the override document.
struct Overrides {
  json doc = json::object();

  template <class T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    hooks.push_back([this, opt, value, key] {
      if (opt->count() > 0) doc[key] = *value;
    });
  }

  void collect() {
    for (auto& h : hooks) h();
  }

  std::vector<std::function<void()>> hooks;
};

void add_activation_flags(CLI::App* app, Overrides& o) {
  o.add<std::string>(app, "--activation", "activation", "tanh | scaled_tanh | erf | linear");
  o.add<double>(app, "--act-a", "activation_a", "scaled_tanh amplitude a");
  o.add<double>(app, "--act-b", "activation_b", "scaled_tanh slope b");
}

void add_point_flags(CLI::App* app, Overrides& o) {
  o.add<double>(app, "--sigma-w", "sigma_w", "weight scale");
  o.add<double>(app, "--sigma-b", "sigma_b", "bias standard deviation");
}

void add_grid_flags(CLI::App* app, Overrides& o) {
  o.add<double>(app, "--sigma-w-min", "sigma_w_min", "grid start for sigma_w");
  o.add<double>(app, "--sigma-w-max", "sigma_w_max", "grid end for sigma_w");
  o.add<int>(app, "--sigma-w-steps", "sigma_w_steps", "grid size along sigma_w");
  o.add<double>(app, "--sigma-b-min", "sigma_b_min", "grid start for sigma_b");
  o.add<double>(app, "--sigma-b-max", "sigma_b_max", "grid end for sigma_b");
  o.add<int>(app, "--sigma-b-steps", "sigma_b_steps", "grid size along sigma_b");
}

void add_network_flags(CLI::App* app, Overrides& o) {
  o.add<int>(app, "--depth", "depth", "number of layers");
  o.add<int>(app, "--width", "width", "hidden width");
  o.add<int>(app, "--n0", "n0", "input dimension (0: equal to width)");
  o.add<std::string>(app, "--init", "init", "gaussian | orthogonal");
  o.add<std::string>(app, "--input", "input", "stable | unit");
  o.add<std::string>(app, "--c00", "c00", "identity | toeplitz | wishart");
  o.add<double>(app, "--c00-rho", "c00_rho", "toeplitz correlation");
  o.add<int>(app, "--n-samples", "n_samples", "input samples per realization");
  o.add<int>(app, "--repetitions", "repetitions", "network realizations per cell");
  o.add<double>(app, "--jitter", "jitter", "diagonal regularization");
  o.add<std::string>(app, "--jitter-mode", "jitter_mode", "relative | absolute");
}

std::unique_ptr<mfi_sweep_config, ConfigDeleter> build_config(const std::string& path,
                                                              const json& overrides) {
  mfi_sweep_config* raw = nullptr;
  check(mfi_sweep_config_create(&raw));
  std::unique_ptr<mfi_sweep_config, ConfigDeleter> cfg(raw);
  if (!path.empty()) check(mfi_sweep_config_load(cfg.get(), path.c_str()));
  check(mfi_sweep_config_set_json(cfg.get(), overrides.dump().c_str()));
  check(mfi_sweep_config_validate(cfg.get()));
  return cfg;
}

json config_doc(const mfi_sweep_config* cfg) {
  mfi_string* s = nullptr;
  check(mfi_sweep_config_to_json(cfg, &s));
  return json::parse(take(s));
}

std::unique_ptr<mfi_activation, ActivationDeleter> make_activation(const json& doc) {
  mfi_activation* raw = nullptr;
  check(mfi_activation_create(doc["activation"].get<std::string>().c_str(),
                              doc["activation_a"].get<double>(), doc["activation_b"].get<double>(),
                              &raw));
  return std::unique_ptr<mfi_activation, ActivationDeleter>(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field signal propagation and information-bound toolkit"};
  app.set_version_flag("--version", std::string(mfi_version()));
  app.require_subcommand(1);

  Overrides global;
  std::string config_path;
  std::string out;
  app.add_option("--config", config_path, "flat JSON config file; flags override its values");
  app.add_option("--out", out, "output file (default: stdout)");
  global.add<std::uint64_t>(&app, "--seed", "seed", "root random seed");
  global.add<int>(&app, "--workers", "workers", "worker threads");
  global.add<int>(&app, "--quadrature-order", "quadrature_order", "Gauss-Hermite order");
  bool bits = false;
  app.add_flag("--bits", bits, "report information in bits instead of nats");

  Overrides sub;
  auto* fixed = app.add_subcommand("fixed-point", "fixed point, beta and zeta at one phase point");
  add_activation_flags(fixed, sub);
  add_point_flags(fixed, sub);

  auto* phase = app.add_subcommand("phase", "beta, zeta or q* over a (sigma_w, sigma_b) grid");
  add_activation_flags(phase, sub);
  add_grid_flags(phase, sub);
  sub.add<std::string>(phase, "--quantity", "quantity", "beta | zeta | qstar");

  auto* eoc = app.add_subcommand("eoc", "edge-of-chaos curve, optionally with MI along it");
  add_activation_flags(eoc, sub);
  add_grid_flags(eoc, sub);
  add_network_flags(eoc, sub);
  bool eoc_mi = false;
  eoc->add_flag("--mi", eoc_mi, "evaluate the empirical MI bound along the curve");

  auto* di = app.add_subcommand("di", "dynamic-isometry point");
  add_activation_flags(di, sub);

  auto* mi = app.add_subcommand("mi-plane", "MI lower bound over a (sigma_w, sigma_b) grid");
  add_activation_flags(mi, sub);
  add_grid_flags(mi, sub);
  add_network_flags(mi, sub);
  bool analytic = false;
  mi->add_flag("--analytic", analytic, "use the analytic (correlation-recursion) bound");

  auto* spectrum = app.add_subcommand("spectrum", "Jacobian spectrum moments");
  add_activation_flags(spectrum, sub);
  add_point_flags(spectrum, sub);
  sub.add<int>(spectrum, "--depth", "depth", "number of layers");
  sub.add<int>(spectrum, "--width", "width", "width for empirical spectra");
  sub.add<std::string>(spectrum, "--init", "init", "gaussian | orthogonal");
  int realizations = 0;
  spectrum->add_option("--realizations", realizations,
                       "sampled networks for empirical moments (0: analytic only)");

  auto* pathology = app.add_subcommand("pathology", "first-layer correlation pathology report");
  add_activation_flags(pathology, sub);
  add_point_flags(pathology, sub);
  sub.add<int>(pathology, "--n0", "pathology_n0", "input dimension");
  sub.add<std::vector<int>>(pathology, "--widths", "pathology_widths", "layer widths");
  sub.add<int>(pathology, "--trials", "trials", "weight draws per width (>= 1000)");
  sub.add<int>(pathology, "--depth", "depth", "recursion depth");
  sub.add<int>(pathology, "--bins", "histogram_bins", "histogram bins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    global.collect();
    sub.collect();
    json overrides = global.doc;
    for (auto& [k, v] : sub.doc.items()) overrides[k] = v;
    if (bits) overrides["bits"] = true;
    if (phase->parsed() && !overrides.contains("quantity") && config_path.empty())
      overrides["quantity"] = "beta";
    if (mi->parsed()) overrides["quantity"] = analytic ? "mi_analytic" : "mi_empirical";
    if (!out.empty() && (phase->parsed() || mi->parsed())) overrides["output"] = out;

    auto cfg = build_config(config_path, overrides);
    const json doc = config_doc(cfg.get());
    const int order = doc["quadrature_order"].get<int>();

    if (fixed->parsed()) {
      auto act = make_activation(doc);
      const double sw = doc["sigma_w"], sb = doc["sigma_b"];
      mfi_fixed_point fp{};
      check(mfi_fixed_point_solve(act.get(), sw, sb, order, &fp));
      if (!fp.converged)
        throw Failure{MFI_ERR_CONVERGENCE, "variance map did not converge"};
      double b = 0.0, z = 0.0;
      check(mfi_beta(act.get(), sw, sb, order, &b));
      check(mfi_zeta(act.get(), sw, sb, order, &z));
      std::ostringstream os;
      os << "sigma_w " << fmt17(sw) << "\nsigma_b " << fmt17(sb) << "\nq_star " << fmt17(fp.q_star)
         << "\niterations " << fp.iterations << "\nresidual " << fmt17(fp.residual) << "\nbeta "
         << fmt17(b) << "\nzeta " << fmt17(z) << "\n";
      emit(os.str(), out);
    } else if (di->parsed()) {
      auto act = make_activation(doc);
      double sw = 0.0, sb = 0.0;
      check(mfi_di_point(act.get(), &sw, &sb));
      emit("sigma_w " + fmt17(sw) + "\nsigma_b " + fmt17(sb) + "\n", out);
    } else if (phase->parsed() || mi->parsed()) {
      mfi_sweep_result* raw = nullptr;
      check(mfi_sweep_run(cfg.get(), progress_to_stderr, nullptr, &raw));
      std::unique_ptr<mfi_sweep_result, ResultDeleter> result(raw);
      if (out.empty() || out == "-") {
        mfi_string* csv = nullptr;
        check(mfi_sweep_result_csv(result.get(), &csv));
        std::cout << take(csv);
      } else {
        check(mfi_sweep_result_write(result.get(), out.c_str()));
      }
    } else if (eoc->parsed()) {
      if (eoc_mi) {
        mfi_string* csv = nullptr;
        check(mfi_eoc_profile_csv(cfg.get(), progress_to_stderr, nullptr, &csv));
        emit(take(csv), out);
      } else {
        auto act = make_activation(doc);
        const double lo = doc["sigma_w_min"], hi = doc["sigma_w_max"];
        const int steps = doc["sigma_w_steps"];
        std::vector<double> grid(static_cast<std::size_t>(steps));
        for (int k = 0; k < steps; ++k) grid[k] = lo + (hi - lo) * k / (steps - 1);
        grid.back() = hi;
        std::vector<double> sb(grid.size());
        std::vector<int> found(grid.size());
        check(mfi_eoc_curve(act.get(), grid.data(), grid.size(), 2.0, order, sb.data(), found.data()));
        std::ostringstream os;
        os << "sigma_w,sigma_b\n";
        for (std::size_t k = 0; k < grid.size(); ++k)
          if (found[k]) os << fmt17(grid[k]) << ',' << fmt17(sb[k]) << '\n';
        emit(os.str(), out);
      }
    } else if (spectrum->parsed()) {
      auto act = make_activation(doc);
      const double sw = doc["sigma_w"], sb = doc["sigma_b"];
      const int depth = doc["depth"];
      const mfi_init init = doc["init"] == "orthogonal" ? MFI_INIT_ORTHOGONAL : MFI_INIT_GAUSSIAN;
      mfi_spectrum_moments m{};
      check(mfi_jacobian_moments(act.get(), sw, sb, depth, init, order, &m));
      json report = {{"sigma_w", sw}, {"sigma_b", sb}, {"depth", depth}, {"init", doc["init"]},
                     {"m1", m.m1}, {"m2", m.m2}, {"mu1", m.mu1}, {"mu2", m.mu2}, {"s1", m.s1}};
      if (realizations > 0) {
        mfi_moment_estimate e{};
        check(mfi_sample_jacobian_moments(act.get(), sw, sb, depth, doc["width"].get<int>(), init,
                                          realizations, doc["seed"].get<std::uint64_t>(), &e));
        report["empirical"] = {{"width", doc["width"]},       {"realizations", e.realizations},
                               {"m1_mean", e.m1_mean},       {"m1_stderr", e.m1_stderr},
                               {"m2_mean", e.m2_mean},       {"m2_stderr", e.m2_stderr}};
      }
      emit(report.dump(2) + "\n", out);
    } else if (pathology->parsed()) {
      mfi_string* text = nullptr;
      check(mfi_pathology_report_json(cfg.get(), &text));
      emit(take(text), out);
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << mfi_status_string(f.status) << ": " << f.message << "\n";
    return exit_code_for(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kGeneric;
  }
  return kOk;
}
