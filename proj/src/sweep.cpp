#include "mfinfo/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mfinfo/pathology.hpp"

#ifndef MFINFO_VERSION
#define MFINFO_VERSION "0.0.0"
#endif

namespace mfinfo {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

unsigned flag_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::degenerate: return kFlagDegenerate;
    case ErrorCode::domain: return kFlagDomain;
    case ErrorCode::conditioning: return kFlagConditioning;
    case ErrorCode::convergence: return kFlagConvergence;
    default: return kFlagEvaluation;
  }
}

bool is_mi(Quantity q) { return q == Quantity::mi_empirical || q == Quantity::mi_analytic; }

struct Accumulator {
  double sum = 0.0;
  double sumsq = 0.0;
  int n = 0;

  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return sum / n; }
  double stderr_() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, (sumsq - n * m * m) / (n - 1));
    return std::sqrt(var / n);
  }
};

// Runs body(index) for index in [0, count) on `workers` threads. Indices are
// dealt round-robin, so the assignment depends only on the worker count and
// results are merged by index.
template <class Body>
void parallel_for(int count, int workers, Body&& body) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) body(k);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int k = w; k < count; k += workers) body(k);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::string checkpoint_path(const std::string& output) { return output + ".ckpt"; }

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::vector<double> Range::values() const {
  std::vector<double> out(static_cast<std::size_t>(std::max(steps, 0)));
  for (int k = 0; k < steps; ++k) {
    out[k] = steps == 1 ? min : min + (max - min) * static_cast<double>(k) / (steps - 1);
  }
  if (steps >= 2) out.back() = max;
  return out;
}

Quantity parse_quantity(std::string_view name) {
  if (name == "beta") return Quantity::beta;
  if (name == "zeta") return Quantity::zeta;
  if (name == "qstar") return Quantity::qstar;
  if (name == "mi_empirical") return Quantity::mi_empirical;
  if (name == "mi_analytic") return Quantity::mi_analytic;
  throw ConfigError("unknown quantity '" + std::string(name) +
                    "' (beta|zeta|qstar|mi_empirical|mi_analytic)");
}

C00Preset parse_c00_preset(std::string_view name) {
  if (name == "identity") return C00Preset::identity;
  if (name == "toeplitz") return C00Preset::toeplitz;
  if (name == "wishart") return C00Preset::wishart;
  throw ConfigError("unknown c00 preset '" + std::string(name) + "' (identity|toeplitz|wishart)");
}

const char* to_string(Quantity q) noexcept {
  switch (q) {
    case Quantity::beta: return "beta";
    case Quantity::zeta: return "zeta";
    case Quantity::qstar: return "qstar";
    case Quantity::mi_empirical: return "mi_empirical";
    case Quantity::mi_analytic: return "mi_analytic";
  }
  return "?";
}

const char* to_string(C00Preset p) noexcept {
  switch (p) {
    case C00Preset::identity: return "identity";
    case C00Preset::toeplitz: return "toeplitz";
    case C00Preset::wishart: return "wishart";
  }
  return "?";
}

Activation SweepConfig::make_activation() const {
  return Activation::from_name(activation, activation_a, activation_b);
}

namespace {

void check_range(const Range& r, const char* name, double lower_bound, bool strict) {
  std::ostringstream os;
  if (r.steps < 2) {
    os << name << ".steps must be at least 2, got " << r.steps;
    throw ConfigError(os.str());
  }
  if (!std::isfinite(r.min) || !std::isfinite(r.max)) {
    os << name << " range must be finite";
    throw ConfigError(os.str());
  }
  if (r.min > r.max) {
    os << name << ".min (" << r.min << ") exceeds " << name << ".max (" << r.max << ")";
    throw ConfigError(os.str());
  }
  if (strict ? !(r.min > lower_bound) : !(r.min >= lower_bound)) {
    os << name << ".min must be " << (strict ? "> " : ">= ") << lower_bound;
    throw ConfigError(os.str());
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void validate(const SweepConfig& c) {
  check_range(c.sigma_w, "sigma_w", 0.0, true);
  check_range(c.sigma_b, "sigma_b", 0.0, false);
  c.make_activation();
  validate(c.point);
  require(c.depth >= 1, "depth must be at least 1");
  require(c.width >= 1, "width must be at least 1");
  require(c.n0 >= 0, "n0 must be nonnegative");
  require(c.init != InitKind::orthogonal || c.input_dim() <= c.width,
          "orthogonal init needs n0 <= width");
  require(std::abs(c.c00_rho) < 1.0, "c00_rho must satisfy |rho| < 1");
  require(c.c00_dof == 0 || c.c00_dof >= c.input_dim(), "c00_dof must be at least n0");
  require(c.repetitions >= 1, "repetitions must be at least 1");
  require(c.n_samples >= 1, "n_samples must be at least 1");
  if (c.quantity == Quantity::mi_empirical) {
    const int needed = c.input_dim() + c.width + 2;
    require(c.n_samples >= needed,
            "n_samples must be at least n0 + width + 2 = " + std::to_string(needed));
  }
  require(std::isfinite(c.jitter.value) && c.jitter.value >= 0.0, "jitter must be finite and nonnegative");
  require(c.pathology_n0 >= 1, "pathology_n0 must be at least 1");
  require(!c.pathology_widths.empty(), "pathology_widths must not be empty");
  for (const int w : c.pathology_widths) require(w >= 1, "pathology widths must be at least 1");
  require(c.trials >= kMinPathologyTrials,
          "trials must be at least " + std::to_string(kMinPathologyTrials));
  require(c.histogram_bins >= 1, "histogram_bins must be at least 1");
  require(c.workers >= 1, "workers must be at least 1");
  require(c.quadrature_order >= 2 && c.quadrature_order <= 4096,
          "quadrature_order must be in [2, 4096]");
}

namespace {

json config_json(const SweepConfig& c, bool for_hash) {
  json j;
  j["sigma_w_min"] = c.sigma_w.min;
  j["sigma_w_max"] = c.sigma_w.max;
  j["sigma_w_steps"] = c.sigma_w.steps;
  j["sigma_b_min"] = c.sigma_b.min;
  j["sigma_b_max"] = c.sigma_b.max;
  j["sigma_b_steps"] = c.sigma_b.steps;
  j["activation"] = c.activation;
  j["activation_a"] = c.activation_a;
  j["activation_b"] = c.activation_b;
  j["quantity"] = to_string(c.quantity);
  j["depth"] = c.depth;
  j["width"] = c.width;
  j["n0"] = c.n0;
  j["init"] = to_string(c.init);
  j["input"] = to_string(c.input);
  j["c00"] = to_string(c.c00);
  j["c00_rho"] = c.c00_rho;
  j["c00_dof"] = c.c00_dof;
  j["n_samples"] = c.n_samples;
  j["repetitions"] = c.repetitions;
  j["jitter"] = c.jitter.value;
  j["jitter_mode"] = c.jitter.mode == JitterMode::relative ? "relative" : "absolute";
  j["sigma_w"] = c.point.sigma_w;
  j["sigma_b"] = c.point.sigma_b;
  j["pathology_n0"] = c.pathology_n0;
  j["pathology_widths"] = c.pathology_widths;
  j["trials"] = c.trials;
  j["histogram_bins"] = c.histogram_bins;
  j["seed"] = c.seed;
  j["quadrature_order"] = c.quadrature_order;
  if (!for_hash) {
    j["output"] = c.output;
    j["workers"] = c.workers;
    j["bits"] = c.bits;
    j["checkpoint"] = c.checkpoint;
  }
  return j;
}

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

}  // namespace

std::string to_json(const SweepConfig& config, int indent) {
  return config_json(config, false).dump(indent);
}

std::uint64_t config_hash(const SweepConfig& config) {
  const std::string text = config_json(config, true).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SweepConfig parse_sweep_config(std::string_view json_text, const SweepConfig& base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  SweepConfig c = base;
  for (const auto& [key, v] : doc.items()) {
    if (key == "sigma_w_min") c.sigma_w.min = get_as<double>(v, key);
    else if (key == "sigma_w_max") c.sigma_w.max = get_as<double>(v, key);
    else if (key == "sigma_w_steps") c.sigma_w.steps = get_as<int>(v, key);
    else if (key == "sigma_b_min") c.sigma_b.min = get_as<double>(v, key);
    else if (key == "sigma_b_max") c.sigma_b.max = get_as<double>(v, key);
    else if (key == "sigma_b_steps") c.sigma_b.steps = get_as<int>(v, key);
    else if (key == "activation") c.activation = get_as<std::string>(v, key);
    else if (key == "activation_a") c.activation_a = get_as<double>(v, key);
    else if (key == "activation_b") c.activation_b = get_as<double>(v, key);
    else if (key == "quantity") c.quantity = parse_quantity(get_as<std::string>(v, key));
    else if (key == "depth") c.depth = get_as<int>(v, key);
    else if (key == "width") c.width = get_as<int>(v, key);
    else if (key == "n0") c.n0 = get_as<int>(v, key);
    else if (key == "init") c.init = parse_init_kind(get_as<std::string>(v, key));
    else if (key == "input") c.input = parse_input_kind(get_as<std::string>(v, key));
    else if (key == "c00") c.c00 = parse_c00_preset(get_as<std::string>(v, key));
    else if (key == "c00_rho") c.c00_rho = get_as<double>(v, key);
    else if (key == "c00_dof") c.c00_dof = get_as<int>(v, key);
    else if (key == "n_samples") c.n_samples = get_as<int>(v, key);
    else if (key == "repetitions") c.repetitions = get_as<int>(v, key);
    else if (key == "jitter") c.jitter.value = get_as<double>(v, key);
    else if (key == "jitter_mode") {
      const auto mode = get_as<std::string>(v, key);
      if (mode == "relative") c.jitter.mode = JitterMode::relative;
      else if (mode == "absolute") c.jitter.mode = JitterMode::absolute;
      else throw ConfigError("jitter_mode must be relative or absolute");
    }
    else if (key == "sigma_w") c.point.sigma_w = get_as<double>(v, key);
    else if (key == "sigma_b") c.point.sigma_b = get_as<double>(v, key);
    else if (key == "pathology_n0") c.pathology_n0 = get_as<int>(v, key);
    else if (key == "pathology_widths") c.pathology_widths = get_as<std::vector<int>>(v, key);
    else if (key == "trials") c.trials = get_as<int>(v, key);
    else if (key == "histogram_bins") c.histogram_bins = get_as<int>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "output") c.output = get_as<std::string>(v, key);
    else if (key == "workers") c.workers = get_as<int>(v, key);
    else if (key == "quadrature_order") c.quadrature_order = get_as<int>(v, key);
    else if (key == "bits") c.bits = get_as<bool>(v, key);
    else if (key == "checkpoint") c.checkpoint = get_as<bool>(v, key);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

SweepConfig load_sweep_config(const std::string& path, const SweepConfig& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sweep_config(ss.str(), base);
}

std::string flags_to_string(unsigned flags) {
  static const std::pair<unsigned, const char*> names[] = {
      {kFlagDegenerate, "degenerate"},   {kFlagDomain, "domain"},
      {kFlagConditioning, "conditioning"}, {kFlagConvergence, "convergence"},
      {kFlagEvaluation, "evaluation"},   {kFlagFlooredInput, "floored_input"},
      {kFlagClamped, "clamped"},
  };
  std::string out;
  for (const auto& [bit, name] : names) {
    if (!(flags & bit)) continue;
    if (!out.empty()) out += '|';
    out += name;
  }
  return out;
}

std::uint64_t cell_seed(std::uint64_t seed, int i, int j) noexcept {
  return derive_seed(seed, {static_cast<std::uint64_t>(Stream::cell), static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(j)});
}

Eigen::MatrixXd make_c00(const SweepConfig& config) {
  const int n = config.input_dim();
  switch (config.c00) {
    case C00Preset::identity: return identity_correlation(n);
    case C00Preset::toeplitz: return toeplitz_correlation(n, config.c00_rho);
    case C00Preset::wishart:
      return wishart_correlation(n, config.c00_dof > 0 ? config.c00_dof : 2 * n, config.seed);
  }
  return identity_correlation(n);
}

SweepRow evaluate_cell(const SweepConfig& config, const Activation& act, const QuadratureRule& rule,
                       const Eigen::MatrixXd& c00, double sigma_w, double sigma_b,
                       std::uint64_t seed) {
  SweepRow row;
  row.sigma_w = sigma_w;
  row.sigma_b = sigma_b;
  const PhasePoint point{sigma_w, sigma_b};
  try {
    switch (config.quantity) {
      case Quantity::beta:
        row.value = beta(point, act, rule);
        return row;
      case Quantity::zeta:
        row.value = slope_zeta(point, act, rule);
        return row;
      case Quantity::qstar:
        row.value = fixed_point_variance(point, act, rule);
        return row;
      case Quantity::mi_empirical:
      case Quantity::mi_analytic:
        break;
    }

    Accumulator acc;
    const double b = config.quantity == Quantity::mi_analytic ? beta(point, act, rule) : 0.0;
    const Eigen::MatrixXd cll = Eigen::MatrixXd::Identity(config.width, config.width);
    NetworkConfig net_config =
        NetworkConfig::uniform(config.depth, config.input_dim(), config.width, point, config.init, 0);
    for (int r = 0; r < config.repetitions; ++r) {
      net_config.seed = derive_seed(seed, Stream::repetition, static_cast<std::uint64_t>(r));
      const NetworkRealization net = init_network(net_config);
      MIBound mi;
      if (config.quantity == Quantity::mi_empirical) {
        const InputEnsemble in = sample_inputs(config.input, c00, config.n_samples, point, act,
                                               derive_seed(net_config.seed, Stream::inputs), rule);
        if (in.floored) row.flags |= kFlagFlooredInput;
        const Eigen::MatrixXd out = forward_output(net, in.samples, act);
        mi = mi_lower_bound(estimate_covariances(in.samples, out, config.jitter));
      } else {
        mi = analytic_mi_bound(c00, cll, net.weights, b, point);
      }
      if (mi.clamped) row.flags |= kFlagClamped;
      acc.add(mi.value);
    }
    row.value = acc.mean();
    row.stderr_ = acc.stderr_();
  } catch (const Error& e) {
    row.flags |= flag_for(e);
    row.value = kNaN;
    row.stderr_ = kNaN;
  }
  return row;
}

SweepResult run_sweep(const SweepConfig& config, const ProgressFn& progress) {
  validate(config);
  const Activation act = config.make_activation();
  const auto rule = gauss_hermite_rule(config.quadrature_order);
  const Eigen::MatrixXd c00 = is_mi(config.quantity) ? make_c00(config) : Eigen::MatrixXd();
  const std::vector<double> ws = config.sigma_w.values();
  const std::vector<double> bs = config.sigma_b.values();
  const int nw = static_cast<int>(ws.size());
  const int nb = static_cast<int>(bs.size());
  const int total = nw * nb;

  SweepResult result;
  result.config = config;
  result.started = utc_now();
  result.rows.resize(static_cast<std::size_t>(total));
  std::vector<char> done(static_cast<std::size_t>(total), 0);

  // Resume from a checkpoint written by an identical configuration.
  const bool use_ckpt = config.checkpoint && !config.output.empty();
  const std::string ckpt = use_ckpt ? checkpoint_path(config.output) : std::string();
  const std::string header = "mfinfo-checkpoint " + hex64(config_hash(config));
  if (use_ckpt) {
    std::ifstream in(ckpt);
    std::string line;
    if (in && std::getline(in, line) && line == header) {
      while (std::getline(in, line)) {
        std::istringstream ls(line);
        int i = -1, j = -1;
        std::string v, se;
        unsigned flags = 0;
        if (!(ls >> i >> j >> v >> se >> flags)) break;  // torn final line
        if (i < 0 || i >= nw || j < 0 || j >= nb) continue;
        const int k = i * nb + j;
        SweepRow& row = result.rows[static_cast<std::size_t>(k)];
        row.sigma_w = ws[i];
        row.sigma_b = bs[j];
        row.value = std::strtod(v.c_str(), nullptr);
        row.stderr_ = std::strtod(se.c_str(), nullptr);
        row.flags = flags;
        if (!done[static_cast<std::size_t>(k)]) ++result.resumed_cells;
        done[static_cast<std::size_t>(k)] = 1;
      }
    }
  }

  std::ofstream ckpt_out;
  std::mutex ckpt_mutex;
  if (use_ckpt) {
    if (result.resumed_cells == 0) {
      ckpt_out.open(ckpt, std::ios::trunc);
      ckpt_out << header << '\n';
    } else {
      ckpt_out.open(ckpt, std::ios::app);
    }
    if (!ckpt_out) throw Error(ErrorCode::io, "cannot write checkpoint '" + ckpt + "'");
    ckpt_out.flush();
  }

  std::atomic<int> completed{result.resumed_cells};
  parallel_for(nw, config.workers, [&](int i) {
    for (int j = 0; j < nb; ++j) {
      const int k = i * nb + j;
      if (done[static_cast<std::size_t>(k)]) continue;
      SweepRow row = evaluate_cell(config, act, *rule, c00, ws[i], bs[j], cell_seed(config.seed, i, j));
      result.rows[static_cast<std::size_t>(k)] = row;
      if (use_ckpt) {
        std::lock_guard<std::mutex> lock(ckpt_mutex);
        ckpt_out << i << ' ' << j << ' ' << fmt17(row.value) << ' ' << fmt17(row.stderr_) << ' '
                 << row.flags << '\n';
        ckpt_out.flush();
      }
      const int n = ++completed;
      if (progress) progress(n, total);
    }
  });

  result.finished = utc_now();
  if (use_ckpt) {
    ckpt_out.close();
    std::error_code ec;
    std::filesystem::remove(ckpt, ec);
  }
  return result;
}

std::string format_csv(const SweepResult& result) {
  const bool bits = result.config.bits && is_mi(result.config.quantity);
  std::ostringstream os;
  os << "sigma_w,sigma_b,value,stderr,flags\n";
  for (const SweepRow& r : result.rows) {
    const double v = bits ? nats_to_bits(r.value) : r.value;
    const double se = bits ? nats_to_bits(r.stderr_) : r.stderr_;
    os << fmt17(r.sigma_w) << ',' << fmt17(r.sigma_b) << ',' << fmt17(v) << ',' << fmt17(se) << ','
       << flags_to_string(r.flags) << '\n';
  }
  return os.str();
}

std::string format_provenance(const SweepResult& result) {
  const SweepConfig& c = result.config;
  json j;
  j["config"] = config_json(c, false);
  j["seed"] = c.seed;
  j["version"] = MFINFO_VERSION;
  j["quadrature_order"] = c.quadrature_order;
  j["jitter"] = {{"mode", c.jitter.mode == JitterMode::relative ? "relative" : "absolute"},
                 {"value", c.jitter.value}};
  j["units"] = is_mi(c.quantity) ? (c.bits ? "bits" : "nats") : "";
  j["config_hash"] = hex64(config_hash(c));
  j["resumed_cells"] = result.resumed_cells;
  j["timestamps"] = {{"started", result.started}, {"finished", result.finished}};
  return j.dump(2) + "\n";
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
}

void write_sweep(const SweepResult& result, const std::string& output) {
  write_text_file(output, format_csv(result));
  write_text_file(output + ".json", format_provenance(result));
}

EocProfile run_eoc_profile(const SweepConfig& config, const ProgressFn& progress) {
  validate(config);
  const Activation act = config.make_activation();
  EocProfile profile;
  if (act.oracle_only()) {
    profile.explanation =
        "activation '" + act.name() +
        "' has no edge-of-chaos curve: zeta = sigma_w^2 for every sigma_b, so the curve degenerates";
    return profile;
  }

  const auto rule = gauss_hermite_rule(config.quadrature_order);
  const std::vector<double> ws = config.sigma_w.values();
  const EocCurve curve = eoc_curve(act, ws, kDefaultEocSigmaBMax, 1e-10, *rule);
  profile.omitted = curve.omitted;

  SweepConfig mi_config = config;
  if (!is_mi(mi_config.quantity)) mi_config.quantity = Quantity::mi_empirical;
  const Eigen::MatrixXd c00 = make_c00(mi_config);
  const int n = static_cast<int>(curve.points.size());
  profile.rows.resize(static_cast<std::size_t>(n));
  std::atomic<int> completed{0};
  parallel_for(n, config.workers, [&](int k) {
    const PhasePoint p = curve.points[static_cast<std::size_t>(k)];
    const SweepRow row = evaluate_cell(mi_config, act, *rule, c00, p.sigma_w, p.sigma_b,
                                       derive_seed(config.seed, Stream::cell, static_cast<std::uint64_t>(k)));
    profile.rows[static_cast<std::size_t>(k)] = {row.sigma_w, row.sigma_b, row.value, row.stderr_, row.flags};
    const int d = ++completed;
    if (progress) progress(d, n);
  });
  return profile;
}

std::string format_eoc_csv(const EocProfile& profile, bool bits) {
  std::ostringstream os;
  if (!profile.explanation.empty()) os << "# " << profile.explanation << '\n';
  for (const EocOmission& o : profile.omitted)
    os << "# omitted sigma_w=" << fmt17(o.sigma_w) << ": " << o.reason << '\n';
  os << "sigma_w,sigma_b,value,stderr,flags\n";
  for (const EocProfileRow& r : profile.rows) {
    const double v = bits ? nats_to_bits(r.value) : r.value;
    const double se = bits ? nats_to_bits(r.stderr_) : r.stderr_;
    os << fmt17(r.sigma_w) << ',' << fmt17(r.sigma_b) << ',' << fmt17(v) << ',' << fmt17(se) << ','
       << flags_to_string(r.flags) << '\n';
  }
  return os.str();
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t s = 0; s < idx.size();) {
    std::size_t e = s;
    while (e + 1 < idx.size() && x[idx[e + 1]] == x[idx[s]]) ++e;
    const double r = 0.5 * static_cast<double>(s + e) + 1.0;
    for (std::size_t t = s; t <= e; ++t) ranks[idx[t]] = r;
    s = e + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorCode::invalid_argument, "spearman needs two equal-length series of length >= 2");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < rx.size(); ++k) {
    sxy += (rx[k] - mx) * (ry[k] - my);
    sxx += (rx[k] - mx) * (rx[k] - mx);
    syy += (ry[k] - my) * (ry[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

PathologyReport run_pathology_report(const SweepConfig& config) {
  validate(config);
  const Activation act = config.make_activation();
  const auto rule = gauss_hermite_rule(config.quadrature_order);

  PathologyReport report;
  report.n0 = config.pathology_n0;
  report.point = config.point;

  std::vector<CorrelationVariance> mc(config.pathology_widths.size());
  parallel_for(static_cast<int>(mc.size()), config.workers, [&](int k) {
    const int width = config.pathology_widths[static_cast<std::size_t>(k)];
    mc[static_cast<std::size_t>(k)] =
        correlation_variance_mc(config.pathology_n0, width, config.point, act, config.trials,
                                derive_seed(config.seed, Stream::instance, static_cast<std::uint64_t>(width)),
                                1.0, CorrelationNormalization::standard_deviation, *rule);
  });
  for (std::size_t k = 0; k < mc.size(); ++k)
    report.widths.push_back({config.pathology_widths[k], mc[k].variance, mc[k].mean,
                             mc[k].fraction_above_one});

  const std::vector<double>& samples = mc.front().samples;
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const int bins = config.histogram_bins;
  report.histogram_counts.assign(static_cast<std::size_t>(bins), 0);
  for (int b = 0; b <= bins; ++b) report.histogram_edges.push_back(lo + (hi - lo) * b / bins);
  for (const double s : samples) {
    int b = static_cast<int>((s - lo) / (hi - lo) * bins);
    b = std::clamp(b, 0, bins - 1);
    ++report.histogram_counts[static_cast<std::size_t>(b)];
  }

  try {
    report.recursion =
        correlation_variance_recursion(mc.front().variance, config.point, act, config.depth, *rule);
    const double b = beta(config.point, act, *rule);
    report.beta_squared = b * b;
  } catch (const DegenerateError&) {
    report.recursion.clear();
  }

  if (config.pathology_n0 == 1) {
    // C = sign(W) E[psi(Z) Z] / sqrt(E[psi(Z)^2]) for unit-variance input.
    const double m = gauss_integrate([&](double z) { return act.eval(z) * z; }, *rule);
    const double s2 = gauss_integrate([&](double z) { return act.eval(z) * act.eval(z); }, *rule);
    report.has_closed_form = true;
    report.closed_form_variance = m * m / s2;
  }
  return report;
}

std::string format_pathology_json(const PathologyReport& r) {
  json j;
  j["n0"] = r.n0;
  j["sigma_w"] = r.point.sigma_w;
  j["sigma_b"] = r.point.sigma_b;
  j["normalization"] = "standard_deviation";
  json widths = json::array();
  for (const auto& w : r.widths)
    widths.push_back({{"width", w.width},
                      {"variance", w.variance},
                      {"mean", w.mean},
                      {"fraction_abs_gt_1", w.fraction_above_one}});
  j["variance_by_width"] = widths;
  j["histogram"] = {{"edges", r.histogram_edges}, {"counts", r.histogram_counts}};
  j["recursion"] = r.recursion;
  j["beta_squared"] = r.beta_squared;
  if (r.has_closed_form) j["closed_form_variance"] = r.closed_form_variance;
  return j.dump(2) + "\n";
}

}  // namespace mfinfo
