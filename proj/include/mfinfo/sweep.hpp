#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mfinfo/activation.hpp"
#include "mfinfo/infotheory.hpp"
#include "mfinfo/meanfield.hpp"
#include "mfinfo/netsim.hpp"

namespace mfinfo {

struct Range {
  double min = 0.0;
  double max = 1.0;
  int steps = 2;

  /// steps evenly spaced values from min to max inclusive.
  std::vector<double> values() const;
};

enum class Quantity { beta, zeta, qstar, mi_empirical, mi_analytic };
enum class C00Preset { identity, toeplitz, wishart };

Quantity parse_quantity(std::string_view name);
C00Preset parse_c00_preset(std::string_view name);
const char* to_string(Quantity q) noexcept;
const char* to_string(C00Preset p) noexcept;

struct SweepConfig {
  Range sigma_w{0.5, 2.5, 41};
  Range sigma_b{0.0, 0.5, 41};
  std::string activation = "tanh";
  double activation_a = 1.0;  // scaled_tanh only
  double activation_b = 1.0;
  Quantity quantity = Quantity::beta;

  // Finite-width experiments.
  int depth = 10;
  int width = 128;
  int n0 = 0;  // input dimension; 0 means equal to width
  InitKind init = InitKind::orthogonal;
  InputKind input = InputKind::stable;
  C00Preset c00 = C00Preset::identity;
  double c00_rho = 0.5;
  int c00_dof = 0;  // wishart degrees of freedom; 0 means 2 * n0
  int n_samples = 20000;
  int repetitions = 8;
  Jitter jitter;

  // Single-point commands (pathology report, spectrum).
  PhasePoint point{1.2, 0.0};

  // Pathology report.
  int pathology_n0 = 16;
  std::vector<int> pathology_widths{64, 256, 1024};
  int trials = 10000;
  int histogram_bins = 40;

  std::uint64_t seed = 0;
  std::string output;  // CSV path; sidecar and checkpoint derive from it
  int workers = 1;
  int quadrature_order = kDefaultQuadratureOrder;
  bool bits = false;       // report MI in bits instead of nats
  bool checkpoint = true;  // resume from <output>.ckpt when present

  Activation make_activation() const;
  int input_dim() const { return n0 > 0 ? n0 : width; }
};

/// Throws ConfigError naming the first offending field.
void validate(const SweepConfig& config);

/// Flat key/value JSON document. Unknown keys are rejected.
SweepConfig parse_sweep_config(std::string_view json_text, const SweepConfig& base = {});
SweepConfig load_sweep_config(const std::string& path, const SweepConfig& base = {});
std::string to_json(const SweepConfig& config, int indent = 2);

/// Hash of every field that can change a result row (not workers, output
/// or checkpoint handling).
std::uint64_t config_hash(const SweepConfig& config);

/// Per-cell flags; several may be set at once.
enum CellFlag : unsigned {
  kFlagNone = 0,
  kFlagDegenerate = 1u << 0,    // quantity undefined at the trivial fixed point
  kFlagDomain = 1u << 1,        // analytic bound outside its admissible range
  kFlagConditioning = 1u << 2,  // covariance not positive definite
  kFlagConvergence = 1u << 3,
  kFlagEvaluation = 1u << 4,
  kFlagFlooredInput = 1u << 5,  // stable input variance was floored
  kFlagClamped = 1u << 6,       // tiny negative MI clamped to zero
};
std::string flags_to_string(unsigned flags);

struct SweepRow {
  double sigma_w = 0.0;
  double sigma_b = 0.0;
  double value = 0.0;   // NaN when the cell failed
  double stderr_ = 0.0;  // 0 for deterministic quantities
  unsigned flags = kFlagNone;
};

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;  // sigma_w major, sigma_b minor
  int resumed_cells = 0;
  std::string started;
  std::string finished;
};

using ProgressFn = std::function<void(int done, int total)>;

/// Evaluates config.quantity on the sigma_w x sigma_b grid. Per-cell
/// failures are recorded as flags; the sweep itself only throws for invalid
/// configurations or I/O failures.
SweepResult run_sweep(const SweepConfig& config, const ProgressFn& progress = {});

/// Value and standard error of one grid cell; exposed for tests.
SweepRow evaluate_cell(const SweepConfig& config, const Activation& act, const QuadratureRule& rule,
                       const Eigen::MatrixXd& c00, double sigma_w, double sigma_b,
                       std::uint64_t cell_seed);

std::uint64_t cell_seed(std::uint64_t seed, int i, int j) noexcept;

/// Input correlation matrix chosen by config.c00 at dimension input_dim().
Eigen::MatrixXd make_c00(const SweepConfig& config);

std::string format_csv(const SweepResult& result);
std::string format_provenance(const SweepResult& result);
void write_text_file(const std::string& path, const std::string& text);
/// Writes <output> and <output>.json.
void write_sweep(const SweepResult& result, const std::string& output);

struct EocProfileRow {
  double sigma_w = 0.0;
  double sigma_b = 0.0;
  double value = 0.0;
  double stderr_ = 0.0;
  unsigned flags = kFlagNone;
};

struct EocProfile {
  std::vector<EocProfileRow> rows;  // ordered by sigma_w
  std::vector<EocOmission> omitted;
  std::string explanation;  // set when the profile is empty by construction
};

/// Traces the EOC over the sigma_w grid and evaluates the empirical MI bound
/// (or the analytic one when config.quantity is mi_analytic) along it.
EocProfile run_eoc_profile(const SweepConfig& config, const ProgressFn& progress = {});
std::string format_eoc_csv(const EocProfile& profile, bool bits);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct PathologyWidthRow {
  int width = 0;
  double variance = 0.0;
  double mean = 0.0;
  double fraction_above_one = 0.0;
};

struct PathologyReport {
  int n0 = 0;
  PhasePoint point;
  std::vector<PathologyWidthRow> widths;
  std::vector<double> histogram_edges;  // bins + 1 edges over the first width's samples
  std::vector<int> histogram_counts;
  std::vector<double> recursion;  // empty when the fixed point is degenerate
  double beta_squared = 0.0;
  bool has_closed_form = false;
  double closed_form_variance = 0.0;  // n0 == 1 only
};

/// Evaluated at config.point.
PathologyReport run_pathology_report(const SweepConfig& config);
std::string format_pathology_json(const PathologyReport& report);

}  // namespace mfinfo
