#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mfinfo/activation.hpp"
#include "mfinfo/meanfield.hpp"
#include "mfinfo/rng.hpp"

namespace mfinfo {

enum class InitKind { gaussian, orthogonal };
enum class InputKind { stable, unit };

InitKind parse_init_kind(std::string_view name);
InputKind parse_input_kind(std::string_view name);
const char* to_string(InitKind kind) noexcept;
const char* to_string(InputKind kind) noexcept;

/// Shape and initialization of a fully connected random network.
/// widths holds N_0 (input dimension) through N_L.
struct NetworkConfig {
  int depth = 1;
  std::vector<int> widths;
  PhasePoint point;
  InitKind init = InitKind::gaussian;
  std::uint64_t seed = 0;

  /// depth layers of equal width fed by an n0-dimensional input.
  static NetworkConfig uniform(int depth, int n0, int width, PhasePoint point, InitKind init,
                               std::uint64_t seed);
};

/// Throws ConfigError on depth < 1, widths.size() != depth + 1, a width < 1,
/// or (orthogonal) unequal hidden widths or N_0 > N_1.
void validate(const NetworkConfig& config);

/// One sampled network. weights[l] is N_{l+1} x N_l, biases[l] has length
/// N_{l+1}; the biases are drawn once and shared by every sample.
struct NetworkRealization {
  NetworkConfig config;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

/// Deterministic in config.seed. Gaussian entries are N(0, sigma_w^2 / N_{l-1});
/// orthogonal layers are sigma_w times a Haar-distributed (semi-)orthogonal matrix.
NetworkRealization init_network(const NetworkConfig& config);

/// rows x cols matrix with orthonormal columns (rows >= cols), Haar
/// distributed: QR of a Gaussian matrix with R's diagonal signs folded into Q.
Eigen::MatrixXd haar_orthogonal(int rows, int cols, Rng& rng);

inline constexpr double kVFloor = 1e-6;

struct StableVariance {
  double variance = 1.0;
  bool floored = false;  // q* <= sigma_b^2 or q* degenerate; variance set to kVFloor
  double q_star = 0.0;
};

/// Input variance v with sigma_w^2 v + sigma_b^2 = q*, so the first layer
/// starts at the fixed point.
StableVariance stable_input_variance(const PhasePoint& point, const Activation& act,
                                     const QuadratureRule& rule = default_rule());

struct InputEnsemble {
  Eigen::MatrixXd samples;  // n_samples x n0
  double variance = 1.0;    // per-component variance actually used
  bool floored = false;
};

/// Zero-mean Gaussian inputs with correlation matrix c00 scaled to the
/// per-component variance implied by `kind`.
InputEnsemble sample_inputs(InputKind kind, const Eigen::MatrixXd& c00, int n_samples,
                            const PhasePoint& point, const Activation& act, std::uint64_t seed,
                            const QuadratureRule& rule = default_rule());

/// Correlation-matrix presets for the input ensemble.
Eigen::MatrixXd identity_correlation(int n);
/// rho^|i-j|, |rho| < 1.
Eigen::MatrixXd toeplitz_correlation(int n, double rho);
/// Wishart(dof) sample normalized to unit diagonal; dof >= n.
Eigen::MatrixXd wishart_correlation(int n, int dof, std::uint64_t seed);

/// Throws Error(invalid_argument) unless c is symmetric positive definite with unit diagonal.
void check_correlation_matrix(const Eigen::MatrixXd& c);

struct SignalRecord {
  int layer = 0;
  Eigen::MatrixXd signals;  // n_samples x N_layer pre-activations
};

/// X^(1) = X W1^T + b1 and X^(l+1) = psi(X^(l)) W^T + b for samples in rows.
/// Record 0 holds the raw inputs.
std::vector<SignalRecord> forward(const NetworkRealization& net, const Eigen::MatrixXd& inputs,
                                  const Activation& act);

/// Pre-activations of the last layer only.
Eigen::MatrixXd forward_output(const NetworkRealization& net, const Eigen::MatrixXd& inputs,
                               const Activation& act);

/// Mean of squared entries of a signal matrix (per-component second moment).
double mean_square(const Eigen::MatrixXd& signals);

}  // namespace mfinfo
