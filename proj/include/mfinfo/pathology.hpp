#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mfinfo/activation.hpp"
#include "mfinfo/meanfield.hpp"
#include "mfinfo/netsim.hpp"

namespace mfinfo {

/// Denominator of the first-layer input/output correlation under the
/// classic iid-input assumption. `standard_deviation` divides by
/// sqrt(sum_k W_jk^2 E[psi(X_k)^2]), which makes the value a correlation;
/// `variance` divides by the sum itself.
enum class CorrelationNormalization { standard_deviation, variance };

/// C(i, j) between input component i and first-layer unit j for the weight
/// realization net.weights[0] (N_1 x N_0), with psi applied to the inputs:
/// W_ji E[psi(s_i Z) Z] / denominator_j, s_i^2 = input_vars[i].
/// Result is N_0 x N_1.
Eigen::MatrixXd first_layer_correlation(
    const NetworkRealization& net, const Activation& act, const Eigen::VectorXd& input_vars,
    CorrelationNormalization norm = CorrelationNormalization::standard_deviation,
    const QuadratureRule& rule = default_rule());

/// Same computation for a bare first-layer weight matrix.
Eigen::MatrixXd first_layer_correlation(
    const Eigen::MatrixXd& w1, const Activation& act, const Eigen::VectorXd& input_vars,
    CorrelationNormalization norm = CorrelationNormalization::standard_deviation,
    const QuadratureRule& rule = default_rule());

inline constexpr int kMinPathologyTrials = 1000;

struct CorrelationVariance {
  double mean = 0.0;
  double variance = 0.0;            // unbiased, across draws
  double fraction_above_one = 0.0;  // share of draws with |C| > 1
  std::vector<double> samples;      // C_00 per draw
};

/// Draws `trials` independent gaussian first layers (width x n0) and
/// collects C_00. Inputs are iid with variance input_var.
CorrelationVariance correlation_variance_mc(
    int n0, int width, const PhasePoint& point, const Activation& act, int trials,
    std::uint64_t seed, double input_var = 1.0,
    CorrelationNormalization norm = CorrelationNormalization::standard_deviation,
    const QuadratureRule& rule = default_rule());

/// v_l = v1 * k^(l-1) for l = 1..depth with
/// k = sigma_w^2 (E[psi(sigma* Z) Z])^2 / q*, which equals beta^2.
/// Throws DegenerateError when q* < kQFloor.
std::vector<double> correlation_variance_recursion(double v1, const PhasePoint& point,
                                                   const Activation& act, int depth,
                                                   const QuadratureRule& rule = default_rule());

/// Monte-Carlo counterpart of the recursion: per trial a fresh stack of
/// gaussian layers carries C_0j forward as
/// C^(l)_j = E[psi(sigma* Z) Z] sum_k W_jk C^(l-1)_k / sqrt(alpha sum_k W_jk^2),
/// alpha = E[psi(sigma* Z)^2]. Returns the across-draw variance of C_00 at
/// layers 1..depth.
std::vector<double> correlation_depth_mc(int n0, int width, const PhasePoint& point,
                                         const Activation& act, int depth, int trials,
                                         std::uint64_t seed, double input_var = 1.0,
                                         const QuadratureRule& rule = default_rule());

}  // namespace mfinfo
