#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "mfinfo/activation.hpp"
#include "mfinfo/meanfield.hpp"
#include "mfinfo/netsim.hpp"

namespace mfinfo {

/// First two moments of the eigenvalue distribution of H = J^T J for the
/// input-output Jacobian J of a depth-l network at the fixed point.
struct SpectrumMoments {
  double m1 = 0.0;
  double m2 = 0.0;
  double mu1 = 0.0;  // E[psi'(sigma* Z)^2]
  double mu2 = 0.0;  // E[psi'(sigma* Z)^4]
  double s1 = 0.0;   // 0 for orthogonal, -1 for gaussian weights
  int depth = 0;
};

/// E[psi'(sigma* Z)^(2k)] at the fixed point of `point`. q* below kQFloor
/// is evaluated as exactly 0.
double mu_tilde(int k, const PhasePoint& point, const Activation& act,
                const QuadratureRule& rule = default_rule());
double mu_tilde_at(int k, double q_star, const Activation& act,
                   const QuadratureRule& rule = default_rule());

double s1_coefficient(InitKind init) noexcept;

/// m1 = (sigma_w^2 mu1)^l and
/// m2 = (sigma_w^2 mu1)^(2l) (mu2 / mu1^2 + 1/l - 1 - s1) l.
SpectrumMoments jacobian_moments(const PhasePoint& point, const Activation& act, int depth,
                                 InitKind init, const QuadratureRule& rule = default_rule());

/// J = D_L W_L ... D_1 W_1 with D_i = diag(psi'(pre-activations of layer i))
/// evaluated along the forward pass of `input` (length N_0).
Eigen::MatrixXd empirical_jacobian(const NetworkRealization& net, const Eigen::VectorXd& input,
                                   const Activation& act);

/// Singular values of empirical_jacobian, in decreasing order.
Eigen::VectorXd empirical_jacobian_spectrum(const NetworkRealization& net,
                                            const Eigen::VectorXd& input, const Activation& act);

struct EmpiricalMoments {
  double m1 = 0.0;  // tr(H) / N_0
  double m2 = 0.0;  // tr(H^2) / N_0
};

/// Moments of the eigenvalues of J^T J from traces, without an eigensolve.
EmpiricalMoments empirical_jacobian_moments(const NetworkRealization& net,
                                            const Eigen::VectorXd& input, const Activation& act);

struct MomentEstimate {
  double m1_mean = 0.0;
  double m1_stderr = 0.0;
  double m2_mean = 0.0;
  double m2_stderr = 0.0;
  int realizations = 0;
};

/// Averages empirical moments over independent networks of constant width.
/// Each network is probed at one input drawn with the stable variance; when
/// that variance is degenerate (q* = 0) the probe is the zero signal, which
/// is then the fixed point itself.
MomentEstimate sample_jacobian_moments(const PhasePoint& point, const Activation& act, int depth,
                                       int width, InitKind init, int realizations,
                                       std::uint64_t seed,
                                       const QuadratureRule& rule = default_rule());

}  // namespace mfinfo
