#pragma once

#include <vector>

#include <Eigen/Dense>

#include "mfinfo/meanfield.hpp"

namespace mfinfo {

enum class JitterMode { relative, absolute };

/// Diagonal regularization. `relative` scales value by the mean diagonal of
/// each block; `absolute` adds value as is.
struct Jitter {
  JitterMode mode = JitterMode::relative;
  double value = 1e-8;

  static Jitter none() { return {JitterMode::absolute, 0.0}; }
};

/// Covariance blocks of (Z, Z^(l)). The joint matrix is
/// [[sigma0, cross], [cross^T, sigmal]]; jitter0 and jitterl record what was
/// added to each diagonal block.
struct CovarianceTriple {
  Eigen::MatrixXd sigma0;
  Eigen::MatrixXd sigmal;
  Eigen::MatrixXd cross;  // N_0 x N_l
  double jitter0 = 0.0;
  double jitterl = 0.0;

  Eigen::MatrixXd joint() const;
};

/// Unbiased sample covariances of inputs (rows are samples) and layer
/// signals. Needs at least N_0 + N_l + 2 rows.
CovarianceTriple estimate_covariances(const Eigen::MatrixXd& inputs,
                                      const Eigen::MatrixXd& layer_signals, Jitter jitter = {});

/// Applies jitter to the diagonal blocks of an already assembled triple.
CovarianceTriple regularize(CovarianceTriple triple, Jitter jitter);

enum class MIMethod { empirical, analytic };
const char* to_string(MIMethod method) noexcept;

struct MIBound {
  double value = 0.0;  // nats, >= 0
  MIMethod method = MIMethod::empirical;
  // empirical: smallest squared Cholesky pivot of the joint matrix;
  // analytic: smallest 1 - beta^(2l) omega_i.
  double conditioning = 0.0;
  bool clamped = false;  // raw value was in [-1e-9, 0) and set to 0
  double raw = 0.0;
};

inline constexpr double kMIClampTolerance = 1e-9;

/// 1/2 [logdet(sigma0) + logdet(sigmal) - logdet(joint)] by Cholesky
/// factorization. Throws ConditioningError when a block or the joint matrix
/// is not positive definite.
MIBound mi_lower_bound(const CovarianceTriple& triple);

/// Natural-log log-determinant of an SPD matrix; throws ConditioningError
/// carrying the smallest eigenvalue otherwise.
double logdet_spd(const Eigen::MatrixXd& m, const char* what = "matrix");

/// P = prod_i (W_i / sigma_w)^T / sqrt(N_{i-1}), an N_0 x N_l matrix.
Eigen::MatrixXd weight_product(const std::vector<Eigen::MatrixXd>& weights, double sigma_w);

/// C^(0,l) = beta^l C^(0,0) P, built one layer at a time.
Eigen::MatrixXd analytic_correlation_recursion(const Eigen::MatrixXd& c00,
                                               const std::vector<Eigen::MatrixXd>& weights,
                                               double beta, const PhasePoint& point);

/// M = P C_ll^{-1} P^T (N_0 x N_0).
Eigen::MatrixXd m_tilde(const std::vector<Eigen::MatrixXd>& weights, const Eigen::MatrixXd& cll,
                        double sigma_w);

/// -1/2 log det(I - beta^(2l) M C00) through omega = eig(L^T M L), C00 = L L^T.
/// Throws DomainError if some 1 - beta^(2l) omega_i <= 0.
MIBound analytic_mi_bound(const Eigen::MatrixXd& c00, const Eigen::MatrixXd& cll,
                          const std::vector<Eigen::MatrixXd>& weights, double beta,
                          const PhasePoint& point);

/// Same bound from an explicit M and depth.
MIBound analytic_mi_bound_from_m(const Eigen::MatrixXd& c00, const Eigen::MatrixXd& m,
                                 double beta, int depth);

/// Correlation-form bound 1/2 log(det C00 / det(C00 - C0l C_ll^{-1} C0l^T)).
MIBound correlation_form_mi(const Eigen::MatrixXd& c00, const Eigen::MatrixXd& cll,
                            const Eigen::MatrixXd& c0l);

struct MonotonicityReport {
  Eigen::VectorXd omega;             // eigenvalues of L^T M L
  std::vector<double> determinants;  // det(I - beta^(2l) M C00), direct
  std::vector<double> factorized;    // prod(1 - beta^(2l) omega_i)
  double max_factorization_error = 0.0;
  bool factorization_ok = false;   // every |direct - factorized| <= 1e-10
  bool strictly_decreasing = false;
  bool passed = false;
};

/// Checks det(I - beta^(2l) M C00) = prod(1 - beta^(2l) omega_i) on every
/// grid value and that it decreases along the (increasing) grid. With all
/// omega_i = 0 the determinant is constant and the check passes.
MonotonicityReport monotonicity_check(const Eigen::MatrixXd& c00, const Eigen::MatrixXd& m,
                                      const std::vector<double>& beta_grid, int depth);

inline double nats_to_bits(double nats) { return nats / 0.69314718055994530942; }

}  // namespace mfinfo
