#include "mfinfo/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace mfinfo {

namespace {

double smallest_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double jitter_amount(const Eigen::MatrixXd& block, Jitter jitter) {
  if (!(jitter.value >= 0.0) || !std::isfinite(jitter.value))
    throw ConfigError("jitter must be finite and nonnegative");
  if (jitter.mode == JitterMode::absolute || block.rows() == 0) return jitter.value;
  return jitter.value * block.diagonal().mean();
}

void require_square(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << " must be square and non-empty (got " << m.rows() << "x" << m.cols() << ")";
    throw Error(ErrorCode::invalid_argument, os.str());
  }
}

Eigen::MatrixXd cholesky_factor(const Eigen::MatrixXd& spd, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(spd);
  if (llt.info() != Eigen::Success) {
    const double lambda = smallest_eigenvalue(spd);
    std::ostringstream os;
    os << what << " is not positive definite (smallest eigenvalue " << lambda << ")";
    throw ConditioningError(os.str(), lambda);
  }
  return llt.matrixL();
}

// Eigenvalues of L^T M L for C00 = L L^T.
Eigen::VectorXd omega_values(const Eigen::MatrixXd& c00, const Eigen::MatrixXd& m) {
  require_square(c00, "C00");
  require_square(m, "M");
  if (m.rows() != c00.rows()) throw Error(ErrorCode::invalid_argument, "M and C00 differ in size");
  const Eigen::MatrixXd lower = cholesky_factor(c00, "C00");
  Eigen::MatrixXd a = lower.transpose() * m * lower;
  a = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

MIBound finish(double raw, MIMethod method, double conditioning) {
  if (!std::isfinite(raw)) throw EvaluationError("mutual information bound is not finite");
  if (raw < -kMIClampTolerance) {
    std::ostringstream os;
    os << "mutual information bound is negative (" << raw << ")";
    throw EvaluationError(os.str());
  }
  MIBound out;
  out.raw = raw;
  out.method = method;
  out.conditioning = conditioning;
  out.clamped = raw < 0.0;
  out.value = std::max(raw, 0.0);
  return out;
}

}  // namespace

const char* to_string(MIMethod method) noexcept {
  return method == MIMethod::empirical ? "empirical" : "analytic";
}

Eigen::MatrixXd CovarianceTriple::joint() const {
  const Eigen::Index n0 = sigma0.rows();
  const Eigen::Index nl = sigmal.rows();
  Eigen::MatrixXd j(n0 + nl, n0 + nl);
  j.topLeftCorner(n0, n0) = sigma0;
  j.topRightCorner(n0, nl) = cross;
  j.bottomLeftCorner(nl, n0) = cross.transpose();
  j.bottomRightCorner(nl, nl) = sigmal;
  return j;
}

CovarianceTriple regularize(CovarianceTriple triple, Jitter jitter) {
  const double j0 = jitter_amount(triple.sigma0, jitter);
  const double jl = jitter_amount(triple.sigmal, jitter);
  triple.sigma0.diagonal().array() += j0;
  triple.sigmal.diagonal().array() += jl;
  triple.jitter0 += j0;
  triple.jitterl += jl;
  return triple;
}

CovarianceTriple estimate_covariances(const Eigen::MatrixXd& inputs,
                                      const Eigen::MatrixXd& layer_signals, Jitter jitter) {
  if (inputs.rows() != layer_signals.rows())
    throw Error(ErrorCode::invalid_argument, "inputs and layer signals need equal sample counts");
  const Eigen::Index n0 = inputs.cols();
  const Eigen::Index nl = layer_signals.cols();
  const Eigen::Index required = n0 + nl + 2;
  if (inputs.rows() < required) {
    std::ostringstream os;
    os << "need at least " << required << " samples for " << n0 << "+" << nl
       << " dimensions, got " << inputs.rows();
    throw Error(ErrorCode::invalid_argument, os.str());
  }

  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd centered(n, n0 + nl);
  centered.leftCols(n0) = inputs.rowwise() - inputs.colwise().mean();
  centered.rightCols(nl) = layer_signals.rowwise() - layer_signals.colwise().mean();

  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(n0 + nl, n0 + nl);
  joint.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(),
                                                   1.0 / static_cast<double>(n - 1));
  joint = joint.selfadjointView<Eigen::Lower>();

  CovarianceTriple triple;
  triple.sigma0 = joint.topLeftCorner(n0, n0);
  triple.sigmal = joint.bottomRightCorner(nl, nl);
  triple.cross = joint.topRightCorner(n0, nl);
  return regularize(std::move(triple), jitter);
}

double logdet_spd(const Eigen::MatrixXd& m, const char* what) {
  const Eigen::MatrixXd lower = cholesky_factor(m, what);
  return 2.0 * lower.diagonal().array().log().sum();
}

MIBound mi_lower_bound(const CovarianceTriple& triple) {
  require_square(triple.sigma0, "sigma0");
  require_square(triple.sigmal, "sigmal");
  if (triple.cross.rows() != triple.sigma0.rows() || triple.cross.cols() != triple.sigmal.rows())
    throw Error(ErrorCode::invalid_argument, "cross-covariance shape does not match the blocks");

  const double ld0 = logdet_spd(triple.sigma0, "input covariance");
  const double ldl = logdet_spd(triple.sigmal, "layer covariance");
  const Eigen::MatrixXd lj = cholesky_factor(triple.joint(), "joint covariance");
  const double ldj = 2.0 * lj.diagonal().array().log().sum();
  const double pivot = lj.diagonal().array().square().minCoeff();
  return finish(0.5 * (ld0 + ldl - ldj), MIMethod::empirical, pivot);
}

Eigen::MatrixXd weight_product(const std::vector<Eigen::MatrixXd>& weights, double sigma_w) {
  if (!(sigma_w > 0.0)) throw ConfigError("sigma_w must be positive");
  if (weights.empty()) throw Error(ErrorCode::invalid_argument, "weight list is empty");
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(weights.front().cols(), weights.front().cols());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const Eigen::MatrixXd& w = weights[i];
    if (w.cols() != p.cols()) {
      std::ostringstream os;
      os << "weight " << i + 1 << " has " << w.cols() << " columns, expected " << p.cols();
      throw Error(ErrorCode::invalid_argument, os.str());
    }
    const double scale = 1.0 / (sigma_w * std::sqrt(static_cast<double>(w.cols())));
    p = scale * (p * w.transpose());
  }
  return p;
}

Eigen::MatrixXd analytic_correlation_recursion(const Eigen::MatrixXd& c00,
                                               const std::vector<Eigen::MatrixXd>& weights,
                                               double beta, const PhasePoint& point) {
  require_square(c00, "C00");
  validate(point);
  Eigen::MatrixXd c = c00;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const Eigen::MatrixXd& w = weights[i];
    if (w.cols() != c.cols()) {
      std::ostringstream os;
      os << "weight " << i + 1 << " has " << w.cols() << " columns, expected " << c.cols();
      throw Error(ErrorCode::invalid_argument, os.str());
    }
    const double scale = beta / (point.sigma_w * std::sqrt(static_cast<double>(w.cols())));
    c = scale * (c * w.transpose());
  }
  return c;
}

Eigen::MatrixXd m_tilde(const std::vector<Eigen::MatrixXd>& weights, const Eigen::MatrixXd& cll,
                        double sigma_w) {
  const Eigen::MatrixXd p = weight_product(weights, sigma_w);
  require_square(cll, "C_ll");
  if (cll.rows() != p.cols()) throw Error(ErrorCode::invalid_argument, "C_ll does not match the last layer width");
  Eigen::LLT<Eigen::MatrixXd> llt(cll);
  if (llt.info() != Eigen::Success) {
    const double lambda = smallest_eigenvalue(cll);
    throw ConditioningError("C_ll is not positive definite", lambda);
  }
  Eigen::MatrixXd m = p * llt.solve(p.transpose());
  return 0.5 * (m + m.transpose());
}

MIBound analytic_mi_bound_from_m(const Eigen::MatrixXd& c00, const Eigen::MatrixXd& m,
                                 double beta, int depth) {
  if (depth < 0) throw Error(ErrorCode::invalid_argument, "depth must be nonnegative");
  const Eigen::VectorXd omega = omega_values(c00, m);
  const double gain = std::pow(beta, 2.0 * depth);
  double raw = 0.0;
  double worst = 1.0;
  for (Eigen::Index i = 0; i < omega.size(); ++i) {
    const double factor = 1.0 - gain * omega(i);
    worst = std::min(worst, factor);
    if (!(factor > 0.0)) {
      std::ostringstream os;
      os << "1 - beta^(2l) omega = " << factor << " is outside (0, 1]";
      throw DomainError(os.str());
    }
    raw -= 0.5 * std::log1p(-gain * omega(i));
  }
  return finish(raw, MIMethod::analytic, worst);
}

MIBound analytic_mi_bound(const Eigen::MatrixXd& c00, const Eigen::MatrixXd& cll,
                          const std::vector<Eigen::MatrixXd>& weights, double beta,
                          const PhasePoint& point) {
  validate(point);
  return analytic_mi_bound_from_m(c00, m_tilde(weights, cll, point.sigma_w), beta,
                                  static_cast<int>(weights.size()));
}

MIBound correlation_form_mi(const Eigen::MatrixXd& c00, const Eigen::MatrixXd& cll,
                            const Eigen::MatrixXd& c0l) {
  require_square(c00, "C00");
  require_square(cll, "C_ll");
  if (c0l.rows() != c00.rows() || c0l.cols() != cll.rows())
    throw Error(ErrorCode::invalid_argument, "C0l shape does not match C00 and C_ll");
  Eigen::LLT<Eigen::MatrixXd> llt(cll);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("C_ll is not positive definite", smallest_eigenvalue(cll));
  Eigen::MatrixXd schur = c00 - c0l * llt.solve(c0l.transpose());
  schur = 0.5 * (schur + schur.transpose());
  const Eigen::MatrixXd ls = cholesky_factor(schur, "conditional correlation");
  const double raw = 0.5 * (logdet_spd(c00, "C00") - 2.0 * ls.diagonal().array().log().sum());
  return finish(raw, MIMethod::analytic, ls.diagonal().array().square().minCoeff());
}

MonotonicityReport monotonicity_check(const Eigen::MatrixXd& c00, const Eigen::MatrixXd& m,
                                      const std::vector<double>& beta_grid, int depth) {
  require_square(m, "M");
  if (depth < 1) throw Error(ErrorCode::invalid_argument, "depth must be at least 1");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorCode::invalid_argument, "M is not symmetric");
  const double m_min = smallest_eigenvalue(0.5 * (m + m.transpose()));
  if (m_min < -1e-10 * scale) {
    std::ostringstream os;
    os << "M is not positive semidefinite (smallest eigenvalue " << m_min << ")";
    throw Error(ErrorCode::invalid_argument, os.str());
  }
  for (std::size_t k = 0; k < beta_grid.size(); ++k) {
    if (!(beta_grid[k] >= 0.0) || !std::isfinite(beta_grid[k]))
      throw Error(ErrorCode::invalid_argument, "beta grid values must be finite and nonnegative");
    if (k > 0 && !(beta_grid[k] > beta_grid[k - 1]))
      throw Error(ErrorCode::invalid_argument, "beta grid must be strictly increasing");
  }

  MonotonicityReport report;
  report.omega = omega_values(c00, m);
  const Eigen::Index n = c00.rows();
  const Eigen::MatrixXd mc = m * c00;
  for (const double b : beta_grid) {
    const double gain = std::pow(b, 2.0 * depth);
    double product = 1.0;
    for (Eigen::Index i = 0; i < report.omega.size(); ++i) {
      const double factor = 1.0 - gain * report.omega(i);
      if (!(factor > 0.0)) {
        std::ostringstream os;
        os << "beta = " << b << " leaves the admissible range (1 - beta^(2l) omega = " << factor << ")";
        throw DomainError(os.str());
      }
      product *= factor;
    }
    const double direct = (Eigen::MatrixXd::Identity(n, n) - gain * mc).partialPivLu().determinant();
    report.determinants.push_back(direct);
    report.factorized.push_back(product);
    report.max_factorization_error = std::max(report.max_factorization_error, std::abs(direct - product));
  }

  report.factorization_ok = report.max_factorization_error <= 1e-10;
  const bool trivial = report.omega.size() == 0 || report.omega.cwiseAbs().maxCoeff() <= 1e-14;
  report.strictly_decreasing = true;
  for (std::size_t k = 1; k < report.determinants.size(); ++k)
    if (!(report.determinants[k] < report.determinants[k - 1])) report.strictly_decreasing = false;
  report.passed = report.factorization_ok && (report.strictly_decreasing || trivial);
  return report;
}

}  // namespace mfinfo
