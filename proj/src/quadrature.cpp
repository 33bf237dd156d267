#include "mfinfo/quadrature.hpp"

#include <map>
#include <mutex>

#include <Eigen/Eigenvalues>

namespace mfinfo {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid input";
    case ErrorCode::config: return "configuration error";
    case ErrorCode::evaluation: return "evaluation error";
    case ErrorCode::degenerate: return "degenerate state";
    case ErrorCode::convergence: return "convergence failure";
    case ErrorCode::conditioning: return "conditioning error";
    case ErrorCode::domain: return "domain error";
    case ErrorCode::io: return "i/o error";
  }
  return "unknown error";
}

namespace detail {

void throw_non_finite(double value, double x) {
  std::ostringstream os;
  os << "integrand is not finite (" << value << ") at node x=" << x;
  throw EvaluationError(os.str());
}

void throw_non_finite(double value, double x, double y) {
  std::ostringstream os;
  os << "integrand is not finite (" << value << ") at node (x=" << x << ", y=" << y << ")";
  throw EvaluationError(os.str());
}

}  // namespace detail

namespace {

struct HermiteEval {
  double pn = 0.0;       // p_n(x) and p_{n-1}(x), up to a common positive factor
  double pn1 = 0.0;
  double log_sum = 0.0;  // log sum_{k<n} p_k(x)^2
};

// Orthonormal probabilists' Hermite polynomials by their three-term
// recurrence, rescaled on the fly so large nodes do not overflow.
HermiteEval eval_hermite(int n, double x) {
  double p0 = 1.0, p1 = x;
  double sum = 1.0 + x * x;
  double log_scale = 0.0;
  for (int k = 1; k < n; ++k) {
    const double p2 = (x * p1 - std::sqrt(static_cast<double>(k)) * p0) / std::sqrt(k + 1.0);
    p0 = p1;
    p1 = p2;
    if (k + 1 < n) sum += p2 * p2;
    if (std::abs(p1) > 1e150) {
      p0 *= 1e-150;
      p1 *= 1e-150;
      sum *= 1e-300;
      log_scale += 300.0 * std::log(10.0);
    }
  }
  if (n == 1) sum = 1.0;
  return {p1, p0, std::log(sum) + log_scale};
}

}  // namespace

QuadratureRule make_gauss_hermite_rule(int order) {
  if (order < 1) throw Error(ErrorCode::invalid_argument, "quadrature order must be positive");
  const Eigen::Index n = order;

  QuadratureRule rule;
  if (n == 1) {
    rule.nodes = {0.0};
    rule.weights = {1.0};
    return rule;
  }

  // Golub-Welsch: the nodes are the eigenvalues of the Jacobi matrix of the
  // probabilists' Hermite recurrence (zero diagonal, off-diagonal sqrt(k)).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (Eigen::Index k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& values = solver.eigenvalues();

  // Polish each node with Newton steps (p_n' = sqrt(n) p_{n-1}) and take the
  // weight from the Christoffel function 1 / sum_k p_k(x)^2, which keeps full
  // relative accuracy for the tiny outer weights.
  const Eigen::Index half = n / 2;
  std::vector<double> xs, ws;
  for (Eigen::Index i = n - half; i < n; ++i) {
    double x = values(i);
    for (int it = 0; it < 4; ++it) {
      const HermiteEval e = eval_hermite(order, x);
      const double step = e.pn / (std::sqrt(static_cast<double>(n)) * e.pn1);
      x -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    xs.push_back(x);
    ws.push_back(std::exp(-eval_hermite(order, x).log_sum));
  }
  const double w_mid = n % 2 ? std::exp(-eval_hermite(order, 0.0).log_sum) : 0.0;

  // Assemble the symmetric rule, dropping outer nodes whose weight underflows.
  for (Eigen::Index i = half - 1; i >= 0; --i) {
    if (ws[i] <= 0.0) continue;
    rule.nodes.push_back(-xs[i]);
    rule.weights.push_back(ws[i]);
  }
  if (n % 2) {
    rule.nodes.push_back(0.0);
    rule.weights.push_back(w_mid);
  }
  for (Eigen::Index i = 0; i < half; ++i) {
    if (ws[i] <= 0.0) continue;
    rule.nodes.push_back(xs[i]);
    rule.weights.push_back(ws[i]);
  }

  // Normalize, summing from the smallest (outermost) weights inwards.
  double total = 0.0;
  for (Eigen::Index i = half - 1; i >= 0; --i) total += 2.0 * ws[i];
  total += w_mid;
  for (double& w : rule.weights) w /= total;
  return rule;
}

std::shared_ptr<const QuadratureRule> gauss_hermite_rule(int order) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const QuadratureRule>> cache;

  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;
  auto rule = std::make_shared<const QuadratureRule>(make_gauss_hermite_rule(order));
  cache.emplace(order, rule);
  return rule;
}

}  // namespace mfinfo
