#include "mfinfo/netsim.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace mfinfo {

InitKind parse_init_kind(std::string_view name) {
  if (name == "gaussian") return InitKind::gaussian;
  if (name == "orthogonal") return InitKind::orthogonal;
  throw ConfigError("unknown init kind '" + std::string(name) + "' (gaussian|orthogonal)");
}

InputKind parse_input_kind(std::string_view name) {
  if (name == "stable") return InputKind::stable;
  if (name == "unit") return InputKind::unit;
  throw ConfigError("unknown input kind '" + std::string(name) + "' (stable|unit)");
}

const char* to_string(InitKind kind) noexcept {
  return kind == InitKind::gaussian ? "gaussian" : "orthogonal";
}

const char* to_string(InputKind kind) noexcept {
  return kind == InputKind::stable ? "stable" : "unit";
}

NetworkConfig NetworkConfig::uniform(int depth, int n0, int width, PhasePoint point, InitKind init,
                                     std::uint64_t seed) {
  NetworkConfig config;
  config.depth = depth;
  config.widths.assign(static_cast<std::size_t>(std::max(depth, 0)) + 1, width);
  if (!config.widths.empty()) config.widths.front() = n0;
  config.point = point;
  config.init = init;
  config.seed = seed;
  return config;
}

void validate(const NetworkConfig& config) {
  if (config.depth < 1) throw ConfigError("network depth must be at least 1");
  if (config.widths.size() != static_cast<std::size_t>(config.depth) + 1) {
    std::ostringstream os;
    os << "expected " << config.depth + 1 << " widths (N_0..N_L), got " << config.widths.size();
    throw ConfigError(os.str());
  }
  for (const int w : config.widths)
    if (w < 1) throw ConfigError("every layer width must be at least 1");
  validate(config.point);
  if (config.init == InitKind::orthogonal) {
    for (std::size_t l = 2; l < config.widths.size(); ++l)
      if (config.widths[l] != config.widths[1])
        throw ConfigError("orthogonal initialization needs equal widths N_1..N_L");
    if (config.widths[0] > config.widths[1])
      throw ConfigError("orthogonal initialization needs N_0 <= N_1");
  }
}

Eigen::MatrixXd haar_orthogonal(int rows, int cols, Rng& rng) {
  Eigen::MatrixXd g(rows, cols);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.gaussian();

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
  const auto& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < cols; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

NetworkRealization init_network(const NetworkConfig& config) {
  validate(config);
  const double sw = config.point.sigma_w;
  const double sb = config.point.sigma_b;

  NetworkRealization net;
  net.config = config;
  net.weights.reserve(config.depth);
  net.biases.reserve(config.depth);
  for (int l = 0; l < config.depth; ++l) {
    const int fan_in = config.widths[l];
    const int fan_out = config.widths[l + 1];
    Rng wrng(derive_seed(config.seed, Stream::weights, static_cast<std::uint64_t>(l)));
    Eigen::MatrixXd w;
    if (config.init == InitKind::orthogonal) {
      w = sw * haar_orthogonal(fan_out, fan_in, wrng);
    } else {
      const double scale = sw / std::sqrt(static_cast<double>(fan_in));
      w.resize(fan_out, fan_in);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = scale * wrng.gaussian();
    }
    net.weights.push_back(std::move(w));

    Eigen::VectorXd b = Eigen::VectorXd::Zero(fan_out);
    if (sb > 0.0) {
      Rng brng(derive_seed(config.seed, Stream::biases, static_cast<std::uint64_t>(l)));
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = sb * brng.gaussian();
    }
    net.biases.push_back(std::move(b));
  }
  return net;
}

StableVariance stable_input_variance(const PhasePoint& point, const Activation& act,
                                     const QuadratureRule& rule) {
  StableVariance out;
  out.q_star = fixed_point_variance(point, act, rule);
  const double sb2 = point.sigma_b * point.sigma_b;
  if (out.q_star <= sb2 || out.q_star < kQFloor) {
    out.variance = kVFloor;
    out.floored = true;
  } else {
    out.variance = (out.q_star - sb2) / (point.sigma_w * point.sigma_w);
  }
  return out;
}

void check_correlation_matrix(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() == 0)
    throw Error(ErrorCode::invalid_argument, "correlation matrix must be square and non-empty");
  if (!c.allFinite()) throw Error(ErrorCode::invalid_argument, "correlation matrix has non-finite entries");
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::invalid_argument, "correlation matrix is not symmetric");
  if ((c.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::invalid_argument, "correlation matrix needs a unit diagonal");
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::invalid_argument, "correlation matrix is not positive definite");
}

InputEnsemble sample_inputs(InputKind kind, const Eigen::MatrixXd& c00, int n_samples,
                            const PhasePoint& point, const Activation& act, std::uint64_t seed,
                            const QuadratureRule& rule) {
  check_correlation_matrix(c00);
  if (n_samples < 1) throw ConfigError("n_samples must be at least 1");

  InputEnsemble out;
  if (kind == InputKind::stable) {
    const StableVariance sv = stable_input_variance(point, act, rule);
    out.variance = sv.variance;
    out.floored = sv.floored;
  }

  const Eigen::Index n0 = c00.rows();
  Eigen::MatrixXd g(n_samples, n0);
  Rng rng(derive_seed(seed, Stream::inputs));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < n0; ++j) g(i, j) = rng.gaussian();

  const Eigen::MatrixXd lower = Eigen::LLT<Eigen::MatrixXd>(c00).matrixL();
  out.samples = std::sqrt(out.variance) * (g * lower.transpose());
  return out;
}

Eigen::MatrixXd identity_correlation(int n) {
  if (n < 1) throw ConfigError("dimension must be at least 1");
  return Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd toeplitz_correlation(int n, double rho) {
  if (n < 1) throw ConfigError("dimension must be at least 1");
  if (!(std::abs(rho) < 1.0)) throw ConfigError("toeplitz correlation needs |rho| < 1");
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = std::pow(rho, std::abs(i - j));
  return c;
}

Eigen::MatrixXd wishart_correlation(int n, int dof, std::uint64_t seed) {
  if (n < 1) throw ConfigError("dimension must be at least 1");
  if (dof < n) throw ConfigError("wishart correlation needs dof >= dimension");
  Rng rng(derive_seed(seed, Stream::correlation));
  Eigen::MatrixXd g(dof, n);
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.gaussian();
  Eigen::MatrixXd s = g.transpose() * g;
  const Eigen::VectorXd inv_sd = s.diagonal().cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd c = inv_sd.asDiagonal() * s * inv_sd.asDiagonal();
  c = 0.5 * (c + c.transpose());
  c.diagonal().setOnes();
  return c;
}

namespace {

void check_inputs(const NetworkRealization& net, const Eigen::MatrixXd& inputs) {
  if (net.weights.empty()) throw ConfigError("network has no layers");
  if (inputs.cols() != net.weights.front().cols()) {
    std::ostringstream os;
    os << "input has " << inputs.cols() << " columns, network expects " << net.weights.front().cols();
    throw ConfigError(os.str());
  }
}

void propagate(const NetworkRealization& net, std::size_t layer, const Eigen::MatrixXd& in,
               const Activation& act, Eigen::MatrixXd& out) {
  const Eigen::MatrixXd& w = net.weights[layer];
  if (layer == 0) {
    out.noalias() = in * w.transpose();
  } else {
    const Eigen::MatrixXd activated = in.unaryExpr([&](double z) { return act.eval(z); });
    out.noalias() = activated * w.transpose();
  }
  out.rowwise() += net.biases[layer].transpose();
  if (!out.allFinite()) {
    std::ostringstream os;
    os << "non-finite pre-activation at layer " << layer + 1;
    throw EvaluationError(os.str());
  }
}

}  // namespace

std::vector<SignalRecord> forward(const NetworkRealization& net, const Eigen::MatrixXd& inputs,
                                  const Activation& act) {
  check_inputs(net, inputs);
  std::vector<SignalRecord> records;
  records.reserve(net.weights.size() + 1);
  records.push_back({0, inputs});
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    SignalRecord rec;
    rec.layer = static_cast<int>(l) + 1;
    propagate(net, l, records.back().signals, act, rec.signals);
    records.push_back(std::move(rec));
  }
  return records;
}

Eigen::MatrixXd forward_output(const NetworkRealization& net, const Eigen::MatrixXd& inputs,
                               const Activation& act) {
  check_inputs(net, inputs);
  Eigen::MatrixXd current = inputs;
  Eigen::MatrixXd next;
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    propagate(net, l, current, act, next);
    current.swap(next);
  }
  return current;
}

double mean_square(const Eigen::MatrixXd& signals) {
  if (signals.size() == 0) return 0.0;
  return signals.squaredNorm() / static_cast<double>(signals.size());
}

}  // namespace mfinfo
