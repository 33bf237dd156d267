#include "mfinfo/activation.hpp"

#include <cmath>

#include "mfinfo/error.hpp"

namespace mfinfo {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
// sqrt(2 / pi)
constexpr double kSqrt2OverPi = 0.79788456080286535588;
}  // namespace

Activation Activation::tanh() { return Activation(ActivationKind::tanh, "tanh", 1.0, 1.0); }

Activation Activation::scaled_tanh(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
    throw ConfigError("scaled_tanh needs finite positive a and b");
  return Activation(ActivationKind::scaled_tanh, "scaled_tanh", a, b);
}

Activation Activation::erf() { return Activation(ActivationKind::erf, "erf", 1.0, 1.0); }

Activation Activation::linear() { return Activation(ActivationKind::linear, "linear", 1.0, 1.0); }

Activation Activation::from_name(std::string_view name, double a, double b) {
  if (name == "tanh") return tanh();
  if (name == "scaled_tanh") return scaled_tanh(a, b);
  if (name == "erf") return erf();
  if (name == "linear") return linear();
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

double Activation::eval(double z) const noexcept {
  switch (kind_) {
    case ActivationKind::tanh: return std::tanh(z);
    case ActivationKind::scaled_tanh: return a_ * std::tanh(b_ * z);
    case ActivationKind::erf: return std::erf(z * kInvSqrt2);
    case ActivationKind::linear: return z;
  }
  return 0.0;
}

double Activation::deriv(double z) const noexcept {
  switch (kind_) {
    case ActivationKind::tanh: {
      const double c = std::cosh(z);
      return 1.0 / (c * c);
    }
    case ActivationKind::scaled_tanh: {
      const double c = std::cosh(b_ * z);
      return a_ * b_ / (c * c);
    }
    case ActivationKind::erf: return kSqrt2OverPi * std::exp(-0.5 * z * z);
    case ActivationKind::linear: return 1.0;
  }
  return 0.0;
}

double Activation::deriv_at_zero() const noexcept {
  switch (kind_) {
    case ActivationKind::tanh: return 1.0;
    case ActivationKind::scaled_tanh: return a_ * b_;
    case ActivationKind::erf: return kSqrt2OverPi;
    case ActivationKind::linear: return 1.0;
  }
  return 0.0;
}

}  // namespace mfinfo
