#pragma once

#include <string>
#include <string_view>

namespace mfinfo {

enum class ActivationKind { tanh, scaled_tanh, erf, linear };

/// Pointwise nonlinearity psi together with its derivative and the
/// structural flags the mean-field results depend on.
///
/// All bundled activations except `linear` are odd, bounded and concave on
/// the positive half-line. `linear` exists for closed-form test oracles and
/// reports `oracle_only() == true`.
class Activation {
 public:
  static Activation tanh();
  /// psi(z) = a * tanh(b * z)
  static Activation scaled_tanh(double a, double b);
  /// psi(z) = erf(z / sqrt(2))
  static Activation erf();
  static Activation linear();

  /// Looks up a bundled activation by name ("tanh", "scaled_tanh", "erf",
  /// "linear"); `a` and `b` only apply to scaled_tanh.
  static Activation from_name(std::string_view name, double a = 1.0, double b = 1.0);

  const std::string& name() const noexcept { return name_; }
  ActivationKind kind() const noexcept { return kind_; }
  double scale() const noexcept { return a_; }
  double slope() const noexcept { return b_; }

  double eval(double z) const noexcept;
  double deriv(double z) const noexcept;
  double operator()(double z) const noexcept { return eval(z); }

  double deriv_at_zero() const noexcept;
  bool is_odd() const noexcept { return true; }
  bool is_bounded() const noexcept { return kind_ != ActivationKind::linear; }
  bool oracle_only() const noexcept { return kind_ == ActivationKind::linear; }

 private:
  Activation(ActivationKind kind, std::string name, double a, double b)
      : kind_(kind), name_(std::move(name)), a_(a), b_(b) {}

  ActivationKind kind_;
  std::string name_;
  double a_;
  double b_;
};

}  // namespace mfinfo
