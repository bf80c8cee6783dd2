#pragma once

#include <cmath>

namespace impdiff::ad {

/// A real value with an optional first-order tangent.
///
/// On first-order tapes the tangent is always zero. On nested tapes every
/// recorded value and local partial carries the directional derivative along
/// the input tangent, which is what turns a reverse sweep into a
/// Hessian-vector product (forward-over-reverse).
struct Scalar {
  double value = 0.0;
  double tangent = 0.0;

  constexpr Scalar() = default;
  constexpr Scalar(double v, double t = 0.0) : value(v), tangent(t) {}
};

inline Scalar operator+(Scalar a, Scalar b) {
  return {a.value + b.value, a.tangent + b.tangent};
}
inline Scalar operator-(Scalar a, Scalar b) {
  return {a.value - b.value, a.tangent - b.tangent};
}
inline Scalar operator-(Scalar a) { return {-a.value, -a.tangent}; }
inline Scalar operator*(Scalar a, Scalar b) {
  return {a.value * b.value, a.tangent * b.value + a.value * b.tangent};
}
inline Scalar operator/(Scalar a, Scalar b) {
  const double q = a.value / b.value;
  return {q, (a.tangent - q * b.tangent) / b.value};
}
inline Scalar& operator+=(Scalar& a, Scalar b) {
  a.value += b.value;
  a.tangent += b.tangent;
  return a;
}

inline Scalar exp(Scalar a) {
  const double e = std::exp(a.value);
  return {e, e * a.tangent};
}
inline Scalar log(Scalar a) { return {std::log(a.value), a.tangent / a.value}; }
inline Scalar sin(Scalar a) {
  return {std::sin(a.value), std::cos(a.value) * a.tangent};
}
inline Scalar cos(Scalar a) {
  return {std::cos(a.value), -std::sin(a.value) * a.tangent};
}

/// a^b with the tangent term in b dropped when b carries no tangent, so that
/// integer powers of negative bases stay finite.
inline Scalar pow(Scalar a, Scalar b) {
  const double p = std::pow(a.value, b.value);
  double t = 0.0;
  if (a.tangent != 0.0) t += b.value * std::pow(a.value, b.value - 1.0) * a.tangent;
  if (b.tangent != 0.0) t += p * std::log(a.value) * b.tangent;
  return {p, t};
}

inline bool is_finite(Scalar a) {
  return std::isfinite(a.value) && std::isfinite(a.tangent);
}

}  // namespace impdiff::ad
