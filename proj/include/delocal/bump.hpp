#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace delocal {

/// Radial mollifier phi(u) = exp(k (1 - 1/(1 - |u|^2))) on the open unit
/// ball, zero outside; phi(0) = 1. k is the sharpness (k = 1 by default).
/// Small k pushes the descent towards the boundary; sup |grad phi| is not
/// monotone in k (minimal near k = 2).
template <typename Scalar>
class BasicBumpProfile {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  explicit BasicBumpProfile(Scalar sharpness = Scalar(1)) : sharpness_(sharpness) {}

  Scalar sharpness() const noexcept { return sharpness_; }

  // Radial pieces as functions of s = |u|^2: phi = exp(k (1 - 1/(1-s))),
  // g = dlog(phi)/ds = -k/(1-s)^2, g' = -2k/(1-s)^3.
  Scalar radial_value(Scalar s) const {
    if (s >= Scalar(1)) return Scalar(0);
    const Scalar inv = Scalar(1) / (Scalar(1) - s);
    const Scalar expo = sharpness_ * (Scalar(1) - inv);
    if (expo < Scalar(-700)) return Scalar(0);
    return std::exp(expo);
  }

  template <typename Derived>
  Scalar value(const Eigen::MatrixBase<Derived>& u) const {
    return radial_value(u.squaredNorm());
  }

  template <typename Derived>
  Vector gradient(const Eigen::MatrixBase<Derived>& u) const {
    const Scalar s = u.squaredNorm();
    const Scalar phi = radial_value(s);
    if (phi == Scalar(0)) return Vector::Zero(u.size());
    const Scalar inv = Scalar(1) / (Scalar(1) - s);
    const Scalar g = -sharpness_ * inv * inv;
    return (Scalar(2) * g * phi) * u;
  }

  template <typename Derived>
  Matrix hessian(const Eigen::MatrixBase<Derived>& u) const {
    const Scalar s = u.squaredNorm();
    const Scalar phi = radial_value(s);
    const auto d = u.size();
    if (phi == Scalar(0)) return Matrix::Zero(d, d);
    const Scalar inv = Scalar(1) / (Scalar(1) - s);
    const Scalar g = -sharpness_ * inv * inv;
    const Scalar dg = Scalar(-2) * sharpness_ * inv * inv * inv;
    Matrix h = (phi * (Scalar(4) * dg + Scalar(4) * g * g)) * (u * u.transpose());
    h.diagonal().array() += Scalar(2) * g * phi;
    return h;
  }

  /// sup |grad phi| (radial maximisation by golden section on |u|).
  Scalar gradient_sup() const {
    auto slope = [&](Scalar r) {
      const Scalar s = r * r;
      const Scalar phi = radial_value(s);
      if (phi == Scalar(0)) return Scalar(0);
      const Scalar inv = Scalar(1) / (Scalar(1) - s);
      return Scalar(2) * sharpness_ * inv * inv * phi * r;
    };
    Scalar a(0), b(1);
    const Scalar ratio = (std::sqrt(Scalar(5)) - Scalar(1)) / Scalar(2);
    Scalar x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
    Scalar f1 = slope(x1), f2 = slope(x2);
    for (int it = 0; it < 200; ++it) {
      if (f1 < f2) {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + ratio * (b - a); f2 = slope(x2);
      } else {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - ratio * (b - a); f1 = slope(x1);
      }
    }
    return std::max(f1, f2);
  }

 private:
  Scalar sharpness_;
};

using BumpProfile = BasicBumpProfile<double>;

}  // namespace delocal
