#pragma once

#include <algorithm>
#include <cmath>

#include "obsim/types.hpp"

namespace obsim {

/// Piecewise cubic Hermite interpolant of a vector-valued function of one
/// variable. Knots must be strictly increasing; evaluation outside
/// [front, back] throws. Values at knots are returned verbatim.
template <typename Scalar>
class CubicHermite {
 public:
  using Vector = VectorX<Scalar>;
  using Matrix = MatrixX<Scalar>;

  CubicHermite() = default;

  /// `values` and `slopes` are dim x K, one column per knot.
  CubicHermite(Vector knots, Matrix values, Matrix slopes)
      : x_(std::move(knots)), y_(std::move(values)), d_(std::move(slopes)) {
    if (x_.size() < 2) throw ConfigError("knots", "need at least two knots");
    if (y_.cols() != x_.size() || d_.cols() != x_.size() || d_.rows() != y_.rows()) {
      throw ConfigError("knots", "values/slopes shape mismatch");
    }
    for (Eigen::Index k = 1; k < x_.size(); ++k) {
      if (!(x_[k] > x_[k - 1])) {
        throw ConfigError("knots", "knots must be strictly increasing (duplicate at index " +
                                       std::to_string(k) + ")");
      }
    }
  }

  Eigen::Index dim() const { return y_.rows(); }
  Eigen::Index knot_count() const { return x_.size(); }
  Scalar front() const { return x_[0]; }
  Scalar back() const { return x_[x_.size() - 1]; }
  const Vector& knots() const { return x_; }
  const Matrix& values() const { return y_; }
  const Matrix& slopes() const { return d_; }

  Vector operator()(Scalar x) const { return evaluate(x, false); }
  Vector derivative(Scalar x) const { return evaluate(x, true); }

 private:
  Vector evaluate(Scalar x, bool derivative) const {
    if (!(x >= front() && x <= back())) {
      throw DomainError("interpolant evaluated outside [" + std::to_string(double(front())) +
                        ", " + std::to_string(double(back())) + "]");
    }
    const Scalar* begin = x_.data();
    const Scalar* end = begin + x_.size();
    Eigen::Index k = std::upper_bound(begin, end, x) - begin - 1;
    k = std::clamp<Eigen::Index>(k, 0, x_.size() - 2);
    if (!derivative) {
      if (x == x_[k]) return y_.col(k);
      if (x == x_[k + 1]) return y_.col(k + 1);
    }
    const Scalar h = x_[k + 1] - x_[k];
    const Scalar s = (x - x_[k]) / h;
    const Scalar s2 = s * s;
    const Scalar s3 = s2 * s;
    if (derivative) {
      const Scalar dh00 = (Scalar(6) * s2 - Scalar(6) * s) / h;
      const Scalar dh10 = Scalar(3) * s2 - Scalar(4) * s + Scalar(1);
      const Scalar dh01 = -dh00;
      const Scalar dh11 = Scalar(3) * s2 - Scalar(2) * s;
      return dh00 * y_.col(k) + dh10 * d_.col(k) + dh01 * y_.col(k + 1) + dh11 * d_.col(k + 1);
    }
    const Scalar h00 = Scalar(2) * s3 - Scalar(3) * s2 + Scalar(1);
    const Scalar h10 = s3 - Scalar(2) * s2 + s;
    const Scalar h01 = -Scalar(2) * s3 + Scalar(3) * s2;
    const Scalar h11 = s3 - s2;
    return h00 * y_.col(k) + (h10 * h) * d_.col(k) + h01 * y_.col(k + 1) +
           (h11 * h) * d_.col(k + 1);
  }

  Vector x_;
  Matrix y_;
  Matrix d_;
};

/// Fritsch-Carlson limiting of knot slopes for scalar data, so the resulting
/// Hermite interpolant is monotone wherever the data is.
template <typename Scalar>
VectorX<Scalar> fritsch_carlson(const VectorX<Scalar>& x, const VectorX<Scalar>& y,
                                VectorX<Scalar> slopes) {
  using std::sqrt;
  const Eigen::Index count = x.size();
  for (Eigen::Index k = 0; k + 1 < count; ++k) {
    const Scalar secant = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
    if (secant == Scalar(0)) {
      slopes[k] = Scalar(0);
      slopes[k + 1] = Scalar(0);
      continue;
    }
    Scalar alpha = slopes[k] / secant;
    Scalar beta = slopes[k + 1] / secant;
    if (alpha < Scalar(0)) {
      slopes[k] = Scalar(0);
      alpha = Scalar(0);
    }
    if (beta < Scalar(0)) {
      slopes[k + 1] = Scalar(0);
      beta = Scalar(0);
    }
    const Scalar norm2 = alpha * alpha + beta * beta;
    if (norm2 > Scalar(9)) {
      const Scalar tau = Scalar(3) / sqrt(norm2);
      slopes[k] = tau * alpha * secant;
      slopes[k + 1] = tau * beta * secant;
    }
  }
  return slopes;
}

/// Three-point finite-difference slopes on a non-uniform grid; one-sided at the ends.
template <typename Scalar>
MatrixX<Scalar> finite_difference_slopes(const VectorX<Scalar>& x, const MatrixX<Scalar>& y) {
  const Eigen::Index count = x.size();
  MatrixX<Scalar> d(y.rows(), count);
  if (count < 2) return MatrixX<Scalar>::Zero(y.rows(), count);
  d.col(0) = (y.col(1) - y.col(0)) / (x[1] - x[0]);
  d.col(count - 1) = (y.col(count - 1) - y.col(count - 2)) / (x[count - 1] - x[count - 2]);
  for (Eigen::Index k = 1; k + 1 < count; ++k) {
    const Scalar h0 = x[k] - x[k - 1];
    const Scalar h1 = x[k + 1] - x[k];
    d.col(k) = (h1 * h1 * (y.col(k) - y.col(k - 1)) + h0 * h0 * (y.col(k + 1) - y.col(k))) /
               (h0 * h1 * (h0 + h1));
  }
  return d;
}

}  // namespace obsim
