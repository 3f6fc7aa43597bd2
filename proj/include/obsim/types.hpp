#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace obsim {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input structure: bad system layout, malformed config, unknown labels.
/// `field` names the offending entry when one exists.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Two gravitationally coupled bodies came closer than the singularity threshold.
class SingularityError : public Error {
 public:
  SingularityError(std::string body, std::string attractor, double t)
      : Error("singular separation between '" + body + "' and '" + attractor +
              "' at t=" + std::to_string(t)),
        body_(std::move(body)),
        attractor_(std::move(attractor)),
        t_(t) {}

  const std::string& body() const noexcept { return body_; }
  const std::string& attractor() const noexcept { return attractor_; }
  double time() const noexcept { return t_; }

 private:
  std::string body_;
  std::string attractor_;
  double t_;
};

/// Integration produced a non-finite state; `last_good` is the index of the
/// last finite sample.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t last_good)
      : Error(what + " (last good sample " + std::to_string(last_good) + ")"),
        last_good_(last_good) {}

  std::size_t last_good() const noexcept { return last_good_; }

 private:
  std::size_t last_good_;
};

/// No candidate coordinate is continuous and strictly monotone over the interval.
class NoMonotoneCoordinate : public Error {
 public:
  using Error::Error;
};

/// Evaluation outside the interval a model was built on.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace obsim
