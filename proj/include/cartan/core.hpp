#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/LU>

namespace cartan {

/// Ambient matrices: every supported group lives in at most 4x4 real matrices.
inline constexpr int kMaxAmbient = 4;
/// Chart domains are boxes in R^d with d <= 3.
inline constexpr int kMaxDim = 3;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxAmbient, kMaxAmbient>;
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

enum class ErrorKind {
  SpecMismatch,
  NotInAlgebra,
  ConstraintViolation,
  Singular,
  NonFinite,
  OutOfDomain,
  BadArgument,
  NotFlat,
  NotClosed,
  Precondition,
  Config,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::SpecMismatch: return "spec mismatch";
    case ErrorKind::NotInAlgebra: return "not in algebra";
    case ErrorKind::ConstraintViolation: return "constraint violation";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::NonFinite: return "non-finite";
    case ErrorKind::OutOfDomain: return "out of domain";
    case ErrorKind::BadArgument: return "bad argument";
    case ErrorKind::NotFlat: return "not flat";
    case ErrorKind::NotClosed: return "not closed";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline double frobenius(const Mat& m) { return m.norm(); }

inline bool all_finite(const Mat& m) { return m.allFinite(); }

inline Mat identity_matrix(int n) { return Mat::Identity(n, n); }

}  // namespace cartan
