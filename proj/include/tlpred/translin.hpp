// Transformed-linear algebra on the positive orthant.
//
// The softplus t(y) = log(1 + e^y) is a bijection from the reals onto
// (0, inf). Conjugating ordinary vector operations through t gives
//
//   x1 (+) x2 = t(t^-1(x1) + t^-1(x2))      a (.) x = t(a t^-1(x))
//
// which keep results in the orthant and act linearly on large values.
// Everything here is a pure function of its arguments.

#ifndef TLPRED_TRANSLIN_HPP
#define TLPRED_TRANSLIN_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "tlpred/error.hpp"

namespace tlpred {

/// Beyond this magnitude t and t^-1 switch to their asymptotic forms.
inline constexpr double kSoftplusCrossover = 30.0;

inline double softplus(double y) {
  if (!std::isfinite(y)) throw ArgumentError("softplus: non-finite argument");
  if (y > kSoftplusCrossover) return y + std::exp(-y);
  return std::log1p(std::exp(y));
}

inline double softplus_inv(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError("softplus_inv: argument must be positive and finite, got " +
                      std::to_string(x));
  if (x > kSoftplusCrossover) return x + std::log1p(-std::exp(-x));
  return std::log(std::expm1(x));
}

/// Componentwise t over any Eigen expression.
template <typename Derived>
auto softplus(const Eigen::DenseBase<Derived>& y) {
  return y.derived().unaryExpr([](double v) { return softplus(v); }).eval();
}

template <typename Derived>
auto softplus_inv(const Eigen::DenseBase<Derived>& x) {
  return x.derived().unaryExpr([](double v) { return softplus_inv(v); }).eval();
}

/// Point of the orthant: finite, nonnegative entries.
class NonNegVector {
 public:
  NonNegVector() = default;
  explicit NonNegVector(Eigen::VectorXd values) : values_(std::move(values)) {
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      if (!std::isfinite(values_[i]) || values_[i] < 0.0)
        throw ArgumentError("NonNegVector: entry " + std::to_string(i) +
                            " is negative or non-finite");
    }
  }
  NonNegVector(std::initializer_list<double> values)
      : NonNegVector(Eigen::Map<const Eigen::VectorXd>(values.begin(),
                                                       static_cast<Eigen::Index>(values.size()))) {}

  const Eigen::VectorXd& values() const noexcept { return values_; }
  Eigen::Index size() const noexcept { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }

 private:
  Eigen::VectorXd values_;
};

/// Real preimage coefficients; negative entries allowed.
using CoeffVector = Eigen::VectorXd;

/// p x q generator of a construction X = A (.) Z.
class GeneratorMatrix {
 public:
  GeneratorMatrix() = default;
  explicit GeneratorMatrix(Eigen::MatrixXd entries, bool require_nonneg = false)
      : entries_(std::move(entries)) {
    if (!entries_.allFinite()) throw ArgumentError("GeneratorMatrix: non-finite entry");
    nonneg_ = (entries_.array() >= 0.0).all();
    if (require_nonneg && !nonneg_)
      throw ArgumentError("GeneratorMatrix: negative entry in a nonnegative generator");
  }

  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  Eigen::Index rows() const noexcept { return entries_.rows(); }
  Eigen::Index cols() const noexcept { return entries_.cols(); }
  bool nonneg() const noexcept { return nonneg_; }

 private:
  Eigen::MatrixXd entries_;
  bool nonneg_ = true;
};

namespace detail {

inline Eigen::VectorXd strict_preimage(const NonNegVector& x, const char* op) {
  Eigen::VectorXd y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0))
      throw DomainError(std::string(op) + ": entry " + std::to_string(i) +
                        " is zero; transformed-linear operations need positive entries");
    y[i] = softplus_inv(x[i]);
  }
  return y;
}

}  // namespace detail

inline NonNegVector tadd(const NonNegVector& x1, const NonNegVector& x2) {
  if (x1.size() != x2.size()) throw ArgumentError("tadd: length mismatch");
  return NonNegVector(
      softplus(detail::strict_preimage(x1, "tadd") + detail::strict_preimage(x2, "tadd")));
}

inline NonNegVector tscale(double a, const NonNegVector& x) {
  if (!std::isfinite(a)) throw ArgumentError("tscale: non-finite scalar");
  return NonNegVector(softplus(a * detail::strict_preimage(x, "tscale")));
}

/// A (.) z = t(A t^-1(z)).
inline NonNegVector tmat_apply(const GeneratorMatrix& a, const NonNegVector& z) {
  if (a.cols() != z.size())
    throw ArgumentError("tmat_apply: matrix has " + std::to_string(a.cols()) +
                        " columns but vector has length " + std::to_string(z.size()));
  return NonNegVector(softplus(a.entries() * detail::strict_preimage(z, "tmat_apply")));
}

/// Componentwise max(., 0).
template <typename Derived>
typename Derived::PlainObject zero_clip(const Eigen::MatrixBase<Derived>& a) {
  if (!a.allFinite()) throw ArgumentError("zero_clip: non-finite entry");
  return a.cwiseMax(0.0);
}

inline GeneratorMatrix zero_clip(const GeneratorMatrix& a) {
  return GeneratorMatrix(zero_clip(a.entries()));
}

}  // namespace tlpred

#endif  // TLPRED_TRANSLIN_HPP
