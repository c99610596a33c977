// Best transformed-linear predictor of one component from the others.
//
// With the TPDM partitioned into predictors (11), target (22) and cross
// terms (12), the weights solve S11 b = S12 and the predictor is
// b^T (.) x = t(b^T t^-1(x)). K = S22 - S21 b is the tail ratio of the
// symmetrized prediction error, the analogue of the mean square error.

#ifndef TLPRED_PREDICTOR_HPP
#define TLPRED_PREDICTOR_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "tlpred/error.hpp"
#include "tlpred/pareto.hpp"
#include "tlpred/tpdm.hpp"
#include "tlpred/translin.hpp"

namespace tlpred {

/// TPDM split around a target column; predictors keep their original order.
struct PartitionedTPDM {
  Eigen::MatrixXd s11;
  Eigen::VectorXd s12;
  double s22 = 0.0;
  Eigen::Index target = 0;

  static PartitionedTPDM from(const Eigen::MatrixXd& s, Eigen::Index target) {
    const Eigen::Index p = s.rows();
    if (s.cols() != p) throw ArgumentError("PartitionedTPDM: matrix is not square");
    if (target < 0 || target >= p) throw ArgumentError("PartitionedTPDM: target index out of range");
    if (p < 2) throw ArgumentError("PartitionedTPDM: need at least one predictor");
    PartitionedTPDM out;
    out.target = target;
    out.s11.resize(p - 1, p - 1);
    out.s12.resize(p - 1);
    for (Eigen::Index a = 0, i = 0; i < p; ++i) {
      if (i == target) continue;
      for (Eigen::Index b = 0, j = 0; j < p; ++j) {
        if (j == target) continue;
        out.s11(a, b++) = s(i, j);
      }
      out.s12[a++] = s(i, target);
    }
    out.s22 = s(target, target);
    if (!(out.s22 > 0.0)) throw ArgumentError("PartitionedTPDM: target diagonal must be positive");
    return out;
  }
  static PartitionedTPDM from(const TPDM& s, Eigen::Index target) { return from(s.entries, target); }
};

struct PredictionWeights {
  Eigen::VectorXd b;
  double condition = 1.0;  // eigenvalue ratio of S11
  double jitter = 0.0;     // diagonal jitter that was needed, relative to mean diagonal
};

inline constexpr double kMaxCondition = 1e12;

/// Cholesky solve of S11 b = S12 with one step of iterative refinement.
/// Jitter (1e-12 up to 1e-8 of the mean diagonal) is added only when the
/// factorization fails.
inline PredictionWeights solve_weights(const PartitionedTPDM& part) {
  const Eigen::MatrixXd& s11 = part.s11;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s11, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(cond < kMaxCondition))
    throw NumericError("solve_weights: predictor block is singular or ill-conditioned (condition "
                       "estimate " + std::to_string(cond) + ")");

  const double scale = s11.diagonal().mean();
  PredictionWeights out;
  out.condition = cond;
  for (double jitter : {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8}) {
    Eigen::MatrixXd m = s11;
    m.diagonal().array() += jitter * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) continue;
    Eigen::VectorXd b = llt.solve(part.s12);
    b += llt.solve(part.s12 - s11 * b);
    out.b = std::move(b);
    out.jitter = jitter;
    return out;
  }
  throw NumericError("solve_weights: Cholesky failed even with jitter (condition estimate " +
                     std::to_string(cond) + ")");
}

inline PredictionWeights solve_weights(const TPDM& s, Eigen::Index target) {
  return solve_weights(PartitionedTPDM::from(s, target));
}

/// Normal-equation residual |S11 b - S12|_inf.
inline double normal_equation_residual(const PartitionedTPDM& part, const PredictionWeights& w) {
  return (part.s11 * w.b - part.s12).lpNorm<Eigen::Infinity>();
}

/// b^T (.) x.
inline double predict(const PredictionWeights& w, const NonNegVector& x) {
  if (x.size() != w.b.size()) throw ArgumentError("predict: length mismatch");
  return softplus(w.b.dot(detail::strict_preimage(x, "predict")));
}

/// Row-wise prediction from an n x p matrix of predictors.
inline Eigen::VectorXd predict_rows(const PredictionWeights& w, const Eigen::MatrixXd& x) {
  if (x.cols() != w.b.size()) throw ArgumentError("predict: column count mismatch");
  if (x.size() > 0 && !(x.array() > 0.0).all())
    throw DomainError("predict: predictors must be strictly positive");
  return softplus(softplus_inv(x) * w.b);
}

/// K = S22 - S21 b, clipped at 0.
inline double prediction_error_K(const PartitionedTPDM& part, const PredictionWeights& w) {
  return std::max(0.0, part.s22 - part.s12.dot(w.b));
}

/// max(a (-) b, b (-) a) = t(|t^-1(a) - t^-1(b)|).
inline double d_statistic(double x_true, double x_pred) {
  if (!(x_true > 0.0) || !(x_pred > 0.0))
    throw DomainError("d_statistic: both arguments must be positive");
  return softplus(std::abs(softplus_inv(x_true) - softplus_inv(x_pred)));
}

/// Bound d* with P(D > d*) = 1 - level under TR(D) = K, using
/// P(D > d) ~ K P(Z > d) for the shifted-Pareto reference law.
inline double d_bound(double k, double level, const ParetoSpec& spec) {
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("d_bound: level must lie in (0, 1)");
  if (!(k >= 0.0)) throw ArgumentError("d_bound: K must be nonnegative");
  return std::max(0.0, std::sqrt(k / (1.0 - level)) - spec.shift());
}

/// Inner-product matrix of (X_hat, X): [[v, v], [v, S22]] with v = S21 b.
inline Eigen::Matrix2d prediction_ip_matrix(const PartitionedTPDM& part, const PredictionWeights& w) {
  const double v = part.s12.dot(w.b);
  if (v > part.s22 + 1e-10 * std::max(1.0, part.s22))
    throw NumericError("prediction_ip_matrix: S21 b = " + std::to_string(v) +
                       " exceeds S22 = " + std::to_string(part.s22) + "; the TPDM is inconsistent");
  const double vc = std::min(std::max(v, 0.0), part.s22);
  Eigen::Matrix2d g;
  g << vc, vc, vc, part.s22;
  return g;
}

}  // namespace tlpred

#endif  // TLPRED_PREDICTOR_HPP
