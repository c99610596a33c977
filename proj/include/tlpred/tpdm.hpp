// Tail pairwise dependence matrix: exact value for a generator, pairwise
// estimation from data, and positive semi-definiteness checks.

#ifndef TLPRED_TPDM_HPP
#define TLPRED_TPDM_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tlpred/error.hpp"
#include "tlpred/pareto.hpp"
#include "tlpred/stats.hpp"
#include "tlpred/translin.hpp"

namespace tlpred {

struct TPDM {
  Eigen::MatrixXd entries;
  double quantile = 0.0;          // radial threshold quantile; 0 when exact
  Eigen::MatrixXi exceedances;    // per-pair counts; empty when exact
  bool psd_repaired = false;

  Eigen::Index dim() const noexcept { return entries.rows(); }
};

struct PsdReport {
  double min_eigenvalue;
  bool is_psd;
};

inline constexpr double kPsdTolerance = -1e-8;

inline PsdReport psd_check(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ArgumentError("psd_check: matrix is not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  return {lo, lo >= kPsdTolerance};
}

inline PsdReport psd_check(const TPDM& s) { return psd_check(s.entries); }

/// A^(0) A^(0)^T.
inline TPDM tpdm_of_generator(const GeneratorMatrix& a) {
  const Eigen::MatrixXd c = zero_clip(a.entries());
  return TPDM{c * c.transpose(), 0.0, {}, false};
}

inline constexpr int kMinPairExceedances = 50;

namespace detail {

// Clip negative eigenvalues and restore the diagonal, alternating until the
// result is PSD (restoring the diagonal can reintroduce small negatives).
inline Eigen::MatrixXd repair_psd(Eigen::MatrixXd m, const Eigen::VectorXd& diag) {
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.eigenvalues().minCoeff() >= 0.0) break;
    const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(0.0);
    m = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
    m = 0.5 * (m + m.transpose()).eval();
    m.diagonal() = diag;
    if (psd_check(m).is_psd) break;
  }
  return m;
}

}  // namespace detail

/// Pairwise estimator. For every pair (i, j) the radius r_t = |(x_ti, x_tj)|
/// is thresholded at its own empirical `quantile`, and
///
///   sigma_ij = (TR_i + TR_j) * mean over exceedances of w_ti w_tj,
///
/// the leading constant being the total mass of the bivariate angular
/// measure. The diagonal is set to the known tail ratios.
inline TPDM estimate_pairwise(const Eigen::MatrixXd& data, double quantile,
                              const Eigen::VectorXd& tail_ratios) {
  const Eigen::Index n = data.rows();
  const Eigen::Index p = data.cols();
  if (n < 100) throw ArgumentError("estimate_pairwise: need at least 100 rows");
  if (!(quantile > 0.0 && quantile < 1.0))
    throw ArgumentError("estimate_pairwise: quantile must lie in (0, 1)");
  if (tail_ratios.size() != p)
    throw ArgumentError("estimate_pairwise: one tail ratio per column is required");
  if (!(tail_ratios.array() > 0.0).all())
    throw ArgumentError("estimate_pairwise: tail ratios must be positive");
  if (!(data.array() >= 0.0).all() || !data.allFinite())
    throw ArgumentError("estimate_pairwise: data must be finite and nonnegative");

  TPDM out;
  out.quantile = quantile;
  out.entries = Eigen::MatrixXd::Zero(p, p);
  out.exceedances = Eigen::MatrixXi::Zero(p, p);
  out.entries.diagonal() = tail_ratios;

  std::vector<double> radius(static_cast<std::size_t>(n));
  std::vector<double> sorted;
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      for (Eigen::Index t = 0; t < n; ++t)
        radius[static_cast<std::size_t>(t)] = std::hypot(data(t, i), data(t, j));
      sorted = radius;
      std::sort(sorted.begin(), sorted.end());
      const double r_star = quantile_sorted(sorted, quantile);
      double acc = 0.0;
      int count = 0;
      for (Eigen::Index t = 0; t < n; ++t) {
        const double r = radius[static_cast<std::size_t>(t)];
        if (r > r_star) {
          acc += (data(t, i) / r) * (data(t, j) / r);
          ++count;
        }
      }
      if (count < kMinPairExceedances)
        throw NumericError("estimate_pairwise: pair (" + std::to_string(i) + ", " +
                           std::to_string(j) + ") has only " + std::to_string(count) +
                           " exceedances; at least " + std::to_string(kMinPairExceedances) +
                           " are required");
      const double sigma = (tail_ratios[i] + tail_ratios[j]) * acc / count;
      out.entries(i, j) = out.entries(j, i) = sigma;
      out.exceedances(i, j) = out.exceedances(j, i) = count;
    }
  }

  if (!psd_check(out.entries).is_psd) {
    out.entries = detail::repair_psd(out.entries, tail_ratios);
    out.psd_repaired = true;
  }
  return out;
}

/// Tail ratios of raw columns measured against the shifted-Pareto reference:
/// TR_i = P(X_i > x*) / P(Z > x*) with x* the empirical `quantile` of column
/// i, i.e. (1 - quantile) (x* + delta)^2. For data that have not been put on
/// a unit-tail-ratio scale.
inline Eigen::VectorXd estimate_tail_ratios(const Eigen::MatrixXd& data, double quantile,
                                            const ParetoSpec& spec) {
  if (!(quantile > 0.0 && quantile < 1.0))
    throw ArgumentError("estimate_tail_ratios: quantile must lie in (0, 1)");
  Eigen::VectorXd out(data.cols());
  std::vector<double> col(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    Eigen::VectorXd::Map(col.data(), data.rows()) = data.col(i);
    const double x_star = tlpred::quantile(col, quantile);
    const double s = x_star + spec.shift();
    out[i] = (1.0 - quantile) * s * s;
  }
  return out;
}

/// Rescale to unit diagonal.
inline Eigen::MatrixXd normalize_unit_diagonal(const Eigen::MatrixXd& m) {
  const Eigen::VectorXd d = m.diagonal().cwiseSqrt().cwiseInverse();
  return d.asDiagonal() * m * d.asDiagonal();
}

}  // namespace tlpred

#endif  // TLPRED_TPDM_HPP
