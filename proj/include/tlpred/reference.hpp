// Gaussian best linear unbiased predictor used as a comparison baseline:
// sample mean and covariance from training rows, MSPE-based intervals.
// Optionally fitted on normal scores, with intervals mapped back through
// the empirical marginal of the target.

#ifndef TLPRED_REFERENCE_HPP
#define TLPRED_REFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "tlpred/angular.hpp"
#include "tlpred/error.hpp"
#include "tlpred/marginal.hpp"
#include "tlpred/stats.hpp"

namespace tlpred {

enum class ReferenceScale { Raw, NormalScores };

class GaussianReference {
 public:
  /// `train` is n x p with the target in column `target`.
  static GaussianReference fit(const Eigen::MatrixXd& train, Eigen::Index target,
                               ReferenceScale scale) {
    const Eigen::Index n = train.rows(), p = train.cols();
    if (n < 3 || p < 2) throw ArgumentError("GaussianReference: need n >= 3 rows and p >= 2 columns");
    if (target < 0 || target >= p) throw ArgumentError("GaussianReference: target out of range");
    GaussianReference g;
    g.scale_ = scale;
    g.target_ = target;
    Eigen::MatrixXd y = train;
    if (scale == ReferenceScale::NormalScores) {
      for (Eigen::Index j = 0; j < p; ++j) {
        std::vector<double> col(train.col(j).data(), train.col(j).data() + n);
        MarginalOptions opt;
        opt.gpd_tail = false;
        g.margins_.push_back(MarginalTransform::fit(col, 0.0, opt));
        for (Eigen::Index i = 0; i < n; ++i) y(i, j) = g.score(j, train(i, j));
      }
    }
    g.mu_ = y.colwise().mean();
    const Eigen::MatrixXd c = y.rowwise() - g.mu_.transpose();
    const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(n - 1);

    Eigen::MatrixXd s11(p - 1, p - 1);
    Eigen::VectorXd s12(p - 1);
    for (Eigen::Index a = 0, i = 0; i < p; ++i) {
      if (i == target) continue;
      for (Eigen::Index b = 0, j = 0; j < p; ++j) {
        if (j == target) continue;
        s11(a, b++) = cov(i, j);
      }
      s12[a++] = cov(i, target);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(s11);
    if (llt.info() != Eigen::Success)
      throw NumericError("GaussianReference: predictor covariance is not positive definite");
    g.w_ = llt.solve(s12);
    g.mspe_ = std::max(0.0, cov(target, target) - s12.dot(g.w_));
    return g;
  }

  /// Interval for one row of predictors (the target entry of `row` is ignored).
  Interval interval(const Eigen::VectorXd& row, double level) const {
    if (!(level > 0.0 && level < 1.0)) throw ArgumentError("GaussianReference: level must lie in (0, 1)");
    double pred = mu_[target_];
    for (Eigen::Index a = 0, i = 0; i < row.size(); ++i) {
      if (i == target_) continue;
      const double v = scale_ == ReferenceScale::NormalScores ? score(i, row[i]) : row[i];
      pred += w_[a++] * (v - mu_[i]);
    }
    const double z = normal_quantile(0.5 * (1.0 + level));
    const double half = z * std::sqrt(mspe_);
    if (scale_ == ReferenceScale::Raw) return {pred - half, pred + half};
    return {unscore(pred - half), unscore(pred + half)};
  }

  const Eigen::VectorXd& weights() const noexcept { return w_; }
  double mspe() const noexcept { return mspe_; }

 private:
  double score(Eigen::Index j, double x) const {
    const auto& m = margins_[static_cast<std::size_t>(j)];
    const double n1 = static_cast<double>(m.sorted_sample().size() + 1);
    const double f = std::clamp(m.cdf(x), 1.0 / n1, 1.0 - 1.0 / n1);
    return normal_quantile(f);
  }

  double unscore(double y) const {
    const auto& m = margins_[static_cast<std::size_t>(target_)];
    const double p = boost::math::cdf(boost::math::normal_distribution<double>(), y);
    return m.quantile(std::min(p, std::nextafter(1.0, 0.0)));
  }

  ReferenceScale scale_ = ReferenceScale::Raw;
  Eigen::Index target_ = 0;
  std::vector<MarginalTransform> margins_;
  Eigen::VectorXd mu_;
  Eigen::VectorXd w_;
  double mspe_ = 0.0;
};

}  // namespace tlpred

#endif  // TLPRED_REFERENCE_HPP
