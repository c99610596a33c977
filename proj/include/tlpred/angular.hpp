// Bivariate angular measure of (X_hat, X) estimated from a factor ensemble,
// the joint region between its angular quantiles, a boundary-corrected
// kernel density of it, and the conditional density and intervals of X
// given a large X_hat.
//
// Angles are theta = atan2(x, x_hat) in [0, pi/2] and h is a density in
// theta. In Cartesian coordinates the limit measure of a tail-index-2 vector
// has intensity 2 r^-4 h(theta), r = |(x_hat, x)|, so given X_hat = x_hat
//
//   f(x | x_hat) = 2 c^-1 r^-4 h(atan2(x, x_hat)),
//
// which is homogeneous: the law of X / x_hat does not depend on x_hat.
// Substituting x = x_hat tan(theta) turns the normalizer into
// c = 2 x_hat^-3 int_0^{pi/2} cos^2(theta) h(theta) dtheta.

#ifndef TLPRED_ANGULAR_HPP
#define TLPRED_ANGULAR_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "tlpred/cpfactor.hpp"
#include "tlpred/error.hpp"
#include "tlpred/simulate.hpp"
#include "tlpred/stats.hpp"

namespace tlpred {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

struct AngularAtom {
  double weight;
  double angle;  // radians in [0, pi/2]
};

struct AngularMeasureEstimate {
  std::vector<AngularAtom> atoms;
  double total_mass = 0.0;
};

/// Columns of every factor become atoms of weight |b_j|^2 / n_decomp.
inline AngularMeasureEstimate masses_from_ensemble(const std::vector<CPFactor>& factors,
                                                   int n_decomp) {
  if (factors.empty()) throw ArgumentError("masses_from_ensemble: empty ensemble");
  if (n_decomp < 1) throw ArgumentError("masses_from_ensemble: n_decomp must be positive");
  AngularMeasureEstimate out;
  const double inv = 1.0 / static_cast<double>(n_decomp);
  for (const auto& f : factors) {
    if (f.b.rows() != 2) throw ArgumentError("masses_from_ensemble: factors must have two rows");
    for (Eigen::Index j = 0; j < f.b.cols(); ++j) {
      const double w = f.b.col(j).squaredNorm();
      if (w <= 0.0) continue;
      out.atoms.push_back({w * inv, std::atan2(f.b(1, j), f.b(0, j))});
      out.total_mass += w * inv;
    }
  }
  if (out.atoms.empty()) throw NumericError("masses_from_ensemble: every column is zero");
  return out;
}

/// The bivariate angular measure of a 2-row generator.
inline AngularMeasureEstimate measure_of_generator(const GeneratorMatrix& a) {
  if (a.rows() != 2) throw ArgumentError("measure_of_generator: generator must have two rows");
  AngularMeasureEstimate out;
  for (const auto& m : angular_measure_of(a)) {
    out.atoms.push_back({m.weight, m.angle()});
    out.total_mass += m.weight;
  }
  return out;
}

// Joint region --------------------------------------------------------------

struct JointRegion {
  double theta_lo;
  double theta_hi;

  /// Whether (x_hat, x) lies in the cone between the two angles.
  bool contains(double x_hat, double x) const {
    const double th = std::atan2(x, x_hat);
    return th >= theta_lo && th <= theta_hi;
  }
};

/// Mass-weighted angle quantile: the smallest atom angle whose cumulative
/// mass fraction reaches p.
inline double weighted_angle_quantile(const AngularMeasureEstimate& h, double p) {
  if (!(h.total_mass > 0.0)) throw ArgumentError("angular quantile: total mass must be positive");
  std::vector<AngularAtom> sorted = h.atoms;
  std::sort(sorted.begin(), sorted.end(),
            [](const AngularAtom& a, const AngularAtom& b) { return a.angle < b.angle; });
  double total = 0.0;
  for (const auto& a : sorted) total += a.weight;
  const double target = p * total * (1.0 - 1e-12);
  double cum = 0.0;
  for (const auto& a : sorted) {
    cum += a.weight;
    if (cum >= target) return a.angle;
  }
  return sorted.back().angle;
}

inline JointRegion joint_region(const AngularMeasureEstimate& h, double level = 0.95) {
  if (!(level > 0.0 && level < 1.0)) throw ArgumentError("joint_region: level must lie in (0, 1)");
  return {weighted_angle_quantile(h, 0.5 * (1.0 - level)),
          weighted_angle_quantile(h, 0.5 * (1.0 + level))};
}

// Kernel density ------------------------------------------------------------

struct KdeOptions {
  std::optional<double> bandwidth;   // in the logit coordinate; auto when empty
  double boundary_clamp = 0.01;      // atoms are kept this far (radians) from 0 and pi/2
  int grid_points = 1025;
};

/// Gaussian KDE smoothed in s = log(theta / (pi/2 - theta)) and mapped back
/// with the Jacobian ds/dtheta, so no mass leaks past the boundaries and the
/// density integrates to the total mass.
class AngularDensity {
 public:
  AngularDensity(std::vector<double> centres, std::vector<double> weights, double total_mass,
                 double bandwidth, double clamp)
      : centres_(std::move(centres)),
        weights_(std::move(weights)),
        total_mass_(total_mass),
        bandwidth_(bandwidth),
        clamp_(clamp) {}

  double operator()(double theta) const {
    if (!(theta > 0.0 && theta < kHalfPi)) return 0.0;
    const double rest = kHalfPi - theta;
    return in_logit(std::log(theta / rest)) * kHalfPi / (theta * rest);
  }

  /// The same measure as a density in s: a Gaussian mixture times the mass.
  double in_logit(double s) const {
    const double inv_bw = 1.0 / bandwidth_;
    double acc = 0.0;
    for (std::size_t k = 0; k < centres_.size(); ++k) {
      const double d = (s - centres_[k]) * inv_bw;
      if (std::abs(d) < 38.0) acc += weights_[k] * std::exp(-0.5 * d * d);
    }
    return total_mass_ * acc * inv_bw / std::sqrt(2.0 * std::numbers::pi);
  }

  /// Interval in s beyond which every kernel is below exp(-72) of its peak.
  std::pair<double, double> logit_support() const {
    const auto [lo, hi] = std::minmax_element(centres_.begin(), centres_.end());
    return {*lo - 12.0 * bandwidth_, *hi + 12.0 * bandwidth_};
  }

  double bandwidth() const noexcept { return bandwidth_; }
  double total_mass() const noexcept { return total_mass_; }
  double boundary_clamp() const noexcept { return clamp_; }
  const std::vector<double>& centres() const noexcept { return centres_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Evenly spaced interior grid of (theta, h(theta)) for export.
  std::vector<std::pair<double, double>> grid(int points) const {
    std::vector<std::pair<double, double>> g;
    g.reserve(static_cast<std::size_t>(points));
    for (int i = 1; i <= points; ++i) {
      const double th = kHalfPi * i / (points + 1);
      g.emplace_back(th, (*this)(th));
    }
    return g;
  }

 private:
  std::vector<double> centres_;  // atoms in the logit coordinate
  std::vector<double> weights_;  // normalized to sum 1
  double total_mass_;
  double bandwidth_;
  double clamp_;
};

/// Weighted normal-reference bandwidth 1.06 sd n_eff^(-1/5) in the logit
/// coordinate, n_eff the Kish effective sample size.
inline double kde_auto_bandwidth(const std::vector<double>& centres,
                                 const std::vector<double>& weights) {
  double mu = 0.0, sum_w2 = 0.0;
  for (std::size_t k = 0; k < centres.size(); ++k) {
    mu += weights[k] * centres[k];
    sum_w2 += weights[k] * weights[k];
  }
  double var = 0.0;
  for (std::size_t k = 0; k < centres.size(); ++k)
    var += weights[k] * (centres[k] - mu) * (centres[k] - mu);
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12))
    throw NumericError("kde_angular: all atoms coincide; an explicit bandwidth is required");
  return 1.06 * sd * std::pow(1.0 / sum_w2, -0.2);
}

inline AngularDensity kde_angular(const AngularMeasureEstimate& h, const KdeOptions& opt = {}) {
  if (h.atoms.empty() || !(h.total_mass > 0.0))
    throw ArgumentError("kde_angular: measure has no mass");
  if (!(opt.boundary_clamp > 0.0 && opt.boundary_clamp < kHalfPi / 2.0))
    throw ArgumentError("kde_angular: boundary clamp must lie in (0, pi/4)");
  std::vector<double> centres, weights;
  double wsum = 0.0;
  for (const auto& a : h.atoms) wsum += a.weight;
  for (const auto& a : h.atoms) {
    const double th = std::clamp(a.angle, opt.boundary_clamp, kHalfPi - opt.boundary_clamp);
    centres.push_back(std::log(th / (kHalfPi - th)));
    weights.push_back(a.weight / wsum);
  }
  double bw;
  if (opt.bandwidth) {
    if (!(*opt.bandwidth > 0.0)) throw ArgumentError("kde_angular: bandwidth must be positive");
    bw = *opt.bandwidth;
  } else {
    bw = kde_auto_bandwidth(centres, weights);
  }
  return AngularDensity(std::move(centres), std::move(weights), h.total_mass, bw,
                        opt.boundary_clamp);
}

inline double theta_of_logit(double s) { return kHalfPi / (1.0 + std::exp(-s)); }

/// cos(theta(s)) without cancellation near pi/2.
inline double cos_theta_of_logit(double s) { return std::sin(kHalfPi / (1.0 + std::exp(s))); }

/// d theta / ds.
inline double theta_jacobian(double s) {
  return kHalfPi / ((1.0 + std::exp(-s)) * (1.0 + std::exp(s)));
}

/// Integral of f over (0, pi/2) by adaptive Gauss-Kronrod after the change of
/// variable theta = theta(s), which turns the boundary layers of h into
/// Gaussian tails on the real line.
inline double integrate_angular(const std::function<double(double)>& f) {
  const auto g = [&f](double s) {
    const double jac = theta_jacobian(s);
    return jac > 0.0 ? f(theta_of_logit(s)) * jac : 0.0;
  };
  double err = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, -inf, inf, 15, 1e-12, &err);
}

// Conditional density -------------------------------------------------------

inline constexpr int kConditionalGridPoints = 2048;
inline constexpr double kGridLowerRatio = 1e-4;
inline constexpr double kOmittedTailMass = 1e-8;

/// Conditional law of X given X_hat = x_hat. The CDF of theta is tabulated
/// on panels in the logit coordinate s (Gauss-Legendre per panel) and
/// inverted by bisection; the normalizer is the total of the same table.
class ConditionalDensity {
 public:
  ConditionalDensity(std::shared_ptr<const AngularDensity> h, double x_hat) : h_(std::move(h)), x_hat_(x_hat) {
    if (!(x_hat > 0.0) || !std::isfinite(x_hat))
      throw ArgumentError("conditional_density: x_hat must be positive and finite");
    const auto& hd = *h_;

    // Panels no wider than half a bandwidth across the support of h in s.
    const auto [s_lo, s_hi] = hd.logit_support();
    const int panels = std::clamp(static_cast<int>(std::ceil((s_hi - s_lo) / (0.5 * hd.bandwidth()))),
                                  kMinPanels, kMaxPanels);
    panel_edges_.resize(static_cast<std::size_t>(panels) + 1);
    panel_cdf_.assign(static_cast<std::size_t>(panels) + 1, 0.0);
    for (int i = 0; i <= panels; ++i) panel_edges_[i] = s_lo + (s_hi - s_lo) * i / panels;
    for (int i = 0; i < panels; ++i)
      panel_cdf_[i + 1] = panel_cdf_[i] + weighted_integral(panel_edges_[i], panel_edges_[i + 1]);
    angular_integral_ = panel_cdf_.back();
    normalizer_ = 2.0 * angular_integral_ / (x_hat * x_hat * x_hat);
    if (!(normalizer_ > 1e-300) || !(angular_integral_ > 1e-300))
      throw NumericError("conditional_density: normalizer vanishes; the angular mass sits at x_hat = 0");
    for (double& v : panel_cdf_) v /= angular_integral_;

    // Export grid in x: log-spaced ratios x / x_hat up to the envelope bound.
    double h_max = 0.0;
    for (const auto& [th, v] : hd.grid(4097)) h_max = std::max(h_max, v);
    const double upper = std::clamp(
        std::cbrt(h_max / (3.0 * kOmittedTailMass * angular_integral_)), 10.0, 1e8);
    grid_.resize(kConditionalGridPoints);
    density_.resize(kConditionalGridPoints);
    const double l0 = std::log(kGridLowerRatio), l1 = std::log(upper);
    for (int i = 0; i < kConditionalGridPoints; ++i) {
      const double u = std::exp(l0 + (l1 - l0) * i / (kConditionalGridPoints - 1));
      grid_[i] = x_hat * u;
      density_[i] = (*this)(grid_[i]);
    }
  }

  /// f(x | x_hat).
  double operator()(double x) const {
    if (!(x > 0.0)) return 0.0;
    const double r2 = x_hat_ * x_hat_ + x * x;
    return 2.0 * (*h_)(std::atan2(x, x_hat_)) / (r2 * r2) / normalizer_;
  }

  double cdf(double x) const {
    if (!(x > 0.0)) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double th = std::atan2(x, x_hat_), rest = std::atan2(x_hat_, x);
    return logit_cdf(std::log(th / rest));
  }

  double quantile(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("conditional quantile: p outside [0, 1]");
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return std::numeric_limits<double>::infinity();
    const double s = logit_quantile(p);
    return x_hat_ * std::sin(theta_of_logit(s)) / cos_theta_of_logit(s);
  }

  double x_hat() const noexcept { return x_hat_; }
  double normalizer() const noexcept { return normalizer_; }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& density() const noexcept { return density_; }
  const AngularDensity& angular() const noexcept { return *h_; }

 private:
  static constexpr int kMinPanels = 1024;
  static constexpr int kMaxPanels = 1 << 16;

  // Integral of cos^2(theta) h over [a, b] in s.
  double weighted_integral(double a, double b) const {
    const auto& hd = *h_;
    return boost::math::quadrature::gauss<double, 15>::integrate(
        [&hd](double s) {
          const double c = cos_theta_of_logit(s);
          return c * c * hd.in_logit(s);
        },
        a, b);
  }

  std::size_t panel_of(double s) const {
    const double lo = panel_edges_.front(), hi = panel_edges_.back();
    const auto n = panel_edges_.size() - 1;
    return std::min(n - 1, static_cast<std::size_t>((s - lo) / (hi - lo) * static_cast<double>(n)));
  }

  double logit_cdf(double s) const {
    if (s <= panel_edges_.front()) return 0.0;
    if (s >= panel_edges_.back()) return 1.0;
    const auto i = panel_of(s);
    return std::min(1.0, panel_cdf_[i] + weighted_integral(panel_edges_[i], s) / angular_integral_);
  }

  double logit_quantile(double p) const {
    const auto it = std::lower_bound(panel_cdf_.begin(), panel_cdf_.end(), p);
    const auto last = static_cast<std::ptrdiff_t>(panel_cdf_.size()) - 2;
    const auto i = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - panel_cdf_.begin() - 1, 0, last));
    double lo = panel_edges_[i], hi = panel_edges_[i + 1];
    for (int iter = 0; iter < 100 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++iter) {
      const double mid = 0.5 * (lo + hi);
      if (panel_cdf_[i] + weighted_integral(panel_edges_[i], mid) / angular_integral_ < p)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  std::shared_ptr<const AngularDensity> h_;
  double x_hat_;
  double angular_integral_ = 0.0;  // integral of cos^2 h over (0, pi/2)
  double normalizer_ = 0.0;
  std::vector<double> panel_edges_;
  std::vector<double> panel_cdf_;
  std::vector<double> grid_;
  std::vector<double> density_;
};

inline ConditionalDensity conditional_density(std::shared_ptr<const AngularDensity> h, double x_hat) {
  return ConditionalDensity(std::move(h), x_hat);
}

struct Interval {
  double lo;
  double hi;
  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
};

/// Equal-tail interval between the (1 - level)/2 and (1 + level)/2 quantiles.
inline Interval conditional_interval(const ConditionalDensity& f, double level = 0.95) {
  if (!(level >= 0.0 && level < 1.0))
    throw ArgumentError("conditional_interval: level must lie in [0, 1)");
  return {f.quantile(0.5 * (1.0 - level)), f.quantile(0.5 * (1.0 + level))};
}

/// Interval for x_hat = 1. By homogeneity the interval at any x_hat is
/// x_hat times this one.
inline Interval ray_interval(std::shared_ptr<const AngularDensity> h, double level = 0.95) {
  return conditional_interval(conditional_density(std::move(h), 1.0), level);
}

// Coverage ------------------------------------------------------------------

struct PredictionPair {
  double x_hat;
  double x_true;
};

struct CoverageReport {
  double coverage = 0.0;
  std::size_t n_retained = 0;
  double threshold = 0.0;
  double mean_width = 0.0;
};

inline constexpr std::size_t kMinRetainedPairs = 50;

/// Coverage over pairs whose x_hat exceeds its `threshold_quantile`, using an
/// arbitrary interval rule.
inline CoverageReport coverage_rate(const std::vector<PredictionPair>& pairs,
                                    const std::function<Interval(double)>& interval_for,
                                    double threshold_quantile) {
  if (pairs.empty()) throw ArgumentError("assess_coverage: no pairs");
  std::vector<double> xh;
  xh.reserve(pairs.size());
  for (const auto& p : pairs) xh.push_back(p.x_hat);
  CoverageReport rep;
  rep.threshold = quantile(xh, threshold_quantile);
  std::size_t hits = 0;
  double width = 0.0;
  for (const auto& p : pairs) {
    if (!(p.x_hat > rep.threshold)) continue;
    ++rep.n_retained;
    const Interval iv = interval_for(p.x_hat);
    hits += iv.contains(p.x_true) ? 1 : 0;
    width += iv.width();
  }
  if (rep.n_retained < kMinRetainedPairs)
    throw ArgumentError("assess_coverage: only " + std::to_string(rep.n_retained) +
                        " pairs exceed the threshold; at least " +
                        std::to_string(kMinRetainedPairs) + " are required");
  rep.coverage = static_cast<double>(hits) / static_cast<double>(rep.n_retained);
  rep.mean_width = width / static_cast<double>(rep.n_retained);
  return rep;
}

/// Coverage of the conditional intervals from the angular density h.
inline CoverageReport assess_coverage(const std::vector<PredictionPair>& pairs,
                                      std::shared_ptr<const AngularDensity> h,
                                      double threshold_quantile = 0.95, double level = 0.95) {
  const Interval unit = ray_interval(std::move(h), level);
  return coverage_rate(
      pairs, [&unit](double x_hat) { return Interval{unit.lo * x_hat, unit.hi * x_hat}; },
      threshold_quantile);
}

}  // namespace tlpred

#endif  // TLPRED_ANGULAR_HPP
