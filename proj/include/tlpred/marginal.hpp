// Marginal preprocessing: moving-window detrending, generalized Pareto tail
// fits, the semiparametric CDF and the map onto the shifted-Pareto scale
//
//   X = 1 / sqrt(1 - F(X_orig)) - delta,
//
// together with its exact inverse back to the original data scale.

#ifndef TLPRED_MARGINAL_HPP
#define TLPRED_MARGINAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tlpred/error.hpp"
#include "tlpred/pareto.hpp"
#include "tlpred/random.hpp"
#include "tlpred/stats.hpp"

namespace tlpred {

// Detrending ---------------------------------------------------------------

/// Centred moving mean and standard deviation, one entry per time step.
/// Windows are truncated at the series edges.
struct TrendModel {
  int window = 0;
  std::vector<double> means;
  std::vector<double> sds;

  std::size_t size() const noexcept { return means.size(); }
};

struct Detrended {
  std::vector<double> values;
  TrendModel trend;
};

inline Detrended detrend(std::span<const double> series, int window) {
  if (window < 3 || window % 2 == 0)
    throw ArgumentError("detrend: window must be an odd count of at least 3");
  const std::size_t n = series.size();
  if (n < static_cast<std::size_t>(window))
    throw ArgumentError("detrend: series of length " + std::to_string(n) +
                        " is shorter than the window " + std::to_string(window));

  // Prefix sums of the globally centred series limit cancellation.
  const double centre = mean(series);
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = series[i] - centre;
    s1[i + 1] = s1[i] + d;
    s2[i + 1] = s2[i] + d * d;
  }

  const std::size_t half = static_cast<std::size_t>(window / 2);
  Detrended out;
  out.trend.window = window;
  out.trend.means.resize(n);
  out.trend.sds.resize(n);
  out.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(n - 1, t + half);
    const auto m = static_cast<double>(hi - lo + 1);
    const double sum = s1[hi + 1] - s1[lo];
    const double mu = sum / m;
    const double ss = std::max(0.0, (s2[hi + 1] - s2[lo]) - sum * mu);
    const double sd = std::sqrt(ss / (m - 1.0));
    if (!(sd > 1e-12 * (1.0 + std::abs(centre + mu))))
      throw NumericError("detrend: window around time step " + std::to_string(t) +
                         " is constant (zero standard deviation)");
    out.trend.means[t] = centre + mu;
    out.trend.sds[t] = sd;
    out.values[t] = (series[t] - out.trend.means[t]) / sd;
  }
  return out;
}

inline double retrend(const TrendModel& trend, double value, std::size_t t) {
  if (t >= trend.size()) throw ArgumentError("retrend: time index outside the trend model");
  return value * trend.sds[t] + trend.means[t];
}

// Generalized Pareto -------------------------------------------------------

struct GPDParams {
  double sigma = 1.0;
  double xi = 0.0;
  double u = 0.0;  // threshold the excesses are measured from
  std::size_t n_exceed = 0;
  double neg_loglik = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
};

inline constexpr double kXiLower = -0.5;
inline constexpr double kXiUpper = 1.0;
inline constexpr std::size_t kMinExceedances = 30;

/// P(Y <= y) for an excess y >= 0.
inline double gpd_cdf(double y, double sigma, double xi) {
  if (y <= 0.0) return 0.0;
  const double w = y / sigma;
  if (std::abs(xi) < 1e-12) return -std::expm1(-w);
  const double z = 1.0 + xi * w;
  if (z <= 0.0) return 1.0;  // beyond the upper endpoint when xi < 0
  return -std::expm1(-std::log1p(xi * w) / xi);
}

/// Survival 1 - G(y), computed directly so it stays accurate far in the tail.
inline double gpd_sf(double y, double sigma, double xi) {
  if (y <= 0.0) return 1.0;
  const double w = y / sigma;
  if (std::abs(xi) < 1e-12) return std::exp(-w);
  const double z = 1.0 + xi * w;
  if (z <= 0.0) return 0.0;
  return std::exp(-std::log1p(xi * w) / xi);
}

/// Quantile at survival probability s in (0, 1].
inline double gpd_isf(double s, double sigma, double xi) {
  if (!(s > 0.0 && s <= 1.0)) throw ArgumentError("gpd_isf: s must lie in (0, 1]");
  if (std::abs(xi) < 1e-12) return -sigma * std::log(s);
  return sigma * std::expm1(-xi * std::log(s)) / xi;
}

inline double gpd_quantile(double p, double sigma, double xi) {
  if (!(p >= 0.0 && p < 1.0)) throw ArgumentError("gpd_quantile: p must lie in [0, 1)");
  if (std::abs(xi) < 1e-12) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-xi * std::log1p(-p)) / xi;
}

/// Negative log-likelihood; +inf outside the support.
inline double gpd_neg_loglik(std::span<const double> excess, double sigma, double xi) {
  if (!(sigma > 0.0)) return std::numeric_limits<double>::infinity();
  const auto n = static_cast<double>(excess.size());
  double acc = n * std::log(sigma);
  if (std::abs(xi) < 1e-9) {
    // log1p(xi w)/xi expanded to second order around xi = 0.
    for (double y : excess) {
      const double w = y / sigma;
      acc += w + xi * (w - 0.5 * w * w);
    }
    return acc;
  }
  double sum_log = 0.0;
  for (double y : excess) {
    const double z = xi * y / sigma;
    if (z <= -1.0) return std::numeric_limits<double>::infinity();
    sum_log += std::log1p(z);
  }
  return acc + (1.0 + 1.0 / xi) * sum_log;
}

namespace detail {

struct GpdOptimum {
  std::array<double, 2> x;  // (log sigma, xi)
  double value;
  bool converged;
};

// Projected BFGS on (log sigma, xi) with xi boxed to (kXiLower, kXiUpper).
// Gradients by central differences; the problem is two-dimensional.
inline GpdOptimum gpd_bfgs(std::span<const double> excess, std::array<double, 2> x0) {
  constexpr double xi_lo = kXiLower + 1e-6;
  constexpr double xi_hi = kXiUpper - 1e-6;
  auto f = [&](const std::array<double, 2>& x) {
    return gpd_neg_loglik(excess, std::exp(x[0]), x[1]);
  };
  auto project = [&](std::array<double, 2> x) {
    x[1] = std::clamp(x[1], xi_lo, xi_hi);
    return x;
  };
  auto gradient = [&](const std::array<double, 2>& x) {
    std::array<double, 2> g{};
    for (int k = 0; k < 2; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
      auto xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      if (k == 1) {
        xp = project(xp);
        xm = project(xm);
      }
      const double fp = f(xp), fm = f(xm);
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        g[k] = 0.0;
        continue;
      }
      g[k] = (fp - fm) / (xp[k] - xm[k]);
    }
    return g;
  };

  std::array<double, 2> x = project(x0);
  double fx = f(x);
  if (!std::isfinite(fx)) return {x, fx, false};
  std::array<double, 4> hinv{1.0, 0.0, 0.0, 1.0};  // row-major inverse Hessian
  auto g = gradient(x);
  const double scale = static_cast<double>(excess.size());
  for (int iter = 0; iter < 500; ++iter) {
    // Inactive-set handling: freeze xi when pinned at a bound and pushing out.
    const bool pinned_lo = x[1] <= xi_lo && g[1] > 0.0;
    const bool pinned_hi = x[1] >= xi_hi && g[1] < 0.0;
    const bool pinned = pinned_lo || pinned_hi;
    const double gnorm = pinned ? std::abs(g[0]) : std::hypot(g[0], g[1]);
    if (gnorm < 1e-7 * scale) return {x, fx, true};

    std::array<double, 2> dir{-(hinv[0] * g[0] + hinv[1] * g[1]),
                              -(hinv[2] * g[0] + hinv[3] * g[1])};
    if (pinned) dir = {-hinv[0] * g[0], 0.0};
    if (dir[0] * g[0] + dir[1] * g[1] >= 0.0) {
      dir = {-g[0], pinned ? 0.0 : -g[1]};
      hinv = {1.0, 0.0, 0.0, 1.0};
    }

    double step = 1.0;
    std::array<double, 2> xn{};
    double fn = std::numeric_limits<double>::infinity();
    const double slope = dir[0] * g[0] + dir[1] * g[1];
    for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
      xn = project({x[0] + step * dir[0], x[1] + step * dir[1]});
      fn = f(xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * step * slope) break;
    }
    if (!std::isfinite(fn) || fn > fx) return {x, fx, gnorm < 1e-4 * scale};

    const auto gn = gradient(xn);
    const std::array<double, 2> s{xn[0] - x[0], xn[1] - x[1]};
    const std::array<double, 2> y{gn[0] - g[0], gn[1] - g[1]};
    const double sy = s[0] * y[0] + s[1] * y[1];
    const bool small_move = std::abs(fx - fn) < 1e-14 * std::max(1.0, std::abs(fx)) &&
                            std::hypot(s[0], s[1]) < 1e-12;
    x = xn;
    fx = fn;
    g = gn;
    if (small_move) return {x, fx, true};
    if (sy > 1e-16) {
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      const std::array<double, 4> m{1.0 - rho * s[0] * y[0], -rho * s[0] * y[1],
                                    -rho * s[1] * y[0], 1.0 - rho * s[1] * y[1]};
      const std::array<double, 4> mh{m[0] * hinv[0] + m[1] * hinv[2], m[0] * hinv[1] + m[1] * hinv[3],
                                     m[2] * hinv[0] + m[3] * hinv[2], m[2] * hinv[1] + m[3] * hinv[3]};
      hinv = {mh[0] * m[0] + mh[1] * m[1] + rho * s[0] * s[0],
              mh[0] * m[2] + mh[1] * m[3] + rho * s[0] * s[1],
              mh[2] * m[0] + mh[3] * m[1] + rho * s[1] * s[0],
              mh[2] * m[2] + mh[3] * m[3] + rho * s[1] * s[1]};
    }
  }
  return {x, fx, false};
}

}  // namespace detail

inline constexpr int kGpdRestarts = 5;

/// Maximum-likelihood GPD fit to excesses y = x - u (all positive).
/// Starts from the method-of-moments estimate plus seeded random restarts
/// and keeps the best converged optimum.
inline GPDParams fit_gpd(std::span<const double> excess, double threshold = 0.0,
                         std::uint64_t seed = 0x67706466u) {
  if (excess.size() < kMinExceedances)
    throw ArgumentError("fit_gpd: need at least " + std::to_string(kMinExceedances) +
                        " exceedances, got " + std::to_string(excess.size()));
  for (double y : excess)
    if (!(y > 0.0) || !std::isfinite(y))
      throw ArgumentError("fit_gpd: excesses must be positive and finite");

  const double m = mean(excess);
  double var = 0.0;
  for (double y : excess) var += (y - m) * (y - m);
  var /= static_cast<double>(excess.size() - 1);
  const double xi_mom = std::clamp(0.5 * (1.0 - m * m / var), kXiLower + 0.01, kXiUpper - 0.01);
  const double sigma_mom = std::max(0.5 * m * (m * m / var + 1.0), 1e-3 * m);

  Rng rng(seed);
  std::optional<detail::GpdOptimum> best;
  std::string trail;
  for (int r = 0; r < kGpdRestarts; ++r) {
    std::array<double, 2> start{std::log(sigma_mom), xi_mom};
    if (r > 0) start = {std::log(m * rng.uniform(0.5, 2.0)), rng.uniform(-0.4, 0.9)};
    auto opt = detail::gpd_bfgs(excess, start);
    trail += " [start " + std::to_string(r) + ": nll=" + std::to_string(opt.value) +
             (opt.converged ? " converged]" : " not converged]");
    if (!opt.converged || !std::isfinite(opt.value)) continue;
    if (!best || opt.value < best->value) best = opt;
  }
  if (!best) throw NumericError("fit_gpd: no restart converged;" + trail);

  GPDParams out;
  out.sigma = std::exp(best->x[0]);
  out.xi = best->x[1];
  out.u = threshold;
  out.n_exceed = excess.size();
  out.neg_loglik = best->value;
  out.converged = true;
  return out;
}

// Semiparametric marginal transform ---------------------------------------

struct MarginalOptions {
  bool gpd_tail = true;
  double tail_prob = 0.05;  // mass above the GPD threshold
  std::uint64_t seed = 0x67706466u;
};

/// Empirical CDF in the body (linear interpolation through (x_(k), k/(n+1)))
/// joined at the (1 - tail_prob) quantile to a fitted GPD tail.
class MarginalTransform {
 public:
  MarginalTransform() = default;

  static MarginalTransform fit(std::span<const double> sample, double delta,
                               const MarginalOptions& opt = {}) {
    if (!(opt.tail_prob > 0.0 && opt.tail_prob < 1.0))
      throw ArgumentError("MarginalTransform: tail probability must lie in (0, 1)");
    MarginalTransform m;
    m.sorted_.assign(sample.begin(), sample.end());
    for (double v : m.sorted_)
      if (!std::isfinite(v)) throw ArgumentError("MarginalTransform: non-finite sample value");
    if (m.sorted_.size() < 2) throw ArgumentError("MarginalTransform: need at least 2 values");
    std::sort(m.sorted_.begin(), m.sorted_.end());
    m.delta_ = delta;
    m.tail_prob_ = opt.tail_prob;
    m.u_ = m.body_quantile(1.0 - opt.tail_prob);
    if (opt.gpd_tail) {
      std::vector<double> excess;
      for (double v : m.sorted_)
        if (v > m.u_) excess.push_back(v - m.u_);
      m.gpd_ = fit_gpd(excess, m.u_, opt.seed);
    }
    return m;
  }

  /// Rebuild from persisted parts (sorted sample, delta, tail settings).
  static MarginalTransform from_parts(std::vector<double> sorted, double delta, double tail_prob,
                                      std::optional<GPDParams> gpd) {
    if (sorted.size() < 2 || !std::is_sorted(sorted.begin(), sorted.end()))
      throw ArgumentError("MarginalTransform: persisted body must be sorted with >= 2 values");
    MarginalTransform m;
    m.sorted_ = std::move(sorted);
    m.delta_ = delta;
    m.tail_prob_ = tail_prob;
    m.u_ = m.body_quantile(1.0 - tail_prob);
    m.gpd_ = gpd;
    if (m.gpd_) m.gpd_->u = m.u_;
    return m;
  }

  double cdf(double x) const {
    if (gpd_ && x >= u_) return (1.0 - tail_prob_) + tail_prob_ * gpd_cdf(x - u_, gpd_->sigma, gpd_->xi);
    return body_cdf(x);
  }

  double quantile(double p) const {
    if (!(p >= 0.0 && p < 1.0)) throw ArgumentError("MarginalTransform: quantile p outside [0, 1)");
    if (gpd_ && p > 1.0 - tail_prob_)
      return u_ + gpd_quantile((p - (1.0 - tail_prob_)) / tail_prob_, gpd_->sigma, gpd_->xi);
    return body_quantile(p);
  }

  /// 1 - F(x); in the GPD tail this avoids the cancellation in 1 - cdf(x).
  double survival(double x) const {
    if (gpd_ && x >= u_) return tail_prob_ * gpd_sf(x - u_, gpd_->sigma, gpd_->xi);
    return 1.0 - body_cdf(x);
  }

  double to_pareto(double x) const {
    const double sf = survival(x);
    if (!(sf > 0.0))
      throw NumericError("to_pareto_scale: F(x) = 1, the transform is infinite at x = " +
                         std::to_string(x));
    return 1.0 / std::sqrt(sf) - delta_;
  }

  /// Inverse of to_pareto. Values at or below the lower endpoint 1 - delta
  /// map to the sample minimum.
  double from_pareto(double z) const {
    const double s = z + delta_;
    if (s <= 1.0) return quantile(0.0);
    const double sf = 1.0 / (s * s);
    if (gpd_ && sf < tail_prob_) return u_ + gpd_isf(sf / tail_prob_, gpd_->sigma, gpd_->xi);
    const double p = 1.0 - sf;
    return quantile(std::min(p, std::nextafter(1.0, 0.0)));
  }

  double threshold() const noexcept { return u_; }
  double delta() const noexcept { return delta_; }
  double tail_prob() const noexcept { return tail_prob_; }
  const std::optional<GPDParams>& gpd() const noexcept { return gpd_; }
  const std::vector<double>& sorted_sample() const noexcept { return sorted_; }

  /// Largest gap between consecutive order statistics; bounds round-trip error.
  double max_spacing() const {
    double gap = 0.0;
    for (std::size_t i = 1; i < sorted_.size(); ++i) gap = std::max(gap, sorted_[i] - sorted_[i - 1]);
    return gap;
  }

 private:
  double n1() const { return static_cast<double>(sorted_.size() + 1); }

  double body_cdf(double x) const {
    const std::size_t n = sorted_.size();
    if (x < sorted_.front()) return 0.0;
    if (x >= sorted_.back()) return static_cast<double>(n) / n1();
    const auto k = static_cast<std::size_t>(
        std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin());  // 1..n-1
    const double lo = sorted_[k - 1], hi = sorted_[k];
    const double frac = hi > lo ? (x - lo) / (hi - lo) : 0.0;
    return (static_cast<double>(k) + frac) / n1();
  }

  double body_quantile(double p) const {
    const std::size_t n = sorted_.size();
    const double pos = p * n1();
    if (pos <= 1.0) return sorted_.front();
    if (pos >= static_cast<double>(n)) return sorted_.back();
    const auto k = static_cast<std::size_t>(std::floor(pos));  // 1..n-1
    const double frac = pos - static_cast<double>(k);
    return sorted_[k - 1] + frac * (sorted_[k] - sorted_[k - 1]);
  }

  std::vector<double> sorted_;
  double delta_ = 0.0;
  double tail_prob_ = 0.05;
  double u_ = 0.0;
  std::optional<GPDParams> gpd_;
};

/// Pareto-scale value back to the original data scale, optionally retrended
/// at time step t.
inline double back_transform(const MarginalTransform& transform, const TrendModel* trend,
                             std::size_t t, double z) {
  const double x = transform.from_pareto(z);
  return trend ? retrend(*trend, x, t) : x;
}

}  // namespace tlpred

#endif  // TLPRED_MARGINAL_HPP
