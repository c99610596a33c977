// The shifted Pareto law used for the generating variables Z and for the
// marginal scale of transformed data:  P(Z > z) = (z + delta)^-2  for
// z > 1 - delta.  The shift is chosen so the softplus preimages are centred,
// E[t^-1(Z)] = 0.

#ifndef TLPRED_PARETO_HPP
#define TLPRED_PARETO_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include "tlpred/error.hpp"
#include "tlpred/translin.hpp"

namespace tlpred {

/// E[t^-1(Z)] for the shift `delta`, by tanh-sinh quadrature in the uniform
/// coordinate u, where Z = u^(-1/2) - delta. The integrand has an integrable
/// u^(-1/2) singularity at u = 0.
inline double centering_objective(double delta) {
  if (!(delta >= 0.0 && delta < 1.0))
    throw ArgumentError("centering_objective: shift must lie in [0, 1)");
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [delta](double u) {
    const double z = 1.0 / std::sqrt(u) - delta;
    return softplus_inv(z);
  };
  return integrator.integrate(f, 0.0, 1.0, 1e-13);
}

struct DeltaSolution {
  double delta;
  double objective;  // E[t^-1(Z)] at the root
};

/// Root of E[t^-1(Z)] = 0 on [0.5, 0.999]; the objective is decreasing there.
inline DeltaSolution solve_delta() {
  constexpr double lo = 0.5;
  constexpr double hi = 0.999;
  const double f_lo = centering_objective(lo);
  const double f_hi = centering_objective(hi);
  if (!(f_lo > 0.0 && f_hi < 0.0))
    throw NumericError("solve_delta: root is not bracketed by [0.5, 0.999]");
  std::uintmax_t max_iter = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) < 1e-14; };
  auto [a, b] = boost::math::tools::toms748_solve(centering_objective, lo, hi, f_lo, f_hi, tol,
                                                  max_iter);
  if (max_iter >= 200) throw NumericError("solve_delta: root finder did not converge");
  const double delta = 0.5 * (a + b);
  return {delta, centering_objective(delta)};
}

/// The centring shift, computed once.
inline double centered_shift() {
  static const double delta = solve_delta().delta;
  return delta;
}

/// Shifted Pareto with tail index 2.
class ParetoSpec {
 public:
  static constexpr double alpha = 2.0;

  explicit ParetoSpec(double shift) : shift_(shift) {
    if (!(shift >= 0.0 && shift < 1.0))
      throw ArgumentError("ParetoSpec: shift must lie in [0, 1) so that Z stays positive");
  }
  static ParetoSpec centered() { return ParetoSpec(centered_shift()); }

  double shift() const noexcept { return shift_; }
  double lower_bound() const noexcept { return 1.0 - shift_; }

  double survival(double z) const {
    if (z <= lower_bound()) return 1.0;
    const double s = z + shift_;
    return 1.0 / (s * s);
  }
  /// Inverse CDF of the uniform draw u; u = 0.25 gives 2 - delta.
  double from_uniform(double u) const { return 1.0 / std::sqrt(u) - shift_; }
  /// z with P(Z > z) = p.
  double upper_quantile(double p) const { return 1.0 / std::sqrt(p) - shift_; }

 private:
  double shift_;
};

}  // namespace tlpred

#endif  // TLPRED_PARETO_HPP
