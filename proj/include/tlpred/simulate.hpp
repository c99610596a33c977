// Regularly varying inputs and transformed-linear constructions X = A (.) Z.

#ifndef TLPRED_SIMULATE_HPP
#define TLPRED_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tlpred/error.hpp"
#include "tlpred/pareto.hpp"
#include "tlpred/random.hpp"
#include "tlpred/translin.hpp"

namespace tlpred {

/// Rows per independently seeded block of sample_z.
inline constexpr Eigen::Index kSampleBlockRows = 4096;

/// n x q i.i.d. shifted-Pareto draws. Block b of rows uses stream (seed, b),
/// so the result is a function of the seed alone.
inline Eigen::MatrixXd sample_z(Eigen::Index q, Eigen::Index n, const ParetoSpec& spec,
                                std::uint64_t seed) {
  if (q < 1) throw ArgumentError("sample_z: q must be at least 1");
  if (n < 0) throw ArgumentError("sample_z: n must be nonnegative");
  Eigen::MatrixXd z(n, q);
  for (Eigen::Index start = 0, block = 0; start < n; start += kSampleBlockRows, ++block) {
    Rng rng(seed, static_cast<std::uint64_t>(block));
    const Eigen::Index stop = std::min(n, start + kSampleBlockRows);
    for (Eigen::Index i = start; i < stop; ++i)
      for (Eigen::Index j = 0; j < q; ++j) z(i, j) = spec.from_uniform(rng.uniform());
  }
  return z;
}

/// Row-wise A (.) z for an n x q matrix of positive inputs; returns n x p.
inline Eigen::MatrixXd construct_x(const GeneratorMatrix& a, const Eigen::MatrixXd& z) {
  if (z.cols() != a.cols())
    throw ArgumentError("construct_x: Z has " + std::to_string(z.cols()) +
                        " columns, generator expects " + std::to_string(a.cols()));
  if (z.size() > 0 && !(z.array() > 0.0).all())
    throw DomainError("construct_x: inputs must be strictly positive");
  Eigen::MatrixXd pre = softplus_inv(z) * a.entries().transpose();
  return softplus(pre);
}

/// One atom of a discrete angular measure.
struct AngularPointMass {
  double weight;              // squared L2 norm of the clipped column
  Eigen::VectorXd direction;  // unit L2 direction in the orthant
  /// atan2(direction[1], direction[0]); meaningful for bivariate measures.
  double angle() const { return std::atan2(direction[1], direction[0]); }
};

/// Columns whose clipped norm falls below this carry no tail mass.
inline constexpr double kMinColumnNorm = 1e-12;

/// H = sum_j |a_j^(0)|^2 delta_{a_j^(0)/|a_j^(0)|}.
inline std::vector<AngularPointMass> angular_measure_of(const GeneratorMatrix& a) {
  const Eigen::MatrixXd clipped = zero_clip(a.entries());
  std::vector<AngularPointMass> out;
  for (Eigen::Index j = 0; j < clipped.cols(); ++j) {
    const double norm = clipped.col(j).norm();
    if (norm < kMinColumnNorm) continue;
    out.push_back({norm * norm, clipped.col(j) / norm});
  }
  if (out.empty())
    throw NumericError("angular_measure_of: every column is nonpositive; the measure is degenerate");
  return out;
}

inline double total_mass(const std::vector<AngularPointMass>& h) {
  double s = 0.0;
  for (const auto& m : h) s += m.weight;
  return s;
}

// Tail diagnostics ----------------------------------------------------------

/// Fraction of entries strictly above `level`.
inline double exceedance_fraction(const Eigen::Ref<const Eigen::VectorXd>& x, double level) {
  if (x.size() == 0) return 0.0;
  return static_cast<double>((x.array() > level).count()) / static_cast<double>(x.size());
}

/// P(X > z) / P(Z > z) estimated from two samples at the same level.
inline double empirical_tail_ratio(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Ref<const Eigen::VectorXd>& z, double level) {
  const double pz = exceedance_fraction(z, level);
  if (pz == 0.0) throw NumericError("empirical_tail_ratio: no reference exceedances at level");
  return exceedance_fraction(x, level) / pz;
}

/// Ratio of the counts of rows with L2 norm above r and above 2r. Tends to
/// 2^alpha = 4 for a regularly varying sample as r grows.
inline double radial_scaling_ratio(const Eigen::MatrixXd& x, double r) {
  const Eigen::VectorXd norms = x.rowwise().norm();
  const auto far = (norms.array() > 2.0 * r).count();
  if (far == 0) throw NumericError("radial_scaling_ratio: no exceedances of 2r");
  return static_cast<double>((norms.array() > r).count()) / static_cast<double>(far);
}

}  // namespace tlpred

#endif  // TLPRED_SIMULATE_HPP
