// Completely positive factorization of the 2 x 2 prediction inner-product
// matrix: nonnegative 2 x q* factors B with B B^T = Gamma.
//
// Any factor can be written B = L W, where L is the Cholesky factor of Gamma
// and W is 2 x q* with orthonormal rows (the first two rows of a q* x q*
// orthogonal matrix acting on [L 0]). The search alternates between the
// nonnegative orthant and that set of factors:
//
//   P = max(L W, 0),     W = polar(L^T P)       (orthogonal Procrustes)
//
// starting from a random orthogonal matrix built from small Givens
// rotations. Distinct seeds give distinct factors.

#ifndef TLPRED_CPFACTOR_HPP
#define TLPRED_CPFACTOR_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tlpred/error.hpp"
#include "tlpred/random.hpp"

namespace tlpred {

struct CPFactor {
  Eigen::MatrixXd b;  // 2 x q*, entrywise >= 0
  std::uint64_t seed = 0;
  int iterations = 0;
  int restarts = 0;
};

struct CPOptions {
  int max_iter = 5000;
  double tol = 1e-10;        // allowed negativity, relative to sqrt(max diag)
  int restart_budget = 20;
  double max_angle = 0.3;    // Givens angles ~ uniform(-max_angle, max_angle)
  int givens_per_pair = 5;   // rotations drawn per coordinate pair
};

inline constexpr double kReconstructionTol = 1e-8;

/// Lower-triangular L with L L^T = Gamma and nonnegative entries.
inline Eigen::Matrix2d cholesky_seed(const Eigen::Matrix2d& gamma) {
  const double scale = std::max(std::abs(gamma(0, 0)), std::abs(gamma(1, 1)));
  if (!gamma.allFinite()) throw ArgumentError("cholesky_seed: non-finite entry");
  if (std::abs(gamma(0, 1) - gamma(1, 0)) > 1e-12 * std::max(1.0, scale))
    throw ArgumentError("cholesky_seed: matrix is not symmetric");
  if (!(gamma(0, 0) > 0.0)) throw NumericError("cholesky_seed: Gamma_11 must be positive");
  if (gamma(1, 0) < 0.0) throw NumericError("cholesky_seed: off-diagonal entry is negative");
  Eigen::Matrix2d l = Eigen::Matrix2d::Zero();
  l(0, 0) = std::sqrt(gamma(0, 0));
  l(1, 0) = gamma(1, 0) / l(0, 0);
  const double rem = gamma(1, 1) - l(1, 0) * l(1, 0);
  if (rem < -1e-10 * std::max(1.0, scale))
    throw NumericError("cholesky_seed: matrix is not positive semi-definite");
  l(1, 1) = std::sqrt(std::max(rem, 0.0));
  return l;
}

namespace detail {

inline Eigen::MatrixXd random_givens_orthogonal(int n, Rng& rng, const CPOptions& opt) {
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  const int steps = opt.givens_per_pair * n * (n - 1) / 2;
  for (int s = 0; s < steps; ++s) {
    const auto i = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    auto j = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
    if (j >= i) ++j;
    const double a = rng.uniform(-opt.max_angle, opt.max_angle);
    const double c = std::cos(a), sn = std::sin(a);
    // Q <- Q G(i, j, a): mixes columns i and j.
    const Eigen::VectorXd ci = q.col(i);
    q.col(i) = c * ci + sn * q.col(j);
    q.col(j) = -sn * ci + c * q.col(j);
  }
  return q;
}

// Polar factor of a 2 x n matrix with full row rank: U V^T from the thin SVD.
inline Eigen::MatrixXd polar_rows(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

struct Attempt {
  Eigen::MatrixXd b;
  int iterations;
  bool ok;
};

inline Attempt cp_attempt(const Eigen::Matrix2d& l, int qstar, std::uint64_t seed,
                          const CPOptions& opt, double neg_tol) {
  Rng rng(seed);
  const Eigen::MatrixXd q = random_givens_orthogonal(qstar, rng, opt);
  Eigen::MatrixXd w = q.topRows(2);
  Eigen::MatrixXd b = l * w;
  // Rank-one Gamma: L^T P has a zero row, so W is only determined along the
  // first row; keep the second row orthogonal by completing from q.
  const bool rank_one = l(1, 1) <= 1e-14 * l(0, 0);
  for (int it = 0; it <= opt.max_iter; ++it) {
    if (b.minCoeff() >= -neg_tol) return {b, it, true};
    const Eigen::MatrixXd p = b.cwiseMax(0.0);
    if (rank_one) {
      // Gamma = l l^T with l = L.col(0): B = l w1, so w1 must be the
      // normalized projection of the nonnegative target onto l.
      Eigen::RowVectorXd r = l.col(0).transpose() * p;
      const double nr = r.norm();
      if (nr == 0.0) break;
      w.row(0) = r / nr;
      Eigen::RowVectorXd second = w.row(1) - w.row(1).dot(w.row(0)) * w.row(0);
      if (second.norm() > 1e-12) w.row(1) = second / second.norm();
    } else {
      w = polar_rows(l.transpose() * p);
    }
    b = l * w;
  }
  return {b, opt.max_iter, false};
}

}  // namespace detail

/// One nonnegative factor of Gamma with q* columns.
inline CPFactor cp_factorize(const Eigen::Matrix2d& gamma, int qstar, std::uint64_t seed,
                             const CPOptions& opt = {}) {
  if (qstar < 2) throw ArgumentError("cp_factorize: q* must be at least 2");
  if ((gamma.array() < 0.0).any())
    throw ArgumentError("cp_factorize: Gamma must have nonnegative entries");
  const Eigen::Matrix2d l = cholesky_seed(gamma);
  const double root_scale = std::sqrt(gamma.diagonal().maxCoeff());
  const double neg_tol = opt.tol * root_scale;
  const double gnorm = gamma.norm();

  int total_iters = 0;
  for (int r = 0; r <= opt.restart_budget; ++r) {
    const std::uint64_t attempt_seed =
        r == 0 ? seed : seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(r));
    auto at = detail::cp_attempt(l, qstar, attempt_seed, opt, neg_tol);
    total_iters += at.iterations;
    if (!at.ok) continue;
    Eigen::MatrixXd b = at.b.cwiseMax(0.0);
    const double err = (b * b.transpose() - gamma).norm();
    if (err > kReconstructionTol * gnorm) continue;
    return CPFactor{std::move(b), seed, at.iterations, r};
  }
  throw NumericError("cp_factorize: no nonnegative factor after " +
                     std::to_string(opt.restart_budget + 1) + " attempts (" +
                     std::to_string(total_iters) + " iterations in total)");
}

/// n_decomp factors with seeds base_seed + k; the average of their Gram
/// matrices is Gamma.
inline std::vector<CPFactor> factor_ensemble(const Eigen::Matrix2d& gamma, int qstar, int n_decomp,
                                             std::uint64_t base_seed, const CPOptions& opt = {}) {
  if (n_decomp < 1) throw ArgumentError("factor_ensemble: n_decomp must be at least 1");
  std::vector<CPFactor> out;
  out.reserve(static_cast<std::size_t>(n_decomp));
  for (int k = 0; k < n_decomp; ++k) {
    try {
      out.push_back(cp_factorize(gamma, qstar, base_seed + static_cast<std::uint64_t>(k), opt));
    } catch (const NumericError& e) {
      throw NumericError("factor_ensemble: factor " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

inline Eigen::Matrix2d ensemble_gram(const std::vector<CPFactor>& factors) {
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  for (const auto& f : factors) acc += f.b * f.b.transpose();
  return acc / static_cast<double>(factors.size());
}

}  // namespace tlpred

#endif  // TLPRED_CPFACTOR_HPP
