#include <catch_amalgamated.hpp>

#include <random>

#include "tlpred/cpfactor.hpp"

using namespace tlpred;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double reconstruction_error(const Eigen::MatrixXd& b, const Eigen::Matrix2d& gamma) {
  return (b * b.transpose() - gamma).norm() / gamma.norm();
}

Eigen::Matrix2d third_gamma() {
  Eigen::Matrix2d g;
  g << 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0;
  return g;
}

}  // namespace

TEST_CASE("cholesky_seed", "[cpfactor]") {
  CHECK(cholesky_seed(Eigen::Matrix2d::Identity()) == Eigen::Matrix2d::Identity());

  const auto l = cholesky_seed(third_gamma());
  CHECK_THAT(l(0, 0), WithinAbs(0.57735026918962576, 1e-15));
  CHECK(l(0, 1) == 0.0);
  CHECK_THAT(l(1, 0), WithinAbs(0.57735026918962576, 1e-15));
  CHECK_THAT(l(1, 1), WithinAbs(0.81649658092772603, 1e-15));

  Eigen::Matrix2d g;
  g << 4.0, 2.0, 2.0, 2.0;
  CHECK(cholesky_seed(g) == (Eigen::Matrix2d() << 2.0, 0.0, 1.0, 1.0).finished());

  g << 0.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(cholesky_seed(g), NumericError);
  g << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(cholesky_seed(g), NumericError);
  g << 1.0, 0.5, 0.4, 1.0;
  CHECK_THROWS_AS(cholesky_seed(g), ArgumentError);
}

TEST_CASE("cp_factorize examples", "[cpfactor]") {
  Eigen::Matrix2d ones = Eigen::Matrix2d::Constant(1.0);
  const auto r1 = cp_factorize(ones, 2, 1);
  CHECK(r1.b.rows() == 2);
  CHECK(r1.b.cols() == 2);
  CHECK(r1.b.minCoeff() >= 0.0);
  CHECK(reconstruction_error(r1.b, ones) <= kReconstructionTol);

  const auto id = cp_factorize(Eigen::Matrix2d::Identity(), 3, 2);
  CHECK(id.b.cols() == 3);
  CHECK(id.b.minCoeff() >= 0.0);
  CHECK(reconstruction_error(id.b, Eigen::Matrix2d::Identity()) <= kReconstructionTol);

  CHECK_THROWS_AS(cp_factorize(ones, 1, 1), ArgumentError);
  Eigen::Matrix2d neg;
  neg << 1.0, -0.2, -0.2, 1.0;
  CHECK_THROWS_AS(cp_factorize(neg, 4, 1), ArgumentError);
}

TEST_CASE("factor ensemble", "[cpfactor]") {
  const Eigen::Matrix2d g = third_gamma();
  const auto ens = factor_ensemble(g, 9, 51, 2024);
  REQUIRE(ens.size() == 51);
  for (const auto& f : ens) {
    REQUIRE(f.b.rows() == 2);
    REQUIRE(f.b.cols() == 9);
    REQUIRE(f.b.minCoeff() >= 0.0);
    REQUIRE(reconstruction_error(f.b, g) <= kReconstructionTol);
  }
  CHECK((ensemble_gram(ens) - g).norm() <= kReconstructionTol * g.norm());

  // distinct seeds give distinct factors
  for (std::size_t k = 1; k < ens.size(); ++k)
    CHECK((ens[k].b - ens[0].b).cwiseAbs().maxCoeff() > 1e-6);
  CHECK_THROWS_AS(factor_ensemble(g, 9, 0, 1), ArgumentError);
}

TEST_CASE("cp_factorize is deterministic", "[cpfactor]") {
  const Eigen::Matrix2d g = third_gamma();
  const auto a = cp_factorize(g, 9, 77);
  const auto b = cp_factorize(g, 9, 77);
  CHECK(a.b == b.b);
  CHECK(a.seed == 77);
  // ensembles with shifted base seeds share members
  const auto e1 = factor_ensemble(g, 9, 5, 100);
  const auto e2 = factor_ensemble(g, 9, 5, 102);
  CHECK(e1[2].b == e2[0].b);
  CHECK(e1[4].b == e2[2].b);
}

TEST_CASE("cp_factorize on random inner-product matrices", "[cpfactor][property]") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    Eigen::MatrixXd c(2, 6);
    for (auto& v : c.reshaped()) v = u(gen);
    const Eigen::Matrix2d g = c * c.transpose();
    const auto f = cp_factorize(g, 9, static_cast<std::uint64_t>(k));
    REQUIRE(f.b.minCoeff() >= 0.0);
    REQUIRE(reconstruction_error(f.b, g) <= kReconstructionTol);
  }
}

TEST_CASE("cp_factorize on prediction matrices", "[cpfactor][property]") {
  // [[v, v], [v, s]] with 0 < v <= s
  std::mt19937_64 gen(32);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int k = 0; k < 100; ++k) {
    const double s = 5.0 * u(gen);
    const double v = s * u(gen);
    Eigen::Matrix2d g;
    g << v, v, v, s;
    const auto f = cp_factorize(g, 9, static_cast<std::uint64_t>(1000 + k));
    REQUIRE(f.b.minCoeff() >= 0.0);
    REQUIRE_THAT((f.b * f.b.transpose())(0, 1), WithinRel(v, 1e-7));
    REQUIRE(reconstruction_error(f.b, g) <= kReconstructionTol);
  }
}
