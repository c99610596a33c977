#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tlpred/translin.hpp"

using namespace tlpred;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Positive vector with preimages uniform on [lo, hi].
NonNegVector random_point(std::mt19937_64& gen, Eigen::Index p, double lo = -20.0, double hi = 20.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd y(p);
  for (Eigen::Index i = 0; i < p; ++i) y[i] = u(gen);
  return NonNegVector(softplus(y));
}

double max_abs_diff(const NonNegVector& a, const NonNegVector& b) {
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("softplus values", "[translin]") {
  CHECK_THAT(softplus(0.0), WithinRel(std::log(2.0), 1e-15));
  CHECK_THAT(softplus(100.0), WithinRel(100.0, 1e-12));
  // mpmath oracle
  CHECK_THAT(softplus(-50.0), WithinRel(1.9287498479639178e-22, 1e-12));
  CHECK_THAT(softplus(-50.0), WithinRel(std::exp(-50.0), 1e-12));
  CHECK(softplus(-745.0) >= 0.0);
  CHECK(softplus(1e300) == 1e300);
}

TEST_CASE("softplus rejects non-finite input", "[translin]") {
  CHECK_THROWS_AS(softplus(std::nan("")), ArgumentError);
  CHECK_THROWS_AS(softplus(INFINITY), ArgumentError);
}

TEST_CASE("softplus_inv values", "[translin]") {
  CHECK_THAT(softplus_inv(std::log(2.0)), WithinAbs(0.0, 1e-15));
  CHECK_THAT(softplus_inv(100.0), WithinRel(100.0, 1e-12));
  CHECK_THAT(softplus_inv(1e-8), WithinRel(-18.420680738952365, 1e-13));
}

TEST_CASE("softplus_inv domain", "[translin]") {
  CHECK_THROWS_AS(softplus_inv(0.0), DomainError);
  CHECK_THROWS_AS(softplus_inv(-1.0), DomainError);
  CHECK_THROWS_AS(softplus_inv(INFINITY), DomainError);
}

TEST_CASE("softplus is strictly increasing across the branch points", "[translin]") {
  double prev = softplus(-40.0);
  for (double y = -40.0 + 0.01; y <= 40.0; y += 0.01) {
    const double v = softplus(y);
    REQUIRE(v > prev);
    prev = v;
  }
  // continuity at the crossovers
  CHECK_THAT(softplus(std::nextafter(30.0, 31.0)), WithinRel(softplus(30.0), 1e-14));
  CHECK_THAT(softplus(std::nextafter(-30.0, -31.0)), WithinRel(softplus(-30.0), 1e-14));
  CHECK_THAT(softplus_inv(std::nextafter(30.0, 31.0)), WithinRel(softplus_inv(30.0), 1e-14));
}

TEST_CASE("round trips", "[translin][property]") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> lx(std::log(1e-8), std::log(1e8));
  std::uniform_real_distribution<double> ly(-30.0, 1e8);
  std::uniform_real_distribution<double> ly_small(-30.0, 60.0);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::exp(lx(gen));
    REQUIRE_THAT(softplus(softplus_inv(x)), WithinRel(x, 1e-10));
    const double y = i % 2 ? ly(gen) : ly_small(gen);
    REQUIRE_THAT(softplus_inv(softplus(y)), WithinRel(y, 1e-10));
  }
}

TEST_CASE("tadd", "[translin]") {
  const double l2 = std::log(2.0);
  const auto r = tadd({l2, l2}, {l2, l2});
  CHECK_THAT(r[0], WithinRel(l2, 1e-15));
  CHECK_THAT(r[1], WithinRel(l2, 1e-15));
  CHECK_THAT(tadd({10.0}, {10.0})[0], WithinRel(19.9999092001406, 1e-13));
  CHECK_THAT(tadd({20.0}, {30.0})[0], WithinRel(49.999999997938753, 1e-13));

  CHECK_THROWS_AS(tadd({1.0, 2.0}, {1.0}), ArgumentError);
  CHECK_THROWS_AS(tadd({0.0}, {1.0}), DomainError);
  CHECK_THROWS_AS(NonNegVector({-1.0}), ArgumentError);
}

TEST_CASE("tadd is commutative", "[translin][property]") {
  std::mt19937_64 gen(12);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_point(gen, 5), y = random_point(gen, 5);
    REQUIRE(max_abs_diff(tadd(x, y), tadd(y, x)) < 1e-12);
  }
}

TEST_CASE("tadd is the ordinary sum at large values", "[translin][property]") {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(40.0, 1e6);
  for (int i = 0; i < 500; ++i) {
    const double a = u(gen), b = u(gen);
    REQUIRE_THAT(tadd({a}, {b})[0], WithinRel(a + b, 1e-8));
  }
}

TEST_CASE("tscale", "[translin]") {
  const NonNegVector x{0.3, 2.0, 50.0};
  CHECK(max_abs_diff(tscale(1.0, x), x) < 1e-10 * 50.0);
  const auto z = tscale(0.0, x);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK_THAT(z[i], WithinRel(std::log(2.0), 1e-15));
  CHECK_THAT(tscale(2.0, {5.0})[0], WithinRel(9.9865245180161162, 1e-13));
  CHECK_THROWS_AS(tscale(1.0, {0.0}), DomainError);
  CHECK_THROWS_AS(tscale(NAN, {1.0}), ArgumentError);
  // negative scalars are evaluated literally
  CHECK_THAT(tscale(-1.0, {std::log(2.0)})[0], WithinRel(std::log(2.0), 1e-15));
  CHECK(tscale(-1.0, {40.0})[0] < 1e-16);
}

TEST_CASE("vector-space axioms", "[translin][property]") {
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_point(gen, 3), y = random_point(gen, 3), w = random_point(gen, 3);
    const double a = coef(gen), b = coef(gen);
    REQUIRE(max_abs_diff(tadd(tadd(x, y), w), tadd(x, tadd(y, w))) < 1e-8);
    REQUIRE(max_abs_diff(tscale(a, tadd(x, y)), tadd(tscale(a, x), tscale(a, y))) < 1e-8);
    REQUIRE(max_abs_diff(tscale(a + b, x), tadd(tscale(a, x), tscale(b, x))) < 1e-8);
    REQUIRE(max_abs_diff(tscale(a, tscale(b, x)), tscale(a * b, x)) < 1e-8);
  }
}

TEST_CASE("tmat_apply", "[translin]") {
  const NonNegVector z{0.5, 3.0, 70.0};
  const auto id = tmat_apply(GeneratorMatrix(Eigen::Matrix3d::Identity()), z);
  CHECK(max_abs_diff(id, z) < 1e-10 * 70.0);

  Eigen::MatrixXd row(1, 2);
  row << 1.0, 1.0;
  const double l2 = std::log(2.0);
  CHECK_THAT(tmat_apply(GeneratorMatrix(row), {l2, l2})[0], WithinAbs(l2, 1e-15));
  CHECK_THAT(tmat_apply(GeneratorMatrix(row), {20.0, 30.0})[0], WithinRel(50.0, 1e-6));
  CHECK_THAT(tmat_apply(GeneratorMatrix(row), {20.0, 30.0})[0], WithinRel(49.999999997938753, 1e-13));

  CHECK_THROWS_AS(tmat_apply(GeneratorMatrix(row), {1.0}), ArgumentError);
  CHECK_THROWS_AS(tmat_apply(GeneratorMatrix(row), {1.0, 0.0}), DomainError);
}

TEST_CASE("zero_clip", "[translin]") {
  CoeffVector a(3);
  a << -1.0, 0.0, 2.0;
  const CoeffVector c = zero_clip(a);
  CHECK(c == (CoeffVector(3) << 0.0, 0.0, 2.0).finished());
  CoeffVector pos(2);
  pos << 0.5, 4.0;
  CHECK(zero_clip(pos) == pos);

  Eigen::MatrixXd m(2, 2);
  m << 1.0, -2.0, -0.5, 3.0;
  const GeneratorMatrix g(m);
  CHECK_FALSE(g.nonneg());
  CHECK(zero_clip(g).nonneg());
  CHECK(zero_clip(g).entries()(0, 1) == 0.0);
  CHECK_THROWS_AS(GeneratorMatrix(m, true), ArgumentError);

  CoeffVector bad(1);
  bad << NAN;
  CHECK_THROWS_AS(zero_clip(bad), ArgumentError);
}

TEST_CASE("zero_clip is idempotent", "[translin][property]") {
  std::mt19937_64 gen(15);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 100; ++i) {
    CoeffVector a(6);
    for (auto& v : a) v = nd(gen);
    const CoeffVector once = zero_clip(a);
    REQUIRE(zero_clip(once) == once);
    REQUIRE((once.array() >= 0.0).all());
  }
}
