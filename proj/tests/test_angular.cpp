#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tlpred/angular.hpp"

using namespace tlpred;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::shared_ptr<const AngularDensity> density_of(std::vector<AngularAtom> atoms, std::optional<double> bw = {}) {
  AngularMeasureEstimate h;
  for (const auto& a : atoms) h.total_mass += a.weight;
  h.atoms = std::move(atoms);
  KdeOptions opt;
  opt.bandwidth = bw;
  return std::make_shared<const AngularDensity>(kde_angular(h, opt));
}

// Midpoint rule in theta for the integral of f over x in (0, inf), x = x_hat tan(theta).
double oracle_integral(const ConditionalDensity& f, int n = 400000) {
  const double x_hat = f.x_hat();
  double acc = 0.0;
  const double step = kHalfPi / n;
  for (int i = 0; i < n; ++i) {
    const double th = (i + 0.5) * step;
    const double c = std::cos(th);
    acc += f(x_hat * std::tan(th)) * x_hat / (c * c);
  }
  return acc * step;
}

// Midpoint rule in theta for P(X <= x | x_hat).
double oracle_cdf(const ConditionalDensity& f, double x, int n = 200000) {
  const double x_hat = f.x_hat();
  const double top = std::atan2(x, x_hat);
  double acc = 0.0;
  const double step = top / n;
  for (int i = 0; i < n; ++i) {
    const double th = (i + 0.5) * step;
    const double c = std::cos(th);
    acc += f(x_hat * std::tan(th)) * x_hat / (c * c);
  }
  return acc * step;
}

}  // namespace

TEST_CASE("angular measure of a generator", "[angular]") {
  const auto id = measure_of_generator(GeneratorMatrix(Eigen::Matrix2d::Identity()));
  REQUIRE(id.atoms.size() == 2);
  CHECK(id.atoms[0].weight == 1.0);
  CHECK(id.atoms[0].angle == 0.0);
  CHECK(id.atoms[1].weight == 1.0);
  CHECK_THAT(id.atoms[1].angle, WithinRel(kHalfPi, 1e-15));
  CHECK(id.total_mass == 2.0);

  Eigen::MatrixXd col(2, 1);
  col << 3.0, 4.0;
  const auto one = measure_of_generator(GeneratorMatrix(col));
  REQUIRE(one.atoms.size() == 1);
  CHECK_THAT(one.atoms[0].weight, WithinRel(25.0, 1e-15));
  CHECK_THAT(one.atoms[0].angle, WithinAbs(0.9273, 1e-4));
  CHECK_THROWS_AS(measure_of_generator(GeneratorMatrix(Eigen::Matrix3d::Identity())), ArgumentError);
}

TEST_CASE("masses from a factor ensemble", "[angular]") {
  Eigen::Matrix2d g;
  g << 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1.0;
  const auto ens = factor_ensemble(g, 9, 51, 5);
  const auto h = masses_from_ensemble(ens, 51);
  CHECK_THAT(h.total_mass, WithinRel(g.trace(), 1e-8));
  for (const auto& a : h.atoms) {
    REQUIRE(a.weight > 0.0);
    REQUIRE(a.angle >= 0.0);
    REQUIRE(a.angle <= kHalfPi);
  }
  CHECK_THROWS_AS(masses_from_ensemble({}, 1), ArgumentError);
}

TEST_CASE("joint region", "[angular]") {
  const auto id = measure_of_generator(GeneratorMatrix(Eigen::Matrix2d::Identity()));
  const auto r = joint_region(id, 0.95);
  CHECK(r.theta_lo == 0.0);
  CHECK_THAT(r.theta_hi, WithinRel(kHalfPi, 1e-15));
  CHECK(r.contains(1.0, 0.0));
  CHECK(r.contains(0.0, 1.0));

  AngularMeasureEstimate h;
  for (int k = 0; k < 100; ++k) h.atoms.push_back({1.0, 0.01 * (k + 1)});
  h.total_mass = 100.0;
  const auto q = joint_region(h, 0.9);
  CHECK_THAT(q.theta_lo, WithinAbs(0.05, 1e-12));
  CHECK_THAT(q.theta_hi, WithinAbs(0.95, 1e-12));
  CHECK(q.contains(1.0, std::tan(0.5)));
  CHECK_FALSE(q.contains(1.0, std::tan(0.99)));
  CHECK_FALSE(q.contains(1.0, std::tan(0.02)));
  CHECK_THROWS_AS(joint_region(h, 1.0), ArgumentError);
}

TEST_CASE("kernel density conserves mass", "[angular]") {
  const auto single = density_of({{2.5, std::numbers::pi / 4.0}}, 0.3);
  CHECK_THAT(integrate_angular([&](double t) { return (*single)(t); }), WithinAbs(2.5, 1e-6));

  const auto pair = density_of({{0.7, 0.3}, {1.3, 1.2}});
  CHECK_THAT(integrate_angular([&](double t) { return (*pair)(t); }), WithinAbs(2.0, 1e-6));

  const auto edge = density_of({{1.0, 0.0}, {0.5, 1e-3}}, 0.5);
  CHECK_THAT(integrate_angular([&](double t) { return (*edge)(t); }), WithinAbs(1.5, 1e-6));

  CHECK((*pair)(0.0) == 0.0);
  CHECK((*pair)(kHalfPi) == 0.0);
  for (const auto& [th, v] : pair->grid(200)) REQUIRE(v >= 0.0);
}

TEST_CASE("kernel density options", "[angular]") {
  CHECK_THROWS_AS(density_of({{1.0, 0.5}}), NumericError);
  CHECK_THROWS_AS(density_of({{1.0, 0.5}}, -1.0), ArgumentError);
  AngularMeasureEstimate empty;
  CHECK_THROWS_AS(kde_angular(empty), ArgumentError);
  // auto bandwidth 1.06 sd n_eff^(-1/5): two equal atoms have sd = half the gap and n_eff = 2
  const auto d = density_of({{1.0, 0.5}, {1.0, 1.0}});
  const double s0 = std::log(0.5 / (kHalfPi - 0.5)), s1 = std::log(1.0 / (kHalfPi - 1.0));
  CHECK_THAT(d->bandwidth(), WithinRel(1.06 * 0.5 * (s1 - s0) * std::pow(2.0, -0.2), 1e-12));
}

TEST_CASE("conditional density integrates to one", "[angular]") {
  const auto h = density_of({{0.7, 0.3}, {1.3, 1.2}, {0.4, 0.8}});
  for (double x_hat : {1.0, 7.0, 250.0}) {
    const auto f = conditional_density(h, x_hat);
    CHECK_THAT(oracle_integral(f), WithinAbs(1.0, 1e-6));
    CHECK(f.cdf(0.0) == 0.0);
    CHECK_THAT(f.cdf(1e12 * x_hat), WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("conditional CDF matches the integrated density", "[angular]") {
  const auto h = density_of({{0.7, 0.3}, {1.3, 1.2}, {0.4, 0.8}});
  const auto f = conditional_density(h, 3.0);
  for (double x : {0.05, 0.6, 3.0, 9.0, 40.0}) REQUIRE_THAT(f.cdf(x), WithinAbs(oracle_cdf(f, x), 1e-6));
  for (double p : {0.025, 0.5, 0.975}) REQUIRE_THAT(oracle_cdf(f, f.quantile(p)), WithinAbs(p, 1e-6));
}

TEST_CASE("conditional density is homogeneous", "[angular][property]") {
  const auto h = density_of({{0.7, 0.3}, {1.3, 1.2}, {0.4, 0.8}});
  const auto f1 = conditional_density(h, 1.0);
  const auto f5 = conditional_density(h, 5.0);
  for (double u : {0.05, 0.3, 1.0, 2.5, 10.0}) {
    REQUIRE_THAT(f5(5.0 * u) * 5.0, WithinRel(f1(u), 1e-12));
    REQUIRE_THAT(f5.cdf(5.0 * u), WithinAbs(f1.cdf(u), 1e-12));
  }
  for (double p : {0.025, 0.5, 0.975}) REQUIRE_THAT(f5.quantile(p), WithinRel(5.0 * f1.quantile(p), 1e-9));
}

TEST_CASE("conditional quantile inverts the CDF", "[angular][property]") {
  const auto h = density_of({{0.7, 0.3}, {1.3, 1.2}, {0.4, 0.8}});
  const auto f = conditional_density(h, 3.0);
  for (double p = 0.01; p < 1.0; p += 0.01) REQUIRE_THAT(f.cdf(f.quantile(p)), WithinAbs(p, 1e-9));
  CHECK(f.quantile(0.0) == 0.0);
  CHECK(std::isinf(f.quantile(1.0)));
  CHECK_THROWS_AS(f.quantile(1.5), ArgumentError);
}

TEST_CASE("conditional density on the diagonal", "[angular]") {
  // mass concentrated at pi/4 puts the conditional median at x_hat
  const auto h = density_of({{1.0, std::numbers::pi / 4.0}}, 0.05);
  const auto f = conditional_density(h, 40.0);
  CHECK_THAT(f.quantile(0.5), WithinRel(40.0, 0.02));
  const auto& g = f.grid();
  const auto& d = f.density();
  const auto it = std::max_element(d.begin(), d.end());
  CHECK_THAT(g[static_cast<std::size_t>(it - d.begin())], WithinRel(40.0, 0.1));
  CHECK(g.size() == static_cast<std::size_t>(kConditionalGridPoints));
}

TEST_CASE("conditional intervals", "[angular]") {
  const auto h = density_of({{0.7, 0.3}, {1.3, 1.2}, {0.4, 0.8}});
  const auto f = conditional_density(h, 2.0);
  const auto iv = conditional_interval(f, 0.95);
  CHECK(iv.lo < iv.hi);
  CHECK_THAT(f.cdf(iv.hi) - f.cdf(iv.lo), WithinAbs(0.95, 1e-9));
  CHECK_THAT(f.cdf(iv.lo), WithinAbs(0.025, 1e-9));
  const auto zero = conditional_interval(f, 0.0);
  CHECK_THAT(zero.lo, WithinRel(zero.hi, 1e-12));
  CHECK_THROWS_AS(conditional_interval(f, 1.0), ArgumentError);

  const auto unit = ray_interval(h, 0.95);
  CHECK_THAT(iv.lo, WithinRel(2.0 * unit.lo, 1e-9));
  CHECK_THAT(iv.hi, WithinRel(2.0 * unit.hi, 1e-9));
  CHECK_THROWS_AS(conditional_density(h, 0.0), ArgumentError);
}

TEST_CASE("coverage", "[angular]") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> u(0.1, 100.0);
  std::vector<PredictionPair> pairs;
  for (int i = 0; i < 2000; ++i) pairs.push_back({u(gen), u(gen)});
  const auto all = coverage_rate(
      pairs, [](double) { return Interval{0.0, std::numeric_limits<double>::infinity()}; }, 0.95);
  CHECK(all.coverage == 1.0);
  CHECK(all.n_retained == 100);
  const auto none = coverage_rate(pairs, [](double) { return Interval{-2.0, -1.0}; }, 0.5);
  CHECK(none.coverage == 0.0);
  CHECK(none.mean_width == 1.0);
  CHECK_THROWS_AS(coverage_rate(pairs, [](double) { return Interval{0.0, 1.0}; }, 0.99), ArgumentError);

  const auto h = density_of({{0.7, 0.3}, {1.3, 1.2}, {0.4, 0.8}});
  const auto unit = ray_interval(h, 0.95);
  const auto rep = assess_coverage(pairs, h, 0.9, 0.95);
  const auto manual = coverage_rate(
      pairs, [&](double x) { return conditional_interval(conditional_density(h, x), 0.95); }, 0.9);
  CHECK(rep.n_retained == manual.n_retained);
  CHECK_THAT(rep.coverage, WithinAbs(manual.coverage, 1e-12));
  CHECK_THAT(rep.mean_width, WithinRel(manual.mean_width, 1e-8));
  CHECK(unit.lo > 0.0);
}
