#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "opeval/rng.hpp"
#include "opeval/stats.hpp"

using namespace opeval;

TEST_CASE("average_ranks handles ties by sharing the mean rank") {
  const std::vector<double> xs = {10.0, 20.0, 20.0, 5.0};
  CHECK(average_ranks(xs) == std::vector<double>{2.0, 3.5, 3.5, 1.0});
  const std::vector<double> all_tied = {1.0, 1.0, 1.0};
  CHECK(average_ranks(all_tied) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("spearman on pinned inputs") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  CHECK(spearman(a, a) == doctest::Approx(1.0));

  const std::vector<double> rev = {3.0, 2.0, 1.0};
  CHECK(spearman(a, rev) == doctest::Approx(-1.0));

  const std::vector<double> mixed = {3.0, 1.0, 2.0};
  CHECK(spearman(a, mixed) == doctest::Approx(-0.5).epsilon(1e-12));

  const std::vector<double> tied_x = {1.0, 1.0, 2.0};
  const std::vector<double> tied_y = {5.0, 5.0, 9.0};
  CHECK(spearman(tied_x, tied_y) == doctest::Approx(1.0));
}

TEST_CASE("spearman error cases") {
  const std::vector<double> a = {1.0, 2.0, 3.0};
  const std::vector<double> short_y = {1.0, 2.0};
  CHECK_THROWS_AS(spearman(a, short_y), std::invalid_argument);
  const std::vector<double> single = {1.0};
  CHECK_THROWS_AS(spearman(single, single), std::invalid_argument);
  const std::vector<double> constant = {4.0, 4.0, 4.0};
  CHECK_THROWS_AS(spearman(a, constant), std::invalid_argument);
  CHECK_THROWS_AS(spearman(constant, a), std::invalid_argument);
}

TEST_CASE("spearman is invariant under strictly increasing transforms") {
  RngStream rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs, ys;
    for (int i = 0; i < 30; ++i) {
      xs.push_back(rng.uniform());
      ys.push_back(rng.uniform());
    }
    const double base = spearman(xs, ys);
    std::vector<double> warped = xs;
    for (auto& v : warped) v = std::exp(4.0 * v);
    CHECK(spearman(warped, ys) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("r_squared on pinned inputs") {
  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> affine;
  for (double x : xs) affine.push_back(-2.5 * x + 7.0);
  CHECK(r_squared(xs, affine) == doctest::Approx(1.0).epsilon(1e-12));

  // Symmetric x against an even function of centered x: zero covariance.
  const std::vector<double> sym_x = {-1.0, 0.0, 1.0};
  const std::vector<double> even_y = {1.0, 0.0, 1.0};
  CHECK(r_squared(sym_x, even_y) == doctest::Approx(0.0).epsilon(1e-12));

  const std::vector<double> const_y = {3.0, 3.0, 3.0, 3.0};
  CHECK(r_squared(xs, const_y) == 0.0);

  const std::vector<double> const_x = {2.0, 2.0, 2.0, 2.0};
  CHECK_THROWS_AS(r_squared(const_x, affine), std::invalid_argument);
}

TEST_CASE("r_squared equals squared Pearson correlation") {
  RngStream rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs, ys;
    for (int i = 0; i < 40; ++i) {
      const double x = rng.uniform();
      xs.push_back(x);
      ys.push_back(0.7 * x + 0.3 * rng.uniform());
    }
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
    }
    const double mx = sx / xs.size(), my = sy / ys.size();
    double cxy = 0, cxx = 0, cyy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      cxy += (xs[i] - mx) * (ys[i] - my);
      cxx += (xs[i] - mx) * (xs[i] - mx);
      cyy += (ys[i] - my) * (ys[i] - my);
    }
    const double pearson = cxy / std::sqrt(cxx * cyy);
    CHECK(r_squared(xs, ys) == doctest::Approx(pearson * pearson).epsilon(1e-9));
  }
}

TEST_CASE("monotone but nonlinear data separates the two statistics") {
  std::vector<double> xs, ys;
  for (int i = 1; i <= 20; ++i) {
    xs.push_back(i);
    ys.push_back(std::pow(i, 5.0));
  }
  CHECK(spearman(xs, ys) == doctest::Approx(1.0));
  CHECK(r_squared(xs, ys) < 0.9);
}

TEST_CASE("r_squared is invariant under affine maps of either variable") {
  RngStream rng(23);
  std::vector<double> xs, ys;
  for (int i = 0; i < 25; ++i) {
    xs.push_back(rng.uniform());
    ys.push_back(xs.back() + 0.5 * rng.uniform());
  }
  const double base = r_squared(xs, ys);
  std::vector<double> ax = xs, ay = ys;
  for (auto& v : ax) v = 3.0 * v - 11.0;
  for (auto& v : ay) v = -0.25 * v + 2.0;
  CHECK(r_squared(ax, ys) == doctest::Approx(base).epsilon(1e-9));
  CHECK(r_squared(xs, ay) == doctest::Approx(base).epsilon(1e-9));
}
