#include "opeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace opeval {

std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && xs[order[j]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

namespace {

struct Moments {
  double var_x = 0.0, var_y = 0.0, cov = 0.0;
};

Moments central_moments(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  Moments m;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    m.var_x += dx * dx;
    m.var_y += dy * dy;
    m.cov += dx * dy;
  }
  return m;
}

void require_pairs(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw std::invalid_argument("length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("need at least 2 points");
}

}  // namespace

double spearman(std::span<const double> xs, std::span<const double> ys) {
  require_pairs(xs, ys);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const Moments m = central_moments(rx, ry);
  if (m.var_x == 0.0 || m.var_y == 0.0)
    throw std::invalid_argument("zero rank variance");
  return m.cov / std::sqrt(m.var_x * m.var_y);
}

double r_squared(std::span<const double> xs, std::span<const double> ys) {
  require_pairs(xs, ys);
  const Moments m = central_moments(xs, ys);
  if (m.var_x == 0.0) throw std::invalid_argument("constant predictor");
  if (m.var_y == 0.0) return 0.0;
  const double r = m.cov / std::sqrt(m.var_x * m.var_y);
  return r * r;
}

}  // namespace opeval
