#include "salman/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "salman/common.hpp"

namespace salman {
namespace {

void same_size(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("statistics: input lengths differ");
  if (x.size() < 2) throw Error("statistics: need at least two observations");
}

}  // namespace

double mean(std::span<const double> x) {
  if (x.empty()) throw Error("mean of empty sequence");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  same_size(x, y);
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 && syy == 0.0) return 1.0;  // both constant: identical orderings
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> fractional_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  same_size(x, y);
  const auto rx = fractional_ranks(x), ry = fractional_ranks(y);
  return pearson(rx, ry);
}

double mean_squared_error(std::span<const double> reference, std::span<const double> other) {
  same_size(reference, other);
  double s = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) s += (other[i] - reference[i]) * (other[i] - reference[i]);
  return s / static_cast<double>(reference.size());
}

double mean_relative_error(std::span<const double> reference, std::span<const double> other) {
  same_size(reference, other);
  double s = 0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i] == 0.0) continue;
    s += std::abs(other[i] - reference[i]) / std::abs(reference[i]);
    ++used;
  }
  return used ? s / static_cast<double>(used) : 0.0;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  same_size(x, y);
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw Error("loglog_slope: inputs must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw Error("loglog_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace salman
