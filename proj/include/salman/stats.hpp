#pragma once

#include <span>
#include <vector>

namespace salman {

double mean(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
/// Fractional ranks (1-based, ties share their average rank).
std::vector<double> fractional_ranks(std::span<const double> x);
double spearman(std::span<const double> x, std::span<const double> y);
double mean_squared_error(std::span<const double> reference, std::span<const double> other);
/// mean |other - reference| / |reference|, skipping zero references.
double mean_relative_error(std::span<const double> reference, std::span<const double> other);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace salman
