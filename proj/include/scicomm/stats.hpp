#pragma once

#include <optional>
#include <span>
#include <vector>

namespace scicomm {

double mean(std::span<const double> values);

// Population standard deviation (divides by n, not n-1).
double population_sd(std::span<const double> values);

// Sample Pearson correlation. Throws ConstantVectorError when either vector
// is constant or fewer than two points are given.
double pearson(std::span<const double> x, std::span<const double> y);

// nullopt instead of throwing when the correlation is undefined.
std::optional<double> try_pearson(std::span<const double> x,
                                  std::span<const double> y);

// Fractional (average) ranks, 1-based; ties share the mean of their ranks.
std::vector<double> fractional_ranks(std::span<const double> values);

// Tie-corrected Spearman rho: Pearson on fractional ranks.
double spearman(std::span<const double> x, std::span<const double> y);

std::optional<double> try_spearman(std::span<const double> x,
                                   std::span<const double> y);

// Empirical quantile by linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

}  // namespace scicomm
