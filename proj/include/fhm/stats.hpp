#pragma once

#include <span>
#include <vector>

namespace fhm::stats {

double mean(std::span<const double> v);
double weighted_mean(std::span<const double> v, std::span<const double> w);

// Quantile with linear interpolation between order statistics (inclusive):
// h = q * (n - 1), result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]).
double quantile(std::vector<double> v, double q);
double median(std::vector<double> v);

double stddev(std::span<const double> v);  // population convention denominator n

}  // namespace fhm::stats
