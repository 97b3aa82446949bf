#include "fhm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fhm::stats {

double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean of empty series");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double weighted_mean(std::span<const double> v, std::span<const double> w) {
    if (v.size() != w.size() || v.empty()) throw std::invalid_argument("weighted_mean size mismatch");
    double sw = 0.0, swx = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        sw += w[i];
        swx += w[i] * v[i];
    }
    if (sw <= 0.0) throw std::invalid_argument("weighted_mean zero total weight");
    return swx / sw;
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile of empty series");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile out of [0,1]");
    std::sort(v.begin(), v.end());
    double h = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    double frac = h - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double stddev(std::span<const double> v) {
    double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace fhm::stats
