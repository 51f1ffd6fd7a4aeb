#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bsee {

inline double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double sample_stddev(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

inline double standard_error(const std::vector<double>& xs) {
    return sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

//Least-squares slope of log(y) against log(x).  Requires positive data.
//Returns +inf if every y is below `floor` (vanishing error, slope test passes vacuously).
inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                               double floor = 1e-14) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_loglog_slope: need >= 2 matching points");
    bool all_floor = true;
    for (double v : y)
        if (v > floor) { all_floor = false; break; }
    if (all_floor) return std::numeric_limits<double>::infinity();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 || y[i] <= 0.0)
            throw std::invalid_argument("fit_loglog_slope: nonpositive data");
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
    return (n * sxy - sx * sy) / denom;
}

} // namespace bsee
