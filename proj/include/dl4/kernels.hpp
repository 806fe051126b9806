#pragma once

// Data-parallel reductions used by analysis and regression comparison.
// Each kernel has an OpenMP version (the one the library calls) and a plain
// serial reference kept for tests and benchmarks. The two agree to rounding;
// the parallel versions reassociate sums.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dl4::kernels {

// r[k - lag_min] = sum_n x[n] * x[n + k] for k in [lag_min, lag_max].
// Lags at or beyond x.size() yield 0.
std::vector<double> autocorrelation(std::span<const float> x, std::size_t lag_min,
                                    std::size_t lag_max);
std::vector<double> autocorrelation_serial(std::span<const float> x, std::size_t lag_min,
                                           std::size_t lag_max);

struct DiffStats {
  double max_abs = 0.0;
  double sum_sq = 0.0;
  // First index where |a - b| > threshold.
  std::optional<std::size_t> first_exceeding;
};

// Over the common prefix of a and b.
DiffStats diff_stats(std::span<const float> a, std::span<const float> b, double threshold);
DiffStats diff_stats_serial(std::span<const float> a, std::span<const float> b, double threshold);

double sum_squares(std::span<const float> x);
double sum_squares_serial(std::span<const float> x);

// Threads OpenMP will use for the parallel kernels.
int max_threads();

}  // namespace dl4::kernels
