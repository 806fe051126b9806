#include "dl4/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <omp.h>

namespace dl4::kernels {
namespace {

constexpr std::size_t kNoIndex = std::numeric_limits<std::size_t>::max();

std::size_t lag_count(std::size_t lag_min, std::size_t lag_max) {
  return lag_max >= lag_min ? lag_max - lag_min + 1 : 0;
}

}  // namespace

std::vector<double> autocorrelation(std::span<const float> x, std::size_t lag_min,
                                    std::size_t lag_max) {
  const std::size_t count = lag_count(lag_min, lag_max);
  std::vector<double> r(count, 0.0);
  const float* data = x.data();
  const auto n = static_cast<std::int64_t>(x.size());

#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(count); ++i) {
    const auto lag = static_cast<std::int64_t>(lag_min) + i;
    if (lag >= n) continue;
    double acc = 0.0;
    const std::int64_t len = n - lag;
#pragma omp simd reduction(+ : acc)
    for (std::int64_t j = 0; j < len; ++j) {
      acc += static_cast<double>(data[j]) * static_cast<double>(data[j + lag]);
    }
    r[static_cast<std::size_t>(i)] = acc;
  }
  return r;
}

std::vector<double> autocorrelation_serial(std::span<const float> x, std::size_t lag_min,
                                           std::size_t lag_max) {
  const std::size_t count = lag_count(lag_min, lag_max);
  std::vector<double> r(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t lag = lag_min + i;
    if (lag >= x.size()) continue;
    double acc = 0.0;
    for (std::size_t j = 0; j + lag < x.size(); ++j) {
      acc += static_cast<double>(x[j]) * static_cast<double>(x[j + lag]);
    }
    r[i] = acc;
  }
  return r;
}

DiffStats diff_stats(std::span<const float> a, std::span<const float> b, double threshold) {
  const auto n = static_cast<std::int64_t>(std::min(a.size(), b.size()));
  const float* pa = a.data();
  const float* pb = b.data();
  double max_abs = 0.0;
  double sum_sq = 0.0;
  std::size_t first = kNoIndex;

#pragma omp parallel for reduction(max : max_abs) reduction(+ : sum_sq) reduction(min : first)
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    const double ad = std::abs(d);
    max_abs = std::max(max_abs, ad);
    sum_sq += d * d;
    if (ad > threshold) first = std::min(first, static_cast<std::size_t>(i));
  }

  DiffStats s{max_abs, sum_sq, std::nullopt};
  if (first != kNoIndex) s.first_exceeding = first;
  return s;
}

DiffStats diff_stats_serial(std::span<const float> a, std::span<const float> b, double threshold) {
  DiffStats s;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s.max_abs = std::max(s.max_abs, std::abs(d));
    s.sum_sq += d * d;
    if (!s.first_exceeding && std::abs(d) > threshold) s.first_exceeding = i;
  }
  return s;
}

double sum_squares(std::span<const float> x) {
  const float* p = x.data();
  const auto n = static_cast<std::int64_t>(x.size());
  double acc = 0.0;
#pragma omp parallel for simd reduction(+ : acc)
  for (std::int64_t i = 0; i < n; ++i) {
    acc += static_cast<double>(p[i]) * static_cast<double>(p[i]);
  }
  return acc;
}

double sum_squares_serial(std::span<const float> x) {
  double acc = 0.0;
  for (float v : x) acc += static_cast<double>(v) * static_cast<double>(v);
  return acc;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace dl4::kernels
