#include "dl4/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>

#include <fftw3.h>

#include "dl4/errors.hpp"
#include "dl4/kernels.hpp"

namespace dl4 {
namespace {

std::span<const float> require_mono(const AudioBuffer& b, const char* what) {
  if (!b.is_mono()) throw DomainError(std::string(what) + " must be a mono buffer");
  return b.mono_view();
}

double median(std::vector<double> v) {
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Vertex offset of a parabola through (-1, a), (0, b), (1, c).
double parabolic_offset(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (denom == 0.0) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> magnitude_spectrum(std::span<const float> x, std::size_t fft_size) {
  auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * fft_size));
  auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (fft_size / 2 + 1)));
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(fft_size), in, out, FFTW_ESTIMATE);
  }
  std::fill(in, in + fft_size, 0.0);
  std::copy(x.begin(), x.end(), in);
  fftw_execute(plan);

  std::vector<double> mag(fft_size / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(out[k][0], out[k][1]);

  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return mag;
}

// Mid-band level of the repeat centred on `center`: mean DFT magnitude at a
// few frequencies over a Hann window. The loop filters are close to flat
// here, and the window holds the whole repeat however far the fractional
// reads have smeared it. Low frequencies are avoided because the high-pass
// tail removes each repeat's DC area.
constexpr double kEchoBandHz[] = {500.0, 750.0, 1000.0, 1250.0, 1500.0};
constexpr double kEchoWindowMaxMs = 5.0;
constexpr double kEchoWindowMinMs = 1.0;

std::optional<double> echo_magnitude(std::span<const float> x, double center, std::ptrdiff_t half,
                                     double sample_rate) {
  const auto c = static_cast<std::ptrdiff_t>(std::llround(center));
  const auto n = static_cast<std::ptrdiff_t>(x.size());
  if (c - half < 0 || c + half >= n) return std::nullopt;
  double total = 0.0;
  for (const double hz : kEchoBandHz) {
    const double w = 2.0 * std::numbers::pi * hz / sample_rate;
    std::complex<double> acc = 0.0;
    for (auto i = -half; i <= half; ++i) {
      const double hann = 0.5 + 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) /
                                               static_cast<double>(half + 1));
      acc += hann * static_cast<double>(x[static_cast<std::size_t>(c + i)]) *
             std::polar(1.0, -w * static_cast<double>(i));
    }
    total += std::abs(acc);
  }
  return total / std::size(kEchoBandHz);
}

struct OlsResult {
  double slope;
  double intercept;
};

OlsResult ols(std::span<const Point> pts) {
  const double n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
  }
  if (sxx == 0.0) throw DomainError("cannot fit a line: all x values are equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace

std::optional<EchoEstimate> estimate_delay_ms(const AudioBuffer& signal) {
  const auto x = require_mono(signal, "signal");
  const double sr = signal.sample_rate;
  const auto lag_min = static_cast<std::size_t>(std::ceil(kEchoSearchMinMs * sr / 1000.0));
  const auto lag_max = std::min(static_cast<std::size_t>(std::floor(kEchoSearchMaxMs * sr / 1000.0)),
                                x.size() / 2);
  if (lag_max < lag_min + 2) {
    throw AnalysisError("signal too short for echo search (" + std::to_string(x.size()) + " samples)");
  }

  const double energy = kernels::sum_squares(x);
  if (energy == 0.0) return std::nullopt;

  // One extra lag on each side for the parabolic fit.
  const auto r = kernels::autocorrelation(x, lag_min - 1, lag_max + 1);
  std::size_t best = 1;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    if (r[i] > r[best]) best = i;
  }
  const double peak = r[best] / energy;
  if (peak < kEchoMinConfidence) return std::nullopt;

  const double offset = parabolic_offset(r[best - 1], r[best], r[best + 1]);
  const double lag = static_cast<double>(lag_min - 1 + best) + offset;
  return EchoEstimate{lag * 1000.0 / sr, std::clamp(peak, 0.0, 1.0)};
}

std::vector<SpectralPeak> spectral_peaks(const AudioBuffer& signal) {
  const auto x = require_mono(signal, "signal");
  const std::size_t fft_size = std::max(kMinResonanceFft, std::bit_ceil(x.size()));
  const auto mag = magnitude_spectrum(x, fft_size);

  const double floor_mag = median(std::vector<double>(mag.begin() + 1, mag.end()));
  const double threshold = floor_mag * std::pow(10.0, kPeakThresholdDb / 20.0);
  const double bin_hz = signal.sample_rate / static_cast<double>(fft_size);

  std::vector<SpectralPeak> peaks;
  for (std::size_t k = 1; k + 1 < mag.size(); ++k) {
    if (mag[k] <= threshold || mag[k] <= mag[k - 1] || mag[k] < mag[k + 1]) continue;
    const double p = parabolic_offset(std::log(mag[k - 1] + 1e-300), std::log(mag[k]),
                                      std::log(mag[k + 1] + 1e-300));
    peaks.push_back({(static_cast<double>(k) + p) * bin_hz, mag[k]});
  }
  return peaks;
}

double estimate_comb_resonance(const AudioBuffer& signal) {
  const auto peaks = spectral_peaks(signal);
  if (peaks.size() < 3) {
    throw AnalysisError("found " + std::to_string(peaks.size()) +
                        " spectral peaks; need at least 3 harmonics");
  }
  std::vector<double> spacing;
  spacing.reserve(peaks.size() - 1);
  for (std::size_t i = 1; i < peaks.size(); ++i) spacing.push_back(peaks[i].hz - peaks[i - 1].hz);
  return median(std::move(spacing));
}

double estimate_feedback_gain(const AudioBuffer& signal, double delay_ms) {
  const auto x = require_mono(signal, "signal");
  if (!(delay_ms > 0.0)) throw DomainError("delay_ms must be positive");
  const double sr = signal.sample_rate;
  const double d = delay_ms * sr / 1000.0;
  const auto half = static_cast<std::ptrdiff_t>(std::min(kEchoWindowMaxMs * sr / 1000.0, d / 4.0));
  if (static_cast<double>(half) < kEchoWindowMinMs * sr / 1000.0) {
    throw AnalysisError("delay too short to separate successive echoes");
  }

  constexpr int kMaxEchoes = 24;
  // Well above the windowed level of 15-bit converter noise.
  constexpr double kNoiseFloor = 16.0 / 16384.0;

  std::vector<double> mags;
  for (int n = 1; n <= kMaxEchoes; ++n) {
    const auto m = echo_magnitude(x, n * d, half, sr);
    if (!m || *m < kNoiseFloor || (!mags.empty() && *m < 1e-3 * mags.front())) break;
    mags.push_back(*m);
  }
  if (mags.size() < 2) {
    throw AnalysisError("found " + std::to_string(mags.size()) +
                        " echo(es) above the noise floor; need at least 2");
  }
  std::vector<double> ratios;
  for (std::size_t i = 1; i < mags.size(); ++i) ratios.push_back(mags[i] / mags[i - 1]);
  return median(std::move(ratios));
}

double measure_snr(const AudioBuffer& test, const AudioBuffer& reference) {
  const auto t = require_mono(test, "test signal");
  const auto r = require_mono(reference, "reference signal");
  if (t.size() != r.size()) throw DomainError("test and reference lengths differ");
  const double signal = kernels::sum_squares(r);
  if (signal == 0.0) throw DomainError("reference signal has zero energy");
  const double noise = kernels::diff_stats(t, r, 0.0).sum_sq;
  if (noise == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(signal / noise));
}

LinearFit fit_linear(std::span<const Point> points, bool exclude_outliers) {
  const std::size_t need = exclude_outliers ? 3 : 2;
  if (points.size() < need) {
    throw DomainError("need at least " + std::to_string(need) + " points, got " +
                      std::to_string(points.size()));
  }
  const auto first = ols(points);
  if (!exclude_outliers) return {first.slope, first.intercept, {}};

  std::vector<double> residuals(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    residuals[i] = std::abs(points[i].y - (first.slope * points[i].x + first.intercept));
  }
  double y_scale = 1.0;
  for (const auto& p : points) y_scale = std::max(y_scale, std::abs(p.y));
  // Rounding noise on an exact fit must not read as an outlier.
  const double cutoff = std::max(3.0 * median(residuals), 1e-12 * y_scale);

  LinearFit fit{first.slope, first.intercept, {}};
  std::vector<Point> kept;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (residuals[i] > cutoff) {
      fit.outliers.push_back(i);
    } else {
      kept.push_back(points[i]);
    }
  }
  if (fit.outliers.empty()) return fit;
  if (kept.size() < 2) throw DomainError("outlier exclusion left fewer than 2 points");
  const auto refit = ols(kept);
  fit.slope = refit.slope;
  fit.intercept = refit.intercept;
  return fit;
}

}  // namespace dl4
