#pragma once

// Measurements used to calibrate and verify the emulation: echo spacing,
// comb resonance, loop gain, quantization SNR, and the straight-line fits
// that relate score markings to measured values.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dl4/wav.hpp"

namespace dl4 {

inline constexpr double kEchoSearchMinMs = 1.0;
inline constexpr double kEchoSearchMaxMs = 600.0;
inline constexpr double kEchoMinConfidence = 0.1;
inline constexpr double kSnrCapDb = 200.0;
inline constexpr std::size_t kMinResonanceFft = 1u << 16;
inline constexpr double kPeakThresholdDb = 6.0;

struct EchoEstimate {
  double delay_ms;
  double confidence;  // normalized autocorrelation at the peak, [0, 1]
};

// Strongest repeat between 1 and 600 ms (capped at half the signal length),
// from the normalized autocorrelation with parabolic refinement.
// nullopt when no lag reaches confidence 0.1.
std::optional<EchoEstimate> estimate_delay_ms(const AudioBuffer& signal);

struct SpectralPeak {
  double hz;
  double magnitude;
};

// Local maxima of the zero-padded magnitude spectrum that stand at least
// kPeakThresholdDb above the median magnitude, refined on a log scale.
std::vector<SpectralPeak> spectral_peaks(const AudioBuffer& signal);

// Median spacing of spectral peaks. Throws AnalysisError with < 3 peaks.
double estimate_comb_resonance(const AudioBuffer& signal);

// Median ratio of successive echo levels at n * delay_ms, n >= 1. Each level
// is the repeat's mid-band (500-1500 Hz) magnitude over a Hann window of up
// to +-5 ms, so the result is the loop gain where the loop filters are near
// flat. Needs delay_ms >= 4. Throws AnalysisError when fewer than two echoes
// clear the noise floor.
double estimate_feedback_gain(const AudioBuffer& signal, double delay_ms);

// 10 log10(sum ref^2 / sum (test - ref)^2), capped at 200 dB.
double measure_snr(const AudioBuffer& test, const AudioBuffer& reference);

struct Point {
  double x;
  double y;
};

struct LinearFit {
  double slope;
  double intercept;
  std::vector<std::size_t> outliers;  // indices into the input, ascending
};

// Ordinary least squares. With exclude_outliers, one refit drops every point
// whose absolute residual exceeds 3x the median absolute residual.
LinearFit fit_linear(std::span<const Point> points, bool exclude_outliers);

}  // namespace dl4
