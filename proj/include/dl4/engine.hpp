#pragma once

// DL-4 delay section.
//
// Per sample:
//   LFO advance -> delay time = base * multiplier(DF, width, LFO)
//   wet  = q15(read(delay))
//   fb   = HP(LP(wet * loop_gain)), optionally inverted
//   write q15(input + fb)
//   out  = (1 - mix) * input + mix * wet, optionally inverted
//
// The two quantizers stand in for the converters on either side of the
// digital delay memory; the loop filters sit in the analog feedback path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dl4/params.hpp"

namespace dl4 {

inline constexpr int kQuantizerBits = 15;
inline constexpr double kDefaultSampleRate = 48000.0;
inline constexpr std::size_t kDefaultBlockSize = 64;
inline constexpr double kGainRampMs = 10.0;

// Mid-tread uniform quantizer with step 2^-14 (15 bits over [-1, 1]).
// Rounds half away from zero; does not clamp.
double quantize15(double x) noexcept;

// Morphing LFO in [-1, 1]. shape 0 = triangle, 0.5 = sine, 1 = square;
// intermediate values crossfade linearly. All shapes peak at phase 0.5 and
// bottom out at phase 0. The square is high on [0.25, 0.75).
double lfo_triangle(double phase) noexcept;
double lfo_sine(double phase) noexcept;
double lfo_square(double phase) noexcept;
double lfo_raw(double shape, double phase) noexcept;

// Crossfade between the constant delay factor and a full 0.25..1 sweep.
// The result is always inside [0.25, 1].
double delay_multiplier(double df_true, double width, double lfo_value) noexcept;

// Circular delay memory with linear-interpolated fractional reads.
// read(d) returns the sample written d writes ago (d >= 1).
class DelayLine {
 public:
  explicit DelayLine(std::size_t capacity);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t buffer_size() const noexcept { return buffer_.size(); }

  // Throws std::out_of_range unless 1 <= delay <= capacity().
  double read(double delay) const;
  void write(double x) noexcept;
  void clear() noexcept;

 private:
  std::vector<double> buffer_;
  std::size_t mask_;
  std::size_t capacity_;
  std::size_t write_ = 0;
};

// First-order section with -3 dB at the cutoff. The high-pass is the
// complement of the low-pass: x - LP(x).
class OnePole {
 public:
  enum class Kind { LowPass, HighPass };

  OnePole(Kind kind, double cutoff_hz, double sample_rate);

  void set_cutoff(double cutoff_hz, double sample_rate);
  double process(double x) noexcept {
    lp_ = (1.0 - a_) * x + a_ * lp_;
    return kind_ == Kind::LowPass ? lp_ : x - lp_;
  }
  void reset() noexcept { lp_ = 0.0; }
  double coefficient() const noexcept { return a_; }

 private:
  Kind kind_;
  double a_ = 0.0;
  double lp_ = 0.0;
};

// Linear ramp toward a target over a fixed number of samples.
class GainRamp {
 public:
  void settle(double value) noexcept {
    current_ = target_ = value;
    remaining_ = 0;
  }
  void ramp_to(double target, std::int64_t samples) noexcept;
  double next() noexcept {
    if (remaining_ > 0) {
      if (--remaining_ == 0) {
        current_ = target_;
      } else {
        current_ += step_;
      }
    }
    return current_;
  }
  double current() const noexcept { return current_; }
  double target() const noexcept { return target_; }
  bool settled() const noexcept { return remaining_ == 0; }

 private:
  double current_ = 0.0;
  double target_ = 0.0;
  double step_ = 0.0;
  std::int64_t remaining_ = 0;
};

// Mono in, mono out. Owns all DSP state; never allocates after construction.
class Engine {
 public:
  explicit Engine(double sample_rate = kDefaultSampleRate, const Dl4Params& initial = {});

  // Takes effect from the next processed sample. Feedback gain and mix ramp
  // over 10 ms; delay-time and LFO parameters switch immediately.
  void set_params(const Dl4Params& params);
  const Dl4Params& params() const noexcept { return params_; }

  // in and out must be the same length; they may alias. Throws
  // ProcessingError (with the absolute sample index) on non-finite input,
  // before any state is touched.
  void process(std::span<const float> in, std::span<float> out);

  // Clears audio state and LFO phase and snaps ramps to their targets.
  void reset();

  double sample_rate() const noexcept { return sample_rate_; }
  double lfo_phase() const noexcept { return phase_; }
  std::uint64_t samples_processed() const noexcept { return processed_; }
  const DelayLine& delay_line() const noexcept { return line_; }

  // Current delay in samples for a given LFO value (for diagnostics/tests).
  double delay_samples(double lfo_value) const noexcept;

 private:
  double sample_rate_;
  Dl4Params params_;

  double base_ms_ = 0.0;
  double df_true_ = 0.0;
  double width_ = 0.0;
  double phase_inc_ = 0.0;
  double shape_ = 0.0;
  double fb_sign_ = 1.0;
  double out_sign_ = 1.0;
  std::int64_t ramp_samples_;

  DelayLine line_;
  OnePole lp_;
  OnePole hp_;
  GainRamp feedback_gain_;
  GainRamp mix_;
  double phase_ = 0.0;
  std::uint64_t processed_ = 0;
};

}  // namespace dl4
