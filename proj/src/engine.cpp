#include "dl4/engine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dl4/errors.hpp"

namespace dl4 {
namespace {

constexpr double kQuantStep = 1.0 / 16384.0;  // 2^-14
constexpr double kMinSampleRate = 8000.0;
constexpr double kMaxSampleRate = 384000.0;
constexpr double kLfoCenter = 0.625;
constexpr double kLfoHalfRange = 0.375;

std::size_t delay_capacity(double sample_rate) {
  return static_cast<std::size_t>(std::ceil(kMaxBaseDelayMs * kMaxDelayFactor * sample_rate / 1000.0)) + 1;
}

// The loop filters are only defined below Nyquist; at low session rates the
// 15 kHz low-pass degenerates to a near-bypass.
double usable_cutoff(double cutoff_hz, double sample_rate) {
  return std::min(cutoff_hz, 0.49 * sample_rate);
}

}  // namespace

double quantize15(double x) noexcept { return std::round(x / kQuantStep) * kQuantStep; }

double lfo_triangle(double phase) noexcept {
  return phase <= 0.5 ? 4.0 * phase - 1.0 : 3.0 - 4.0 * phase;
}

double lfo_sine(double phase) noexcept {
  return std::sin(2.0 * std::numbers::pi * phase - std::numbers::pi / 2.0);
}

double lfo_square(double phase) noexcept {
  return (phase >= 0.25 && phase < 0.75) ? 1.0 : -1.0;
}

double lfo_raw(double shape, double phase) noexcept {
  if (shape <= 0.5) {
    const double t = shape / 0.5;
    const double tri = lfo_triangle(phase);
    return t == 0.0 ? tri : (1.0 - t) * tri + t * lfo_sine(phase);
  }
  const double t = (shape - 0.5) / 0.5;
  const double sq = lfo_square(phase);
  return t == 1.0 ? sq : (1.0 - t) * lfo_sine(phase) + t * sq;
}

double delay_multiplier(double df_true, double width, double lfo_value) noexcept {
  const double sweep = kLfoCenter + kLfoHalfRange * lfo_value;
  const double m = (1.0 - width) * df_true + width * sweep;
  return std::clamp(m, kMinDelayFactor, kMaxDelayFactor);
}

DelayLine::DelayLine(std::size_t capacity)
    : buffer_(std::bit_ceil(capacity + 2)), mask_(buffer_.size() - 1), capacity_(capacity) {}

double DelayLine::read(double delay) const {
  if (!(delay >= 1.0 && delay <= static_cast<double>(capacity_))) {
    throw std::out_of_range("delay of " + std::to_string(delay) +
                            " samples outside delay line capacity " + std::to_string(capacity_));
  }
  const auto whole = static_cast<std::size_t>(delay);
  const double frac = delay - static_cast<double>(whole);
  const double newer = buffer_[(write_ - whole) & mask_];
  const double older = buffer_[(write_ - whole - 1) & mask_];
  return (1.0 - frac) * newer + frac * older;
}

void DelayLine::write(double x) noexcept {
  buffer_[write_] = x;
  write_ = (write_ + 1) & mask_;
}

void DelayLine::clear() noexcept {
  std::fill(buffer_.begin(), buffer_.end(), 0.0);
  write_ = 0;
}

OnePole::OnePole(Kind kind, double cutoff_hz, double sample_rate) : kind_(kind) {
  set_cutoff(cutoff_hz, sample_rate);
}

void OnePole::set_cutoff(double cutoff_hz, double sample_rate) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate / 2.0)) {
    throw DomainError("filter cutoff " + std::to_string(cutoff_hz) +
                      " Hz must lie strictly between 0 and Nyquist");
  }
  a_ = std::exp(-2.0 * std::numbers::pi * cutoff_hz / sample_rate);
}

void GainRamp::ramp_to(double target, std::int64_t samples) noexcept {
  if (target == target_) return;
  target_ = target;
  if (samples <= 0) {
    current_ = target;
    remaining_ = 0;
    return;
  }
  remaining_ = samples;
  step_ = (target_ - current_) / static_cast<double>(samples);
}

Engine::Engine(double sample_rate, const Dl4Params& initial)
    : sample_rate_(sample_rate),
      ramp_samples_(0),
      line_(1),
      lp_(OnePole::Kind::LowPass, 1000.0, 48000.0),
      hp_(OnePole::Kind::HighPass, 16.0, 48000.0) {
  if (!(sample_rate >= kMinSampleRate && sample_rate <= kMaxSampleRate)) {
    throw DomainError("sample rate " + std::to_string(sample_rate) +
                      " Hz outside supported range 8000..384000");
  }
  line_ = DelayLine(delay_capacity(sample_rate));
  ramp_samples_ = std::llround(kGainRampMs * sample_rate / 1000.0);
  set_params(initial);
  feedback_gain_.settle(feedback_gain_.target());
  mix_.settle(mix_.target());
}

void Engine::set_params(const Dl4Params& p) {
  validate(p);
  params_ = p;
  base_ms_ = p.base.ms();
  df_true_ = map_df_score(p.df, p.mapping_mode);
  width_ = lfo_width(p.lfo_width);
  phase_inc_ = lfo_speed_hz(p.lfo_speed) / sample_rate_;
  shape_ = p.lfo_shape;
  fb_sign_ = p.feedback_phase_invert ? -1.0 : 1.0;
  out_sign_ = p.output_phase_invert ? -1.0 : 1.0;
  lp_.set_cutoff(usable_cutoff(cutoff_hz(p.lp), sample_rate_), sample_rate_);
  hp_.set_cutoff(usable_cutoff(cutoff_hz(p.hp), sample_rate_), sample_rate_);
  feedback_gain_.ramp_to(map_feedback_score(p.feedback, p.mapping_mode), ramp_samples_);
  mix_.ramp_to(p.mix, ramp_samples_);
}

double Engine::delay_samples(double lfo_value) const noexcept {
  return base_ms_ * delay_multiplier(df_true_, width_, lfo_value) * sample_rate_ / 1000.0;
}

void Engine::process(std::span<const float> in, std::span<float> out) {
  if (in.size() != out.size()) {
    throw std::invalid_argument("input and output blocks differ in length");
  }
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!std::isfinite(in[i])) throw ProcessingError("non-finite input sample", processed_ + i);
  }

  const double samples_per_ms = sample_rate_ / 1000.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double x = in[i];

    phase_ += phase_inc_;
    if (phase_ >= 1.0) phase_ -= std::floor(phase_);

    const double lfo = width_ > 0.0 ? lfo_raw(shape_, phase_) : 0.0;
    const double delay = base_ms_ * delay_multiplier(df_true_, width_, lfo) * samples_per_ms;
    const double wet = quantize15(line_.read(delay));

    const double gain = feedback_gain_.next();
    const double mix = mix_.next();
    const double fb = fb_sign_ * hp_.process(lp_.process(wet * gain));
    line_.write(quantize15(x + fb));

    out[i] = static_cast<float>(out_sign_ * ((1.0 - mix) * x + mix * wet));
  }
  processed_ += in.size();
}

void Engine::reset() {
  line_.clear();
  lp_.reset();
  hp_.reset();
  feedback_gain_.settle(feedback_gain_.target());
  mix_.settle(mix_.target());
  phase_ = 0.0;
  processed_ = 0;
}

}  // namespace dl4
