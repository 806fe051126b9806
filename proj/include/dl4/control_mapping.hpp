#pragma once

#include <string_view>

// Faceplate knob positions -> DSP parameters.
//
// Two calibrations are supported. Raw follows the DL-4 owner's manual.
// RussekUnit applies straight-line fits measured on one particular unit,
// mapping score markings to effective values: its feedback trim tops out at
// 75 % and its Delay Factor pot covers only part of the printed scale.

namespace dl4 {

enum class MappingMode { Raw, RussekUnit };

inline constexpr int kBaseDelayCount = 10;
inline constexpr double kMaxBaseDelayMs = 512.0;
inline constexpr double kMinDelayFactor = 0.25;
inline constexpr double kMaxDelayFactor = 1.0;
inline constexpr double kRawFeedbackCeiling = 0.95;
inline constexpr double kRussekFeedbackSlope = 0.75;
inline constexpr double kRussekDfIntercept = 0.05899;
inline constexpr double kRussekDfSlope = 0.83434;
inline constexpr double kMaxLfoSpeedHz = 10.0;

// Base delay selector position 0..9 -> {1, 2, 4, ..., 512} ms.
class BaseDelay {
 public:
  explicit BaseDelay(int index);
  // Inverse of ms(): accepts only exact powers of two in [1, 512].
  static BaseDelay from_ms(double ms);

  int index() const noexcept { return index_; }
  double ms() const noexcept;

  friend bool operator==(BaseDelay, BaseDelay) = default;

 private:
  int index_;
};

double base_delay_ms(int index);

// RG knob [0,1] -> loop gain.
double map_feedback_score(double rg, MappingMode mode);

// Score DF on the printed [0.25, 1] scale -> true delay factor.
double map_df_score(double df, MappingMode mode);

// Pseudo-log taper shared by the SP and WD pots: (c^x - 1) / (c - 1), c = 100.
double log_taper(double position);

double lfo_speed_hz(double sp);
double lfo_width(double wd);

const char* to_string(MappingMode mode);
// "raw" or "russek".
MappingMode parse_mapping_mode(std::string_view text);

}  // namespace dl4
