#include "dl4/control_mapping.hpp"

#include <cmath>
#include <string>

#include "dl4/errors.hpp"

namespace dl4 {
namespace {

constexpr double kTaperBase = 100.0;

void require_range(double v, double lo, double hi, const char* name) {
  if (!(v >= lo && v <= hi)) {
    throw DomainError(std::string(name) + " must be in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "], got " + std::to_string(v),
                      name);
  }
}

}  // namespace

BaseDelay::BaseDelay(int index) : index_(index) {
  if (index < 0 || index >= kBaseDelayCount) {
    throw DomainError("base delay selector index must be in 0..9, got " + std::to_string(index),
                      "DS");
  }
}

BaseDelay BaseDelay::from_ms(double ms) {
  for (int i = 0; i < kBaseDelayCount; ++i) {
    if (ms == std::ldexp(1.0, i)) return BaseDelay(i);
  }
  throw DomainError("DS must be a power of two between 1 and 512 ms, got " + std::to_string(ms),
                    "DS");
}

double BaseDelay::ms() const noexcept { return std::ldexp(1.0, index_); }

double base_delay_ms(int index) { return BaseDelay(index).ms(); }

double map_feedback_score(double rg, MappingMode mode) {
  require_range(rg, 0.0, 1.0, "RG");
  return (mode == MappingMode::RussekUnit ? kRussekFeedbackSlope : kRawFeedbackCeiling) * rg;
}

double map_df_score(double df, MappingMode mode) {
  require_range(df, kMinDelayFactor, kMaxDelayFactor, "DF");
  if (mode == MappingMode::Raw) return df;
  return kRussekDfIntercept + kRussekDfSlope * df;
}

double log_taper(double position) {
  require_range(position, 0.0, 1.0, "taper position");
  return (std::pow(kTaperBase, position) - 1.0) / (kTaperBase - 1.0);
}

double lfo_speed_hz(double sp) {
  require_range(sp, 0.0, 1.0, "SP");
  return kMaxLfoSpeedHz * log_taper(sp);
}

double lfo_width(double wd) {
  require_range(wd, 0.0, 1.0, "WD");
  return log_taper(wd);
}

const char* to_string(MappingMode mode) {
  return mode == MappingMode::Raw ? "raw" : "russek";
}

MappingMode parse_mapping_mode(std::string_view text) {
  if (text == "raw") return MappingMode::Raw;
  if (text == "russek") return MappingMode::RussekUnit;
  throw DomainError("mapping mode must be 'raw' or 'russek', got '" + std::string(text) + "'",
                    "mapping");
}

}  // namespace dl4
