#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "dl4/control_mapping.hpp"

namespace dl4 {

enum class HighPass { Hz16, Hz150 };
enum class LowPass { kHz15, kHz3_3 };

double cutoff_hz(HighPass hp);
double cutoff_hz(LowPass lp);

// Full faceplate state, as knob positions (before any mapping).
struct Dl4Params {
  BaseDelay base{8};       // DS
  double df = 1.0;         // DF, printed scale [0.25, 1]
  double feedback = 0.0;   // RG
  double mix = 0.0;        // MX, 0 = dry, 1 = wet
  double lfo_speed = 0.0;  // SP
  double lfo_width = 0.0;  // WD
  double lfo_shape = 0.0;  // 0 triangle, 0.5 sine, 1 square
  HighPass hp = HighPass::Hz16;
  LowPass lp = LowPass::kHz15;
  bool feedback_phase_invert = false;
  bool output_phase_invert = false;
  MappingMode mapping_mode = MappingMode::RussekUnit;

  friend bool operator==(const Dl4Params&, const Dl4Params&) = default;
};

// Throws DomainError naming the first offending field.
void validate(const Dl4Params& p);

// Parameters addressable by name from step files, scripts and the control
// protocol. Names are the score margin symbols where one exists.
enum class ParamId { DS, DF, RG, MX, SP, WD, SHAPE, HP, LP, FBPHASE, OUTPHASE };

inline constexpr std::array<ParamId, 11> kAllParams = {
    ParamId::DS, ParamId::DF,    ParamId::RG, ParamId::MX,      ParamId::SP,      ParamId::WD,
    ParamId::SHAPE, ParamId::HP, ParamId::LP, ParamId::FBPHASE, ParamId::OUTPHASE};

std::string_view name(ParamId id);
std::optional<ParamId> param_from_name(std::string_view name);

// Numeric encodings: DS in ms, HP in Hz (16 | 150), LP in Hz (15000 | 3300),
// phase switches 0 | 1, everything else the knob position.
void validate_param(ParamId id, double value);
void set_param(Dl4Params& p, ParamId id, double value);
double get_param(const Dl4Params& p, ParamId id);

}  // namespace dl4
