#include "dl4/params.hpp"

#include <cmath>
#include <string>

#include "dl4/errors.hpp"

namespace dl4 {
namespace {

constexpr std::array<std::string_view, 11> kNames = {
    "DS", "DF", "RG", "MX", "SP", "WD", "SHAPE", "HP", "LP", "FBPHASE", "OUTPHASE"};

[[noreturn]] void out_of_range(ParamId id, double value, const char* expected) {
  throw DomainError(std::string(name(id)) + " out of range: " + std::to_string(value) +
                        " (expected " + expected + ")",
                    std::string(name(id)));
}

void check_unit(ParamId id, double v) {
  if (!(v >= 0.0 && v <= 1.0)) out_of_range(id, v, "0..1");
}

}  // namespace

double cutoff_hz(HighPass hp) { return hp == HighPass::Hz16 ? 16.0 : 150.0; }
double cutoff_hz(LowPass lp) { return lp == LowPass::kHz15 ? 15000.0 : 3300.0; }

std::string_view name(ParamId id) { return kNames[static_cast<std::size_t>(id)]; }

std::optional<ParamId> param_from_name(std::string_view n) {
  for (auto id : kAllParams) {
    if (name(id) == n) return id;
  }
  return std::nullopt;
}

void validate_param(ParamId id, double v) {
  switch (id) {
    case ParamId::DS:
      if (!std::isfinite(v)) out_of_range(id, v, "1, 2, 4, ..., 512");
      BaseDelay::from_ms(v);
      return;
    case ParamId::DF:
      if (!(v >= kMinDelayFactor && v <= kMaxDelayFactor)) out_of_range(id, v, "0.25..1");
      return;
    case ParamId::RG:
    case ParamId::MX:
    case ParamId::SP:
    case ParamId::WD:
    case ParamId::SHAPE:
      check_unit(id, v);
      return;
    case ParamId::HP:
      if (v != 16.0 && v != 150.0) out_of_range(id, v, "16 or 150");
      return;
    case ParamId::LP:
      if (v != 15000.0 && v != 3300.0) out_of_range(id, v, "15000 or 3300");
      return;
    case ParamId::FBPHASE:
    case ParamId::OUTPHASE:
      if (v != 0.0 && v != 1.0) out_of_range(id, v, "0 or 1");
      return;
  }
}

void set_param(Dl4Params& p, ParamId id, double v) {
  validate_param(id, v);
  switch (id) {
    case ParamId::DS: p.base = BaseDelay::from_ms(v); break;
    case ParamId::DF: p.df = v; break;
    case ParamId::RG: p.feedback = v; break;
    case ParamId::MX: p.mix = v; break;
    case ParamId::SP: p.lfo_speed = v; break;
    case ParamId::WD: p.lfo_width = v; break;
    case ParamId::SHAPE: p.lfo_shape = v; break;
    case ParamId::HP: p.hp = v == 16.0 ? HighPass::Hz16 : HighPass::Hz150; break;
    case ParamId::LP: p.lp = v == 15000.0 ? LowPass::kHz15 : LowPass::kHz3_3; break;
    case ParamId::FBPHASE: p.feedback_phase_invert = v != 0.0; break;
    case ParamId::OUTPHASE: p.output_phase_invert = v != 0.0; break;
  }
}

double get_param(const Dl4Params& p, ParamId id) {
  switch (id) {
    case ParamId::DS: return p.base.ms();
    case ParamId::DF: return p.df;
    case ParamId::RG: return p.feedback;
    case ParamId::MX: return p.mix;
    case ParamId::SP: return p.lfo_speed;
    case ParamId::WD: return p.lfo_width;
    case ParamId::SHAPE: return p.lfo_shape;
    case ParamId::HP: return cutoff_hz(p.hp);
    case ParamId::LP: return cutoff_hz(p.lp);
    case ParamId::FBPHASE: return p.feedback_phase_invert ? 1.0 : 0.0;
    case ParamId::OUTPHASE: return p.output_phase_invert ? 1.0 : 0.0;
  }
  return 0.0;
}

void validate(const Dl4Params& p) {
  for (auto id : kAllParams) validate_param(id, get_param(p, id));
}

}  // namespace dl4
