#pragma once

// Score presets and timed automation.
//
// Step file:
//   # comment
//   policy discard_lfo
//   policy comb_df_override
//   step intro: DS=256 DF=0.6 RG=0.4 MX=0.5
//   step clicks,comb: DS=32 DF=1.0 RG=1.0
//
// Timed script, one event per line:
//   0 step
//   15000 set DF 0.5

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dl4/params.hpp"

namespace dl4 {

struct Assignment {
  ParamId param;
  double value;
  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct Step {
  std::string label;
  bool comb = false;
  std::vector<Assignment> assignments;  // sorted by ParamId, unique
  friend bool operator==(const Step&, const Step&) = default;
};

struct StepPolicy {
  bool discard_lfo = false;       // force WD = SP = 0 on every step
  bool comb_df_override = false;  // comb-tagged steps marked DF=1.0 play at 0.75
  friend bool operator==(const StepPolicy&, const StepPolicy&) = default;
};

inline constexpr double kCombScoreDf = 1.0;
inline constexpr double kCombOverrideDf = 0.75;

struct StepList {
  std::vector<Step> steps;
  StepPolicy policy;
  friend bool operator==(const StepList&, const StepList&) = default;
};

// Throws ParseError (with line) for syntax, DomainError-derived problems are
// rethrown as ParseError naming the parameter and line.
StepList parse_step_list(std::string_view text);
std::string serialize(const StepList& list);

// Operator-advanced walk through a StepList. Starts before the first step
// with `initial` params; advance() merges the next step over the current
// params and applies the list's policies.
class Sequencer {
 public:
  explicit Sequencer(StepList list, const Dl4Params& initial = {});

  // Returns false (and changes nothing) at the end of the list.
  bool advance();
  // Back to "before the first step" with the given params. Does not allocate.
  void restart(const Dl4Params& params) noexcept {
    params_ = params;
    index_.reset();
  }
  // Manual knob change. Policies are not applied to manual changes.
  void set(ParamId id, double value);

  const Dl4Params& params() const noexcept { return params_; }
  const StepList& list() const noexcept { return list_; }
  // 0-based index of the current step; nullopt before the first advance.
  std::optional<std::size_t> index() const noexcept { return index_; }
  std::string_view label() const noexcept;

 private:
  StepList list_;
  Dl4Params params_;
  std::optional<std::size_t> index_;
};

// Pure merge of one step onto params under a policy.
Dl4Params apply_step(Dl4Params params, const Step& step, const StepPolicy& policy);

struct ScriptEvent {
  enum class Kind { Step, Set };
  double time_ms = 0.0;
  Kind kind = Kind::Step;
  ParamId param = ParamId::DS;
  double value = 0.0;
  friend bool operator==(const ScriptEvent&, const ScriptEvent&) = default;
};

struct TimedScript {
  std::vector<ScriptEvent> events;  // non-decreasing time_ms
};

TimedScript parse_timed_script(std::string_view text);

// Sample index an event lands on: floor(time_ms * sr / 1000).
std::int64_t event_sample(const ScriptEvent& e, double sample_rate);

// Events whose sample index lies in [t0, t1).
std::span<const ScriptEvent> events_between(const TimedScript& script, std::int64_t t0,
                                            std::int64_t t1, double sample_rate);

}  // namespace dl4
