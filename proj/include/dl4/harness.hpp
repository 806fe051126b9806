#pragma once

// Offline rendering and golden-file regression checks.
//
// A check renders a fixture through the engine under a step list and a
// timed script, then compares the result with a stored golden render.
// Script events bind at block starts, so goldens depend on the block size.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "dl4/control_mapping.hpp"
#include "dl4/engine.hpp"
#include "dl4/sequencer.hpp"
#include "dl4/wav.hpp"

namespace dl4 {

inline constexpr double kDefaultTolerance = 1e-4;

struct RenderConfig {
  std::optional<double> sample_rate;  // must match the input when set
  std::size_t block_size = kDefaultBlockSize;
  MappingMode mapping = MappingMode::RussekUnit;
};

struct RenderResult {
  AudioBuffer audio;
  std::size_t ignored_events = 0;  // events timed past the end of the input
  bool sequence_ended = false;     // a step event found no further step
};

// Starts on the first step of `steps`; each script `step` advances one.
RenderResult render(const AudioBuffer& input, const StepList& steps, const TimedScript& script,
                    const RenderConfig& config = {});

enum class CompareMode { Exact, Tolerant };

struct DiffReport {
  bool pass = false;
  double max_abs_diff = 0.0;
  double rms_diff = 0.0;
  std::optional<std::size_t> first_divergence;
  bool length_mismatch = false;
  double tolerance = 0.0;
  CompareMode mode = CompareMode::Tolerant;
};

// Stats cover the common prefix. In exact mode any difference fails and the
// tolerance is ignored.
DiffReport compare(const AudioBuffer& a, const AudioBuffer& b, double tolerance, CompareMode mode);

struct CheckSpec {
  std::filesystem::path input;
  std::filesystem::path steps;
  std::optional<std::filesystem::path> script;
  std::filesystem::path golden;
  std::size_t input_channel = 0;
  double tolerance = kDefaultTolerance;
  CompareMode mode = CompareMode::Tolerant;
  RenderConfig config;
};

// Relative paths resolve against the spec file's directory.
CheckSpec parse_check_spec(const nlohmann::json& j, const std::filesystem::path& base_dir);
CheckSpec load_check_spec(const std::filesystem::path& path);

AudioBuffer load_render_input(const std::filesystem::path& path, std::size_t channel);
std::string read_text_file(const std::filesystem::path& path);

// Renders and compares. File and parse problems throw (IoError / ParseError /
// DomainError); a mismatch is reported, not thrown.
DiffReport run_check(const CheckSpec& spec);

nlohmann::json to_json(const DiffReport& report);
const char* to_string(CompareMode mode);

}  // namespace dl4
