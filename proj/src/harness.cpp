#include "dl4/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dl4/errors.hpp"
#include "dl4/kernels.hpp"

namespace dl4 {

RenderResult render(const AudioBuffer& input, const StepList& steps, const TimedScript& script,
                    const RenderConfig& config) {
  if (!input.is_mono()) throw DomainError("render input must be mono");
  if (config.block_size == 0) throw DomainError("block size must be positive");
  const double sr = input.sample_rate;
  if (config.sample_rate && *config.sample_rate != sr) {
    throw DomainError("configured sample rate " + std::to_string(*config.sample_rate) +
                      " Hz does not match input rate " + std::to_string(sr) + " Hz");
  }

  Dl4Params initial;
  initial.mapping_mode = config.mapping;
  Sequencer sequencer(steps, initial);
  sequencer.advance();
  Engine engine(sr, sequencer.params());

  const auto in = input.mono_view();
  const auto n = static_cast<std::int64_t>(in.size());
  RenderResult result;
  result.audio = AudioBuffer::mono(std::vector<float>(in.size()), sr);
  std::span<float> out(result.audio.channels[0]);

  for (std::int64_t start = 0; start < n;) {
    const auto len = std::min<std::int64_t>(static_cast<std::int64_t>(config.block_size), n - start);
    const auto events = events_between(script, start, start + len, sr);
    if (!events.empty()) {
      for (const auto& ev : events) {
        if (ev.kind == ScriptEvent::Kind::Step) {
          if (!sequencer.advance()) result.sequence_ended = true;
        } else {
          sequencer.set(ev.param, ev.value);
        }
      }
      engine.set_params(sequencer.params());
    }
    const auto offset = static_cast<std::size_t>(start);
    const auto count = static_cast<std::size_t>(len);
    engine.process(in.subspan(offset, count), out.subspan(offset, count));
    start += len;
  }

  for (const auto& ev : script.events) {
    if (event_sample(ev, sr) >= n) ++result.ignored_events;
  }
  return result;
}

DiffReport compare(const AudioBuffer& a, const AudioBuffer& b, double tolerance, CompareMode mode) {
  if (!a.is_mono() || !b.is_mono()) throw DomainError("compare expects mono buffers");
  if (!(tolerance >= 0.0)) throw DomainError("tolerance must be non-negative");

  DiffReport r;
  r.mode = mode;
  r.tolerance = tolerance;
  r.length_mismatch = a.frames() != b.frames();
  const double threshold = mode == CompareMode::Exact ? 0.0 : tolerance;
  const auto stats = kernels::diff_stats(a.mono_view(), b.mono_view(), threshold);
  const auto common = std::min(a.frames(), b.frames());
  r.max_abs_diff = stats.max_abs;
  r.rms_diff = common ? std::sqrt(stats.sum_sq / static_cast<double>(common)) : 0.0;
  r.first_divergence = stats.first_exceeding;
  r.pass = !r.length_mismatch && r.max_abs_diff <= threshold;
  return r;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

AudioBuffer load_render_input(const std::filesystem::path& path, std::size_t channel) {
  auto audio = read_wav(path);
  return audio.is_mono() && channel == 0 ? audio : extract_channel(audio, channel);
}

const char* to_string(CompareMode mode) { return mode == CompareMode::Exact ? "exact" : "tolerant"; }

CheckSpec parse_check_spec(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  try {
    if (!j.is_object()) throw ParseError("check spec must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      static const char* known[] = {"input", "steps", "script", "golden", "channel", "tolerance",
                                    "mode", "block_size", "mapping", "sample_rate"};
      if (std::none_of(std::begin(known), std::end(known), [&](const char* k) { return key == k; })) {
        throw ParseError("unknown check spec field '" + key + "'");
      }
    }
    CheckSpec spec;
    spec.input = resolve(j.at("input").get<std::string>());
    spec.steps = resolve(j.at("steps").get<std::string>());
    if (j.contains("script") && !j["script"].is_null()) {
      spec.script = resolve(j["script"].get<std::string>());
    }
    spec.golden = resolve(j.at("golden").get<std::string>());
    spec.input_channel = j.value("channel", std::size_t{0});
    spec.tolerance = j.value("tolerance", kDefaultTolerance);
    if (!(spec.tolerance >= 0.0)) throw ParseError("tolerance must be non-negative");
    const auto mode = j.value("mode", std::string("tolerant"));
    if (mode == "exact") {
      spec.mode = CompareMode::Exact;
    } else if (mode != "tolerant") {
      throw ParseError("mode must be 'exact' or 'tolerant'");
    }
    spec.config.block_size = j.value("block_size", kDefaultBlockSize);
    if (spec.config.block_size == 0) throw ParseError("block_size must be positive");
    spec.config.mapping = parse_mapping_mode(j.value("mapping", std::string("russek")));
    if (j.contains("sample_rate") && !j["sample_rate"].is_null()) {
      spec.config.sample_rate = j["sample_rate"].get<double>();
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid check spec: ") + e.what());
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid check spec: ") + e.what());
  }
}

CheckSpec load_check_spec(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_check_spec(j, path.parent_path());
}

DiffReport run_check(const CheckSpec& spec) {
  const auto input = load_render_input(spec.input, spec.input_channel);
  const auto steps = parse_step_list(read_text_file(spec.steps));
  const auto script = spec.script ? parse_timed_script(read_text_file(*spec.script)) : TimedScript{};
  const auto golden = read_wav(spec.golden);
  if (!golden.is_mono()) throw DomainError("golden file must be mono");
  const auto rendered = render(input, steps, script, spec.config);
  return compare(rendered.audio, golden, spec.tolerance, spec.mode);
}

nlohmann::json to_json(const DiffReport& r) {
  nlohmann::json j;
  j["pass"] = r.pass;
  j["max_abs_diff"] = r.max_abs_diff;
  j["rms_diff"] = r.rms_diff;
  j["first_divergence"] = r.first_divergence ? nlohmann::json(*r.first_divergence) : nlohmann::json();
  j["length_mismatch"] = r.length_mismatch;
  j["tolerance"] = r.tolerance;
  j["mode"] = to_string(r.mode);
  return j;
}

}  // namespace dl4
