#include "cli.hpp"

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dl4/analysis.hpp"
#include "dl4/control_server.hpp"
#include "dl4/errors.hpp"
#include "dl4/harness.hpp"
#include "dl4/sequencer.hpp"
#include "dl4/wav.hpp"

namespace dl4::cli {
namespace {

using nlohmann::json;

SampleFormat parse_format(const std::string& s) {
  if (s == "pcm16") return SampleFormat::Pcm16;
  if (s == "pcm24") return SampleFormat::Pcm24;
  return SampleFormat::Float32;
}

struct RenderArgs {
  std::string input, steps, script, output;
  std::string mapping = "russek";
  std::string format = "float32";
  std::size_t block = kDefaultBlockSize;
  std::size_t channel = 0;
};

int do_render(const RenderArgs& a, std::ostream& err) {
  const auto input = load_render_input(a.input, a.channel);
  const auto steps = parse_step_list(read_text_file(a.steps));
  const auto script = a.script.empty() ? TimedScript{} : parse_timed_script(read_text_file(a.script));
  RenderConfig config;
  config.block_size = a.block;
  config.mapping = parse_mapping_mode(a.mapping);
  const auto result = render(input, steps, script, config);
  if (result.ignored_events) {
    err << "warning: " << result.ignored_events << " script event(s) after the end of the input ignored\n";
  }
  if (result.sequence_ended) err << "warning: script stepped past the last step\n";
  write_wav(a.output, result.audio, parse_format(a.format));
  return kSuccess;
}

int do_check(const std::string& spec_path, std::ostream& out) {
  const auto report = run_check(load_check_spec(spec_path));
  out << to_json(report).dump(2) << '\n';
  return report.pass ? kSuccess : kComparisonFailure;
}

struct AnalyzeArgs {
  std::string file;
  std::string mode;
  std::string reference;
  std::optional<double> delay_ms;
  std::size_t channel = 0;
};

int do_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const auto signal = load_render_input(a.file, a.channel);
  json j{{"file", a.file}, {"mode", a.mode}};
  int status = kSuccess;
  try {
    if (a.mode == "delay") {
      const auto est = estimate_delay_ms(signal);
      j["echo"] = est.has_value();
      if (est) {
        j["delay_ms"] = est->delay_ms;
        j["confidence"] = est->confidence;
      }
    } else if (a.mode == "comb") {
      j["fundamental_hz"] = estimate_comb_resonance(signal);
    } else if (a.mode == "feedback") {
      double delay = 0.0;
      if (a.delay_ms) {
        delay = *a.delay_ms;
      } else if (const auto est = estimate_delay_ms(signal)) {
        delay = est->delay_ms;
      } else {
        throw AnalysisError("no echo found; pass --delay-ms");
      }
      j["delay_ms"] = delay;
      j["gain"] = estimate_feedback_gain(signal, delay);
    } else {
      const auto reference = load_render_input(a.reference, a.channel);
      j["snr_db"] = measure_snr(signal, reference);
    }
  } catch (const AnalysisError& e) {
    j["error"] = e.what();
    status = kComparisonFailure;
  }
  out << j.dump(2) << '\n';
  return status;
}

struct ServeArgs {
  unsigned short port = 8080;
  std::string host = "127.0.0.1";
  std::string steps;
  std::string input;
  std::string device;
  std::string mapping = "russek";
  std::size_t block = kDefaultBlockSize;
  std::size_t channel = 0;
};

int do_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  ServerOptions options;
  options.address = a.host;
  options.port = a.port;
  if (!a.input.empty()) options.input = a.input;
  if (!a.device.empty()) options.device = a.device;
  options.input_channel = a.channel;
  options.block_size = a.block;
  options.mapping = parse_mapping_mode(a.mapping);
  options.handle_signals = true;

  ControlServer server(options, parse_step_list(read_text_file(a.steps)));
  server.start();
  out << "serving on ws://" << a.host << ':' << server.port() << '\n' << std::flush;
  if (const auto failure = server.wait()) {
    err << *failure << '\n';
    return kIoError;
  }
  return kSuccess;
}

int do_validate(const std::string& path, std::ostream& out) {
  const auto list = parse_step_list(read_text_file(path));
  out << path << ": " << list.steps.size() << " step(s) ok\n";
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"DL-4 delay emulation: render, regression check, analysis and live control"};
  app.require_subcommand(1);

  RenderArgs render_args;
  auto* render_cmd = app.add_subcommand("render", "Render a WAV file through the engine");
  render_cmd->add_option("--input", render_args.input, "Input WAV (mono, or see --channel)")->required();
  render_cmd->add_option("--steps", render_args.steps, "Step file")->required();
  render_cmd->add_option("--script", render_args.script, "Timed script");
  render_cmd->add_option("--output", render_args.output, "Output WAV")->required();
  render_cmd->add_option("--mapping", render_args.mapping, "Knob calibration")
      ->check(CLI::IsMember({"raw", "russek"}));
  render_cmd->add_option("--block", render_args.block, "Block size in samples")
      ->check(CLI::PositiveNumber);
  render_cmd->add_option("--channel", render_args.channel, "Input channel to render");
  render_cmd->add_option("--format", render_args.format, "Output sample format")
      ->check(CLI::IsMember({"float32", "pcm16", "pcm24"}));

  std::string spec_path;
  auto* check_cmd = app.add_subcommand("check", "Render a check spec and compare with its golden");
  check_cmd->add_option("--spec", spec_path, "Check spec (JSON)")->required();

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Measure delay, comb resonance, loop gain or SNR");
  analyze_cmd->add_option("file", analyze_args.file, "WAV file")->required();
  analyze_cmd->add_option("--mode", analyze_args.mode, "Measurement")
      ->required()
      ->check(CLI::IsMember({"delay", "comb", "feedback", "snr"}));
  analyze_cmd->add_option("--reference", analyze_args.reference, "Reference WAV (snr)");
  analyze_cmd->add_option("--delay-ms", analyze_args.delay_ms, "Known repeat time (feedback)");
  analyze_cmd->add_option("--channel", analyze_args.channel, "Channel to analyze");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Run the live engine with a WebSocket control port");
  serve_cmd->add_option("--port", serve_args.port, "TCP port")->required();
  serve_cmd->add_option("--host", serve_args.host, "Listen address");
  serve_cmd->add_option("--steps", serve_args.steps, "Step file")->required();
  auto* input_opt = serve_cmd->add_option("--input", serve_args.input, "WAV file to loop as the source");
  auto* device_opt = serve_cmd->add_option("--device", serve_args.device, "Audio input device");
  input_opt->excludes(device_opt);
  serve_cmd->add_option("--mapping", serve_args.mapping, "Knob calibration")
      ->check(CLI::IsMember({"raw", "russek"}));
  serve_cmd->add_option("--block", serve_args.block, "Block size in samples")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--channel", serve_args.channel, "Input channel");

  std::string validate_path;
  auto* steps_cmd = app.add_subcommand("steps", "Step file utilities");
  steps_cmd->require_subcommand(1);
  auto* validate_cmd = steps_cmd->add_subcommand("validate", "Parse and validate a step file");
  validate_cmd->add_option("file", validate_path, "Step file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  if (*serve_cmd && serve_args.input.empty() && serve_args.device.empty()) {
    err << "serve: one of --input or --device is required\n";
    return kUsageError;
  }
  if (*analyze_cmd && analyze_args.mode == "snr" && analyze_args.reference.empty()) {
    err << "analyze: --mode snr requires --reference\n";
    return kUsageError;
  }

  try {
    if (*render_cmd) return do_render(render_args, err);
    if (*check_cmd) return do_check(spec_path, out);
    if (*analyze_cmd) return do_analyze(analyze_args, out);
    if (*serve_cmd) return do_serve(serve_args, out, err);
    if (*validate_cmd) return do_validate(validate_path, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
  return kUsageError;
}

}  // namespace dl4::cli
