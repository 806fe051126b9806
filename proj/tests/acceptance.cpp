// Acceptance suite: one PASS/FAIL line per primary criterion.
// Exit status is non-zero when any criterion fails.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <new>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dl4/analysis.hpp"
#include "dl4/control_mapping.hpp"
#include "dl4/engine.hpp"
#include "dl4/harness.hpp"
#include "dl4/kernels.hpp"
#include "dl4/live_session.hpp"
#include "dl4/sequencer.hpp"
#include "dl4/wav.hpp"

// Allocation counter for the performance criterion.
namespace {
std::atomic<std::uint64_t> g_allocations{0};
}

void* operator new(std::size_t n) {
  g_allocations.fetch_add(1, std::memory_order_relaxed);
  if (void* p = std::malloc(n ? n : 1)) return p;
  throw std::bad_alloc();
}
void* operator new[](std::size_t n) { return operator new(n); }
void* operator new(std::size_t n, std::align_val_t al) {
  g_allocations.fetch_add(1, std::memory_order_relaxed);
  const auto a = static_cast<std::size_t>(al);
  if (void* p = std::aligned_alloc(a, (std::max<std::size_t>(n, 1) + a - 1) / a * a)) return p;
  throw std::bad_alloc();
}
void* operator new[](std::size_t n, std::align_val_t al) { return operator new(n, al); }
void operator delete(void* p) noexcept { std::free(p); }
void operator delete[](void* p) noexcept { std::free(p); }
void operator delete(void* p, std::size_t) noexcept { std::free(p); }
void operator delete[](void* p, std::size_t) noexcept { std::free(p); }
void operator delete(void* p, std::align_val_t) noexcept { std::free(p); }
void operator delete[](void* p, std::align_val_t) noexcept { std::free(p); }
void operator delete(void* p, std::size_t, std::align_val_t) noexcept { std::free(p); }
void operator delete[](void* p, std::size_t, std::align_val_t) noexcept { std::free(p); }

using namespace dl4;

namespace {

constexpr double kSr = 48000.0;

struct Outcome {
  bool pass;
  std::string detail;
};

int g_failures = 0;

void criterion(const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.detail += " (over time limit " + std::to_string(limit_s) + " s)";
  }
  if (!o.pass) ++g_failures;
  std::printf("%s  %-28s %s [%.3f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<float> impulse(std::size_t n) {
  std::vector<float> x(n, 0.0f);
  x[0] = 1.0f;
  return x;
}

AudioBuffer render_steps(const AudioBuffer& in, const std::string& steps, MappingMode mode,
                         const std::string& script = "") {
  RenderConfig cfg;
  cfg.mapping = mode;
  return render(in, parse_step_list(steps), parse_timed_script(script), cfg).audio;
}

// Level of the echo centred near `pos`: 1 kHz magnitude over a +-5 ms
// raised-cosine window. Repeats lose their top octaves to the loop low-pass,
// so raw sample peaks shrink faster than the loop gain.
double echo_level(const std::vector<float>& y, double pos) {
  const long c = std::lround(pos);
  const long half = 240;
  double re = 0.0, im = 0.0;
  for (long i = -half; i <= half; ++i) {
    const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * i / (half + 1.0)));
    const double ph = 2.0 * std::numbers::pi * 1000.0 * i / kSr;
    re += w * y[c + i] * std::cos(ph);
    im -= w * y[c + i] * std::sin(ph);
  }
  return std::hypot(re, im);
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("dl4_acceptance_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
  }
};

}  // namespace

int main() {
  std::printf("acceptance suite, %d OpenMP thread(s)\n", kernels::max_threads());

  criterion("worked-delay-example", 5.0, [] {
    const auto in = AudioBuffer::mono(impulse(12000), kSr);
    const auto out = render_steps(in, "step a: DS=256 DF=0.6 RG=0 MX=1 WD=0\n", MappingMode::Raw);
    const auto& y = out.channels[0];
    const auto peak = static_cast<std::size_t>(
        std::max_element(y.begin(), y.end(), [](float a, float b) { return std::abs(a) < std::abs(b); }) -
        y.begin());
    const double expected = 153.6 * kSr / 1000.0;
    const bool ok = std::abs(static_cast<double>(peak) - expected) <= 1.0;
    return Outcome{ok, fmt("peak at sample %zu (%.4f ms), expected %.1f +- 1", peak,
                           peak * 1000.0 / kSr, expected)};
  });

  criterion("calibration-endpoints", 0, [] {
    const double lo = map_df_score(0.25, MappingMode::RussekUnit);
    const double hi = map_df_score(1.0, MappingMode::RussekUnit);
    const double fb = map_feedback_score(1.0, MappingMode::RussekUnit);
    const bool ok = std::abs(lo - 0.26758) <= 1e-5 && std::abs(hi - 0.89333) <= 1e-5 && fb == 0.75;
    return Outcome{ok, fmt("df(0.25)=%.6f df(1.0)=%.6f fb(1.0)=%.17g", lo, hi, fb)};
  });

  criterion("comb-closure", 10.0, [] {
    // 2^16 samples so the resonance FFT runs at full resolution.
    const auto in = AudioBuffer::mono(impulse(kMinResonanceFft), kSr);
    const auto out = render_steps(in, "step comb: DS=32 DF=0.75 RG=1.0 MX=1\n", MappingMode::RussekUnit);
    const double f0 = estimate_comb_resonance(out);
    const auto echo = estimate_delay_ms(out);
    const double tau = echo ? echo->delay_ms : -1.0;
    const bool ok = f0 >= 44.0 && f0 <= 47.0 && std::abs(tau - 21.91) <= 0.1;
    return Outcome{ok, fmt("fundamental %.3f Hz (want [44, 47]), delay %.4f ms (want 21.91 +- 0.1)",
                           f0, tau)};
  });

  criterion("quantizer-snr", 2.0, [] {
    const std::size_t n = 48000;
    std::vector<float> ref(n), q(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = std::sin(2.0 * std::numbers::pi * 997.0 * static_cast<double>(i) / kSr);
      ref[i] = static_cast<float>(x);
      q[i] = static_cast<float>(quantize15(x));
    }
    const double snr = measure_snr(AudioBuffer::mono(q, kSr), AudioBuffer::mono(ref, kSr));
    const bool ok = snr >= 90.0 && std::abs(snr - 92.1) <= 1.0;
    return Outcome{ok, fmt("SNR %.2f dB (want >= 90, ~92.1 +- 1)", snr)};
  });

  criterion("multiplier-range", 0, [] {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> df(0.25, 1.0);
    int violations = 0;
    for (int i = 0; i < 100000; ++i) {
      const double m = delay_multiplier(df(rng), u(rng), lfo_raw(u(rng), u(rng)));
      if (!(m >= 0.25 && m <= 1.0)) ++violations;
    }
    double worst = 0.0;
    for (double shape : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      double lo = 2.0, hi = -1.0;
      for (int k = 0; k < 48000; ++k) {
        const double m = delay_multiplier(0.6, 1.0, lfo_raw(shape, k / 48000.0));
        lo = std::min(lo, m);
        hi = std::max(hi, m);
      }
      worst = std::max({worst, std::abs(lo - 0.25), std::abs(hi - 1.0)});
    }
    const bool ok = violations == 0 && worst <= 1e-3;
    return Outcome{ok, fmt("%d violations in 1e5 tuples; width=1 extremes off by at most %.2e",
                           violations, worst)};
  });

  criterion("feedback-decay", 0, [] {
    // RG 1.0 under the unit mapping is a loop gain of 0.75.
    const auto in = AudioBuffer::mono(impulse(96000), kSr);
    const auto out = render_steps(in, "step a: DS=128 DF=0.8 RG=1.0 MX=1\n", MappingMode::RussekUnit);
    const double tau_ms = 128.0 * map_df_score(0.8, MappingMode::RussekUnit);
    const double d = tau_ms * kSr / 1000.0;
    const auto& y = out.channels[0];
    double worst = 0.0;
    for (int k = 1; k < 10; ++k) {
      const double r = echo_level(y, (k + 1) * d) / echo_level(y, k * d);
      worst = std::max(worst, std::abs(r / 0.75 - 1.0));
    }
    const double est = estimate_feedback_gain(out, tau_ms);
    const bool ok = worst <= 0.02 && std::abs(est - 0.75) <= 0.01;
    return Outcome{ok, fmt("echo ratios within %.3f%% of 0.75 (want 2%%); estimator %.5f (want 0.75 +- 0.01)",
                           100.0 * worst, est)};
  });

  criterion("regression-sensitivity", 0, [] {
    TempDir dir;
    std::mt19937 rng(6);
    std::normal_distribution<float> dist(0.0f, 0.25f);
    std::vector<float> x(48000);
    for (auto& v : x) v = dist(rng);
    const auto in = AudioBuffer::mono(x, kSr);
    write_wav(dir.path / "in.wav", in, SampleFormat::Float32);
    const std::string steps = "step a: DS=128 DF=0.8 RG=0.7 MX=0.5 SP=0.3 WD=0.2\nstep b: DF=0.5\n";
    const std::string script = "500 step\n";
    dir.write("piece.steps", steps);
    dir.write("piece.script", script);
    const auto golden = render(in, parse_step_list(steps), parse_timed_script(script)).audio;
    const auto again = render(in, parse_step_list(steps), parse_timed_script(script)).audio;
    const bool identical = golden == again;
    write_wav(dir.path / "golden.wav", golden, SampleFormat::Float32);

    auto spec = parse_check_spec({{"input", "in.wav"},
                                  {"steps", "piece.steps"},
                                  {"script", "piece.script"},
                                  {"golden", "golden.wav"},
                                  {"mode", "exact"}},
                                 dir.path);
    const bool self_pass = run_check(spec).pass;

    dir.write("piece.steps", "step a: DS=128 DF=0.81 RG=0.7 MX=0.5 SP=0.3 WD=0.2\nstep b: DF=0.5\n");
    const auto perturbed = render(load_render_input(dir.path / "in.wav", 0),
                                  parse_step_list(read_text_file(dir.path / "piece.steps")),
                                  parse_timed_script(script))
                               .audio;
    write_wav(dir.path / "golden.wav", perturbed, SampleFormat::Float32);
    dir.write("piece.steps", steps);
    spec.mode = CompareMode::Tolerant;
    spec.tolerance = 1e-4;
    const auto r = run_check(spec);
    const bool ok = identical && self_pass && !r.pass;
    return Outcome{ok, fmt("repeat identical=%d, self-golden exact pass=%d, DF+0.01 golden %s (max diff %.3g)",
                           identical, self_pass, r.pass ? "passed" : "failed", r.max_abs_diff)};
  });

  criterion("lfo-discard-policy", 0, [] {
    const std::string with_lfo =
        "policy discard_lfo\n"
        "step a: DS=256 DF=0.6 RG=0.4 MX=0.5 WD=0.8 SP=0.5\n"
        "step b: DF=0.8 WD=0.8 SP=0.5\n"
        "step c: SHAPE=1\n";
    const std::string explicit_zero =
        "step a: DS=256 DF=0.6 RG=0.4 MX=0.5 WD=0 SP=0\n"
        "step b: DF=0.8 WD=0 SP=0\n"
        "step c: SHAPE=1\n";
    Sequencer seq(parse_step_list(with_lfo));
    bool all_zero = true;
    while (seq.advance()) all_zero &= seq.params().lfo_width == 0.0 && seq.params().lfo_speed == 0.0;

    std::mt19937 rng(7);
    std::normal_distribution<float> dist(0.0f, 0.25f);
    std::vector<float> x(96000);
    for (auto& v : x) v = dist(rng);
    const auto in = AudioBuffer::mono(x, kSr);
    const std::string script = "500 step\n1000 step\n";
    const auto a = render_steps(in, with_lfo, MappingMode::RussekUnit, script);
    const auto b = render_steps(in, explicit_zero, MappingMode::RussekUnit, script);
    const bool ok = all_zero && a == b;
    return Outcome{ok, fmt("WD=SP=0 at every step: %d; renders identical: %d", all_zero, a == b)};
  });

  criterion("performance", 0, [] {
    const std::string steps =
        "step a: DS=256 DF=0.6 RG=0.7 MX=0.5 SP=0.4 WD=0.5 SHAPE=0.5\n"
        "step b: DS=32 DF=0.75 RG=1.0 MX=0.6 LP=3300\n"
        "step c: DS=512 DF=0.9 RG=0.5 HP=150 FBPHASE=1\n";
    std::string script;
    for (int t = 0; t < 60000; t += 500) {
      script += std::to_string(t) + ((t / 500) % 20 == 7 ? " step\n" : " set MX " + std::to_string((t % 7) / 7.0) + "\n");
    }
    const auto list = parse_step_list(steps);
    const auto events = parse_timed_script(script);
    std::mt19937 rng(8);
    std::normal_distribution<float> dist(0.0f, 0.25f);
    std::vector<float> x(static_cast<std::size_t>(60 * kSr));
    for (auto& v : x) v = dist(rng);
    const auto long_in = AudioBuffer::mono(x, kSr);
    const auto short_in = AudioBuffer::mono(std::vector<float>(x.begin(), x.begin() + 48000), kSr);

    // Setup allocations are the same for any input length, so equal counts
    // for a 1 s and a 60 s render mean the block loop allocated nothing.
    render(short_in, list, events);  // warm-up
    auto before = g_allocations.load();
    render(short_in, list, events);
    const auto short_allocs = g_allocations.load() - before;

    const auto t0 = std::chrono::steady_clock::now();
    before = g_allocations.load();
    const auto result = render(long_in, list, events);
    const auto long_allocs = g_allocations.load() - before;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // Live path: control messages applied inside process_block.
    LiveSession live(kSr, list, MappingMode::RussekUnit);
    std::vector<float> in(64, 0.1f), out(64);
    for (int i = 0; i < 100; ++i) live.process_block(in, out);
    before = g_allocations.load();
    for (int i = 0; i < 20000; ++i) {
      if (i % 10 == 0) live.post_set(ParamId::DF, 0.3 + 0.0001 * (i % 5000));
      if (i % 3000 == 0) live.post_step();
      live.process_block(in, out);
    }
    const auto live_allocs = g_allocations.load() - before;

    const bool ok = secs <= 6.0 && long_allocs == short_allocs && live_allocs == 0 &&
                    result.audio.frames() == x.size();
    return Outcome{ok, fmt("60 s rendered in %.3f s (%.0fx real time, want <= 6 s); block-loop allocations: "
                           "render %lld, live %llu (want 0)",
                           secs, 60.0 / secs,
                           static_cast<long long>(long_allocs) - static_cast<long long>(short_allocs),
                           static_cast<unsigned long long>(live_allocs))};
  });

  criterion("regression-fit-fixture", 0, [] {
    std::vector<Point> pts;
    for (double x : {0.25, 0.4, 0.55, 0.7, 0.85}) pts.push_back({x, 0.05899 + 0.83434 * x});
    pts.push_back({0.625, 0.15});  // gross outlier, well below the line
    const auto fit = fit_linear(pts, true);
    const bool flagged = fit.outliers == std::vector<std::size_t>{5};
    const bool ok = std::abs(fit.slope - 0.83434) <= 1e-6 && std::abs(fit.intercept - 0.05899) <= 1e-6 &&
                    flagged;
    return Outcome{ok, fmt("slope %.8f intercept %.8f, outlier flagged: %d", fit.slope, fit.intercept,
                           flagged)};
  });

  std::printf("%s: %d criterion(s) failed\n", g_failures ? "FAILED" : "ALL PASSED", g_failures);
  return g_failures ? 1 : 0;
}
