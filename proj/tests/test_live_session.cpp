#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"

#include "dl4/control_queue.hpp"
#include "dl4/live_session.hpp"

using namespace dl4;

namespace {

constexpr double kSr = 48000.0;

StepList three_steps() {
  return parse_step_list(
      "step one: DS=256 DF=0.6 RG=0.4 MX=0.5\n"
      "step two: DF=0.8\n"
      "step three,comb: DS=32 DF=1.0 RG=1.0\n");
}

void run_blocks(LiveSession& s, int blocks) {
  std::vector<float> in(64, 0.1f), out(64);
  for (int i = 0; i < blocks; ++i) s.process_block(in, out);
}

}  // namespace

TEST_CASE("queue delivers in order and drops the oldest on overflow") {
  ControlQueue q(4);
  CHECK(q.capacity() == 4);
  for (int i = 0; i < 4; ++i) CHECK(q.push({ControlMessage::Type::Set, ParamId::DF, double(i)}));
  CHECK_FALSE(q.push({ControlMessage::Type::Set, ParamId::DF, 4.0}));
  CHECK_FALSE(q.push({ControlMessage::Type::Set, ParamId::DF, 5.0}));
  std::vector<double> seen;
  CHECK(q.drain([&](const ControlMessage& m) { seen.push_back(m.value); }) == 4);
  CHECK(seen == std::vector<double>{2, 3, 4, 5});
  CHECK(q.lost() == 2);
  CHECK(q.drain([](const ControlMessage&) {}) == 0);
  CHECK(ControlQueue(5).capacity() == 8);
}

TEST_CASE("queue under a concurrent producer keeps order") {
  ControlQueue q(64);
  constexpr int kCount = 200000;
  std::thread producer([&] {
    for (int i = 0; i < kCount; ++i) q.push({ControlMessage::Type::Set, ParamId::MX, double(i)});
  });
  double last = -1.0;
  bool ordered = true;
  std::uint64_t delivered = 0;
  while (last < kCount - 1) {
    delivered += q.drain([&](const ControlMessage& m) {
      if (m.value <= last || m.type != ControlMessage::Type::Set || m.param != ParamId::MX) {
        ordered = false;
      }
      last = m.value;
    });
  }
  producer.join();
  CHECK(ordered);
  CHECK(delivered + q.lost() == kCount);
}

TEST_CASE("session starts on the first step") {
  LiveSession s(kSr, three_steps(), MappingMode::RussekUnit);
  const auto snap = s.snapshot();
  CHECK(snap.step_index == 1);
  CHECK(snap.step_count == 3);
  CHECK(snap.label_view() == "one");
  CHECK(snap.params.df == 0.6);
  CHECK(snap.sample_rate == kSr);
  CHECK(s.engine().params() == s.params());
}

TEST_CASE("empty queue leaves state untouched") {
  LiveSession s(kSr, three_steps(), MappingMode::RussekUnit);
  const auto before = s.snapshot();
  run_blocks(s, 3);
  const auto after = s.snapshot();
  CHECK(after.params == before.params);
  CHECK(after.state_version == before.state_version);
  CHECK(s.blocks_processed() == 3);
}

TEST_CASE("last writer wins within a block") {
  LiveSession s(kSr, three_steps(), MappingMode::RussekUnit);
  s.post_set(ParamId::DF, 0.3);
  s.post_set(ParamId::DF, 0.9);
  s.post_set(ParamId::MX, 0.2);
  run_blocks(s, 1);
  CHECK(s.params().df == 0.9);
  CHECK(s.params().mix == 0.2);
  CHECK(s.engine().params() == s.params());
  CHECK(s.snapshot().params.df == 0.9);
}

TEST_CASE("set and step apply in arrival order") {
  SUBCASE("set then step: the step overrides") {
    LiveSession s(kSr, three_steps(), MappingMode::RussekUnit);
    s.post_set(ParamId::DF, 0.3);
    s.post_step();
    run_blocks(s, 1);
    CHECK(s.params().df == 0.8);
    CHECK(s.snapshot().step_index == 2);
  }
  SUBCASE("step then set: the set overrides") {
    LiveSession s(kSr, three_steps(), MappingMode::RussekUnit);
    s.post_step();
    s.post_set(ParamId::DF, 0.3);
    run_blocks(s, 1);
    CHECK(s.params().df == 0.3);
    CHECK(s.snapshot().step_index == 2);
  }
}

TEST_CASE("draining matches a sequential fold") {
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_real_distribution<double> knob(0.25, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    LiveSession s(kSr, three_steps(), MappingMode::RussekUnit);
    Sequencer model(three_steps(), [] {
      Dl4Params p;
      p.mapping_mode = MappingMode::RussekUnit;
      return p;
    }());
    model.advance();
    std::uint64_t ends = 0;
    for (int block = 0; block < 5; ++block) {
      const int n = static_cast<int>(rng() % 6);
      for (int i = 0; i < n; ++i) {
        if (kind(rng) == 0) {
          s.post_step();
          if (!model.advance()) ++ends;
        } else {
          const ParamId id = (rng() % 2) ? ParamId::DF : ParamId::MX;
          const double v = knob(rng);
          s.post_set(id, v);
          model.set(id, v);
        }
      }
      run_blocks(s, 1);
      REQUIRE(s.params() == model.params());
      REQUIRE(s.sequencer().index() == model.index());
    }
    CHECK(s.snapshot().sequence_end_count == ends);
  }
}

TEST_CASE("stepping past the end reports and keeps params") {
  LiveSession s(kSr, three_steps(), MappingMode::RussekUnit);
  s.post_step();
  s.post_step();
  run_blocks(s, 1);
  const auto last = s.params();
  CHECK(s.snapshot().step_index == 3);
  s.post_step();
  run_blocks(s, 1);
  CHECK(s.params() == last);
  CHECK(s.snapshot().sequence_end_count == 1);
}

TEST_CASE("overflow drops the oldest control messages") {
  LiveSession s(kSr, three_steps(), MappingMode::RussekUnit, 4);
  bool all_kept = true;
  for (int i = 0; i < 6; ++i) all_kept &= s.post_set(ParamId::MX, 0.1 * (i + 1));
  CHECK_FALSE(all_kept);
  run_blocks(s, 1);
  CHECK(s.params().mix == doctest::Approx(0.6));
  CHECK(s.lost_messages() == 2);
}

TEST_CASE("loading a new step list keeps the current knobs as the base") {
  LiveSession s(kSr, three_steps(), MappingMode::RussekUnit);
  s.post_set(ParamId::SP, 0.5);
  run_blocks(s, 1);
  s.post_load_steps(parse_step_list("step fresh: DS=128 DF=0.4 RG=0.2 MX=0.7\nstep next: DF=0.5\n"));
  run_blocks(s, 1);
  s.collect_garbage();
  const auto snap = s.snapshot();
  CHECK(snap.step_index == 1);
  CHECK(snap.step_count == 2);
  CHECK(snap.label_view() == "fresh");
  CHECK(snap.params.df == 0.4);
  CHECK(snap.params.lfo_speed == 0.5);
  CHECK(snap.params.base.ms() == 128.0);
  CHECK(snap.params.hp == HighPass::Hz16);

  // A second list posted before the audio side sees the first wins.
  s.post_load_steps(parse_step_list("step a: DS=64 DF=0.3 RG=0 MX=1\n"));
  s.post_load_steps(parse_step_list("step b: DS=64 DF=0.35 RG=0 MX=1\n"));
  run_blocks(s, 1);
  CHECK(s.snapshot().label_view() == "b");
  CHECK(s.params().df == 0.35);
}

TEST_CASE("meters") {
  CHECK(peak_to_db(1.0) == doctest::Approx(0.0));
  CHECK(peak_to_db(0.5) == doctest::Approx(-6.0206).epsilon(1e-4));
  CHECK(peak_to_db(0.0) == kMeterFloorDb);
  CHECK(peak_to_db(100.0) == kMeterCeilingDb);

  PeakMeter m(kSr);
  std::vector<float> block(4800, 0.25f);
  block[10] = -0.5f;
  CHECK(m.feed(block));
  CHECK(m.last_db() == doctest::Approx(-6.0206).epsilon(1e-4));
  CHECK_FALSE(m.feed(std::span(block).first(100)));

  LiveSession s(kSr, three_steps(), MappingMode::RussekUnit);
  run_blocks(s, 80);  // > 100 ms of 0.1 input
  CHECK(s.snapshot().in_db == doctest::Approx(20.0 * std::log10(0.1f)).epsilon(1e-4));
}
