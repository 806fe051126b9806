#pragma once

// Audio-side state of a live performance: engine, sequencer, meters.
//
// Threading: one producer thread (network) calls the post_* / snapshot /
// collect_garbage members; one audio thread calls process_block(). They
// share only the control queue, the step-list handoff slot, the retired
// list and the snapshot mailbox. Nothing the audio thread calls waits or
// allocates.

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>

#include <boost/lockfree/spsc_queue.hpp>

#include "dl4/control_queue.hpp"
#include "dl4/engine.hpp"
#include "dl4/sequencer.hpp"

namespace dl4 {

inline constexpr double kMeterWindowMs = 100.0;
inline constexpr double kMeterFloorDb = -120.0;
inline constexpr double kMeterCeilingDb = 6.0;

// Peak level over consecutive 100 ms windows.
class PeakMeter {
 public:
  explicit PeakMeter(double sample_rate);
  // Returns true when a window completed during this block.
  bool feed(std::span<const float> block) noexcept;
  double last_db() const noexcept { return last_db_; }

 private:
  std::size_t window_;
  std::size_t count_ = 0;
  double peak_ = 0.0;
  double last_db_ = kMeterFloorDb;
};

double peak_to_db(double peak) noexcept;

struct StateSnapshot {
  Dl4Params params;
  std::size_t step_index = 0;  // 1-based; 0 before the first step
  std::size_t step_count = 0;
  std::array<char, 64> label{};
  double in_db = kMeterFloorDb;
  double out_db = kMeterFloorDb;
  double sample_rate = 0.0;
  std::uint64_t state_version = 0;  // bumps on any parameter or step change
  std::uint64_t blocks = 0;
  std::uint64_t sequence_end_count = 0;

  std::string_view label_view() const noexcept { return label.data(); }
};

class LiveSession {
 public:
  LiveSession(double sample_rate, StepList steps, MappingMode mapping,
              std::size_t queue_capacity = 256);
  ~LiveSession();

  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  // ---- producer (network) side. Values must already be validated.
  // Each returns false when the queue dropped its oldest message.
  bool post_set(ParamId id, double value) noexcept;
  bool post_step() noexcept;
  bool post_load_steps(StepList list);
  StateSnapshot snapshot() const;
  // Frees sequencers retired by the audio thread.
  void collect_garbage();
  std::uint64_t lost_messages() const noexcept { return queue_.lost(); }

  // ---- audio side.
  // Drains the queue in arrival order (last writer wins per parameter) and
  // pushes the result into the engine. Called once per block.
  void apply_pending() noexcept;
  // apply_pending(), process, meter, publish.
  void process_block(std::span<const float> in, std::span<float> out);

  const Dl4Params& params() const noexcept { return sequencer_->params(); }
  const Sequencer& sequencer() const noexcept { return *sequencer_; }
  const Engine& engine() const noexcept { return engine_; }
  // Safe to read from any thread.
  std::uint64_t blocks_processed() const noexcept { return blocks_.load(std::memory_order_relaxed); }

 private:
  void publish() noexcept;

  ControlQueue queue_;
  std::atomic<Sequencer*> incoming_{nullptr};
  boost::lockfree::spsc_queue<Sequencer*, boost::lockfree::capacity<32>> retired_;

  // audio-owned
  std::unique_ptr<Sequencer> sequencer_;
  Engine engine_;
  PeakMeter in_meter_;
  PeakMeter out_meter_;
  std::uint64_t state_version_ = 0;
  std::atomic<std::uint64_t> blocks_{0};
  std::uint64_t sequence_end_count_ = 0;
  bool publish_pending_ = true;

  mutable std::mutex snapshot_mutex_;
  StateSnapshot snapshot_;
};

}  // namespace dl4
