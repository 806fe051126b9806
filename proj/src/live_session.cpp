#include "dl4/live_session.hpp"

#include <algorithm>
#include <cmath>

namespace dl4 {

PeakMeter::PeakMeter(double sample_rate)
    : window_(static_cast<std::size_t>(std::llround(kMeterWindowMs * sample_rate / 1000.0))) {}

bool PeakMeter::feed(std::span<const float> block) noexcept {
  bool completed = false;
  for (float x : block) {
    peak_ = std::max(peak_, static_cast<double>(std::abs(x)));
    if (++count_ == window_) {
      last_db_ = peak_to_db(peak_);
      peak_ = 0.0;
      count_ = 0;
      completed = true;
    }
  }
  return completed;
}

double peak_to_db(double peak) noexcept {
  if (!(peak > 0.0)) return kMeterFloorDb;
  return std::clamp(20.0 * std::log10(peak), kMeterFloorDb, kMeterCeilingDb);
}

LiveSession::LiveSession(double sample_rate, StepList steps, MappingMode mapping,
                         std::size_t queue_capacity)
    : queue_(queue_capacity),
      sequencer_(std::make_unique<Sequencer>(std::move(steps), [&] {
        Dl4Params p;
        p.mapping_mode = mapping;
        return p;
      }())),
      engine_(sample_rate),
      in_meter_(sample_rate),
      out_meter_(sample_rate) {
  sequencer_->advance();
  engine_ = Engine(sample_rate, sequencer_->params());
  snapshot_.sample_rate = sample_rate;
  publish();
}

LiveSession::~LiveSession() {
  delete incoming_.exchange(nullptr);
  collect_garbage();
}

bool LiveSession::post_set(ParamId id, double value) noexcept {
  return queue_.push({ControlMessage::Type::Set, id, value});
}

bool LiveSession::post_step() noexcept { return queue_.push({ControlMessage::Type::Step}); }

bool LiveSession::post_load_steps(StepList list) {
  auto next = std::make_unique<Sequencer>(std::move(list));
  // A list that was posted but never picked up is superseded.
  delete incoming_.exchange(next.release(), std::memory_order_acq_rel);
  return queue_.push({ControlMessage::Type::LoadSteps});
}

void LiveSession::collect_garbage() {
  Sequencer* s = nullptr;
  while (retired_.pop(s)) delete s;
}

StateSnapshot LiveSession::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void LiveSession::apply_pending() noexcept {
  bool changed = false;
  queue_.drain([&](const ControlMessage& m) {
    switch (m.type) {
      case ControlMessage::Type::Set:
        sequencer_->set(m.param, m.value);
        changed = true;
        break;
      case ControlMessage::Type::Step:
        if (sequencer_->advance()) {
          changed = true;
        } else {
          ++sequence_end_count_;
          publish_pending_ = true;
        }
        break;
      case ControlMessage::Type::LoadSteps:
        if (Sequencer* next = incoming_.exchange(nullptr, std::memory_order_acq_rel)) {
          next->restart(sequencer_->params());
          next->advance();
          Sequencer* old = sequencer_.release();
          sequencer_.reset(next);
          // The retired ring only fills if the network thread stops
          // collecting; freeing here is the fallback.
          if (!retired_.push(old)) delete old;
          changed = true;
        }
        break;
    }
  });
  if (changed) {
    ++state_version_;
    publish_pending_ = true;
    engine_.set_params(sequencer_->params());
  }
}

void LiveSession::process_block(std::span<const float> in, std::span<float> out) {
  apply_pending();
  engine_.process(in, out);
  blocks_.fetch_add(1, std::memory_order_relaxed);
  const bool in_done = in_meter_.feed(in);
  const bool out_done = out_meter_.feed(out);
  if (in_done || out_done) publish_pending_ = true;
  if (publish_pending_) publish();
}

void LiveSession::publish() noexcept {
  std::unique_lock lock(snapshot_mutex_, std::try_to_lock);
  if (!lock) return;  // reader busy; retry next block
  snapshot_.params = sequencer_->params();
  const auto index = sequencer_->index();
  snapshot_.step_index = index ? *index + 1 : 0;
  snapshot_.step_count = sequencer_->list().steps.size();
  const auto label = sequencer_->label();
  const auto n = std::min(label.size(), snapshot_.label.size() - 1);
  std::copy_n(label.data(), n, snapshot_.label.data());
  snapshot_.label[n] = '\0';
  snapshot_.in_db = in_meter_.last_db();
  snapshot_.out_db = out_meter_.last_db();
  snapshot_.sample_rate = engine_.sample_rate();
  snapshot_.state_version = state_version_;
  snapshot_.blocks = blocks_.load(std::memory_order_relaxed);
  snapshot_.sequence_end_count = sequence_end_count_;
  publish_pending_ = false;
}

}  // namespace dl4
