#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dl4/errors.hpp"

namespace dl4 {

// Non-interleaved sample storage. Every channel has the same length.
struct AudioBuffer {
  std::vector<std::vector<float>> channels;
  double sample_rate = 48000.0;

  static AudioBuffer mono(std::vector<float> samples, double sample_rate) {
    AudioBuffer b;
    b.channels.push_back(std::move(samples));
    b.sample_rate = sample_rate;
    return b;
  }

  std::size_t channel_count() const noexcept { return channels.size(); }
  std::size_t frames() const noexcept { return channels.empty() ? 0 : channels.front().size(); }
  bool is_mono() const noexcept { return channels.size() == 1; }
  std::span<const float> mono_view() const { return channels.at(0); }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;
};

enum class SampleFormat { Pcm16, Pcm24, Float32 };

class WavError : public IoError {
 public:
  enum class Kind { UnsupportedCodec, UnsupportedBitDepth, UnsupportedChannels, Truncated, Malformed };
  WavError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// RIFF/WAVE, little endian. PCM 16/24-bit or IEEE float 32-bit, 1-2 channels.
// Integer samples are normalized by 2^(bits-1).
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer, SampleFormat format);

AudioBuffer read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer, SampleFormat format);

// Throws DomainError when index >= channel count.
AudioBuffer extract_channel(const AudioBuffer& buffer, std::size_t index);

}  // namespace dl4
