#include "dl4/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

namespace dl4 {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

using Kind = WavError::Kind;

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) { pos_ = p; }

  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::string tag() {
    need(4);
    std::string t(reinterpret_cast<const char*>(&bytes_[pos_]), 4);
    pos_ += 4;
    return t;
  }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw WavError(Kind::Truncated, "unexpected end of WAV data");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct Format {
  std::uint16_t codec = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

Format parse_fmt(Reader& r, std::uint32_t size) {
  if (size < 16) throw WavError(Kind::Malformed, "fmt chunk shorter than 16 bytes");
  Format f;
  f.codec = r.u16();
  f.channels = r.u16();
  f.sample_rate = r.u32();
  r.u32();  // byte rate
  f.block_align = r.u16();
  f.bits = r.u16();
  if (f.codec == kFormatExtensible) {
    if (size < 40) throw WavError(Kind::Malformed, "extensible fmt chunk shorter than 40 bytes");
    r.u16();  // cbSize
    r.u16();  // valid bits
    r.u32();  // channel mask
    f.codec = r.u16();  // first two bytes of the subformat GUID
  }
  return f;
}

void check_format(const Format& f) {
  if (f.codec != kFormatPcm && f.codec != kFormatFloat) {
    throw WavError(Kind::UnsupportedCodec, "unsupported WAV codec 0x" + [&] {
      char buf[8];
      std::snprintf(buf, sizeof buf, "%04x", f.codec);
      return std::string(buf);
    }());
  }
  if (f.codec == kFormatPcm && f.bits != 16 && f.bits != 24) {
    throw WavError(Kind::UnsupportedBitDepth,
                   "unsupported PCM bit depth " + std::to_string(f.bits) + " (16 or 24 supported)");
  }
  if (f.codec == kFormatFloat && f.bits != 32) {
    throw WavError(Kind::UnsupportedBitDepth,
                   "unsupported float bit depth " + std::to_string(f.bits) + " (32 supported)");
  }
  if (f.channels < 1 || f.channels > 2) {
    throw WavError(Kind::UnsupportedChannels,
                   "unsupported channel count " + std::to_string(f.channels));
  }
  if (f.sample_rate == 0) throw WavError(Kind::Malformed, "sample rate of zero");
  if (f.block_align != f.channels * (f.bits / 8)) {
    throw WavError(Kind::Malformed, "block align inconsistent with channels and bit depth");
  }
}

float decode_sample(const std::uint8_t* p, const Format& f) {
  switch (f.bits) {
    case 16: {
      const auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
      return static_cast<float>(v / 32768.0);
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<float>(v / 8388608.0);
    }
    default: {
      std::uint32_t bits = p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
      return std::bit_cast<float>(bits);
    }
  }
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::int32_t to_int(float x, int bits) {
  const double scale = std::ldexp(1.0, bits - 1);
  const double v = std::round(static_cast<double>(x) * scale);
  return static_cast<std::int32_t>(std::clamp(v, -scale, scale - 1.0));
}

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (bytes.size() < 12) throw WavError(Kind::Malformed, "file too short for a RIFF header");
  if (r.tag() != "RIFF") throw WavError(Kind::Malformed, "missing RIFF signature");
  r.u32();
  if (r.tag() != "WAVE") throw WavError(Kind::Malformed, "missing WAVE form type");

  std::optional<Format> fmt;
  while (r.remaining() >= 8) {
    const auto id = r.tag();
    const auto size = r.u32();
    const std::size_t body = r.pos();
    if (id == "fmt ") {
      if (size > r.remaining()) throw WavError(Kind::Truncated, "fmt chunk runs past end of file");
      fmt = parse_fmt(r, size);
      check_format(*fmt);
    } else if (id == "data") {
      if (!fmt) throw WavError(Kind::Malformed, "data chunk before fmt chunk");
      if (size > r.remaining()) throw WavError(Kind::Truncated, "data chunk runs past end of file");
      if (size % fmt->block_align != 0) {
        throw WavError(Kind::Truncated, "data chunk ends inside a sample frame");
      }
      const std::size_t frames = size / fmt->block_align;
      const std::size_t width = fmt->bits / 8;
      AudioBuffer out;
      out.sample_rate = fmt->sample_rate;
      out.channels.assign(fmt->channels, std::vector<float>(frames));
      const std::uint8_t* p = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < fmt->channels; ++c, p += width) {
          out.channels[c][i] = decode_sample(p, *fmt);
        }
      }
      return out;
    }
    const std::size_t next = body + size + (size & 1u);
    if (next > bytes.size()) {
      throw WavError(Kind::Truncated, "'" + id + "' chunk runs past end of file");
    }
    r.seek(next);
  }
  throw WavError(Kind::Malformed, fmt ? "no data chunk" : "no fmt chunk");
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buffer, SampleFormat format) {
  const auto channels = buffer.channel_count();
  if (channels < 1 || channels > 2) {
    throw WavError(Kind::UnsupportedChannels, "can only write 1 or 2 channels");
  }
  for (const auto& ch : buffer.channels) {
    if (ch.size() != buffer.frames()) throw DomainError("channels differ in length");
  }
  if (!(buffer.sample_rate > 0.0) || buffer.sample_rate != std::floor(buffer.sample_rate)) {
    throw DomainError("WAV sample rate must be a positive integer");
  }

  const int bits = format == SampleFormat::Pcm16 ? 16 : format == SampleFormat::Pcm24 ? 24 : 32;
  const auto width = static_cast<std::uint32_t>(bits / 8);
  const auto block_align = static_cast<std::uint16_t>(width * channels);
  const auto rate = static_cast<std::uint32_t>(buffer.sample_rate);
  const auto data_size = static_cast<std::uint32_t>(buffer.frames() * block_align);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size + 1);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_size + (data_size & 1u));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == SampleFormat::Float32 ? kFormatFloat : kFormatPcm);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, rate);
  put_u32(out, rate * block_align);
  put_u16(out, block_align);
  put_u16(out, static_cast<std::uint16_t>(bits));
  put_tag(out, "data");
  put_u32(out, data_size);

  for (std::size_t i = 0; i < buffer.frames(); ++i) {
    for (const auto& ch : buffer.channels) {
      const float x = ch[i];
      switch (format) {
        case SampleFormat::Pcm16:
          put_u16(out, static_cast<std::uint16_t>(to_int(x, 16)));
          break;
        case SampleFormat::Pcm24: {
          const auto v = static_cast<std::uint32_t>(to_int(x, 24));
          out.push_back(static_cast<std::uint8_t>(v));
          out.push_back(static_cast<std::uint8_t>(v >> 8));
          out.push_back(static_cast<std::uint8_t>(v >> 16));
          break;
        }
        case SampleFormat::Float32:
          put_u32(out, std::bit_cast<std::uint32_t>(x));
          break;
      }
    }
  }
  if (data_size & 1u) out.push_back(0);
  return out;
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return decode_wav(bytes);
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buffer, SampleFormat format) {
  const auto bytes = encode_wav(buffer, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

AudioBuffer extract_channel(const AudioBuffer& buffer, std::size_t index) {
  if (index >= buffer.channel_count()) {
    throw DomainError("channel " + std::to_string(index) + " out of range for a " +
                      std::to_string(buffer.channel_count()) + "-channel buffer");
  }
  return AudioBuffer::mono(buffer.channels[index], buffer.sample_rate);
}

}  // namespace dl4
