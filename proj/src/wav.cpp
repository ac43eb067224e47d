#include "duplex/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "duplex/audio_io.hpp"

namespace duplex::wav {
namespace {

constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

std::int16_t float_to_pcm16(float v) {
  const double scaled = std::round(static_cast<double>(v) * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

WavData decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw AudioError("not a RIFF/WAVE file");
  }

  WavData out;
  bool have_fmt = false;
  std::uint16_t format_tag = 0;
  std::uint16_t bits = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* header = bytes.data() + pos;
    const std::size_t size = read_u32(header + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min(size, bytes.size() - body);
    if (std::memcmp(header, "fmt ", 4) == 0) {
      if (available < 16) throw AudioError("truncated fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      format_tag = read_u16(f);
      out.channels = read_u16(f + 2);
      out.sample_rate = static_cast<int>(read_u32(f + 4));
      bits = read_u16(f + 14);
      if (format_tag == kFormatExtensible) {
        if (available < 26) throw AudioError("truncated extensible fmt chunk");
        format_tag = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(header, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
    }
    pos = body + size + (size & 1U);
  }

  if (!have_fmt) throw AudioError("missing fmt chunk");
  if (data == nullptr) throw AudioError("missing data chunk");
  if (out.channels <= 0) throw AudioError("invalid channel count");
  if (out.sample_rate <= 0) throw AudioError("invalid sample rate");

  if (format_tag == 1 && bits == 16) {
    out.format = SampleFormat::Pcm16;
    const std::size_t n = data_size / 2;
    out.interleaved.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.interleaved[i] = pcm16_to_float(static_cast<std::int16_t>(read_u16(data + 2 * i)));
    }
  } else if (format_tag == 3 && bits == 32) {
    out.format = SampleFormat::Float32;
    const std::size_t n = data_size / 4;
    out.interleaved.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t raw = read_u32(data + 4 * i);
      float v;
      std::memcpy(&v, &raw, sizeof v);
      out.interleaved[i] = v;
    }
  } else {
    throw AudioError("unsupported encoding: format " + std::to_string(format_tag) + ", " +
                     std::to_string(bits) + " bits");
  }
  out.interleaved.resize(out.frames() * static_cast<std::size_t>(out.channels));
  return out;
}

WavData read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw AudioError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode(bytes);
}

std::vector<std::uint8_t> encode_pcm16(const WavData& data) {
  const auto channels = static_cast<std::uint16_t>(data.channels);
  const auto data_bytes = static_cast<std::uint32_t>(data.interleaved.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(data.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(data.sample_rate) * channels * 2);
  put_u16(out, static_cast<std::uint16_t>(channels * 2));
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (float v : data.interleaved) {
    put_u16(out, static_cast<std::uint16_t>(float_to_pcm16(v)));
  }
  return out;
}

void write_pcm16(const std::filesystem::path& path, const WavData& data) {
  const auto bytes = encode_pcm16(data);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AudioError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

}  // namespace duplex::wav
