#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace duplex::wav {

enum class SampleFormat : std::uint16_t { Pcm16 = 1, Float32 = 3 };

// Decoded RIFF/WAVE payload; samples are interleaved and scaled to [-1, 1].
struct WavData {
  int sample_rate = 0;
  int channels = 0;
  SampleFormat format = SampleFormat::Pcm16;
  std::vector<float> interleaved;

  std::size_t frames() const {
    return channels > 0 ? interleaved.size() / static_cast<std::size_t>(channels) : 0;
  }
};

WavData read(const std::filesystem::path& path);
WavData decode(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_pcm16(const WavData& data);
void write_pcm16(const std::filesystem::path& path, const WavData& data);

// int16 -> float divides by 32768 so that -32768 maps to -1.0 exactly.
inline float pcm16_to_float(std::int16_t v) { return static_cast<float>(v) / 32768.0f; }
std::int16_t float_to_pcm16(float v);

}  // namespace duplex::wav
