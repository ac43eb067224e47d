#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace duplex {

class AudioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two synchronized mono channels at a common sample rate. Immutable once built.
class DuplexAudio {
 public:
  DuplexAudio() = default;
  DuplexAudio(int sample_rate, std::vector<float> left, std::vector<float> right);

  int sample_rate() const { return sample_rate_; }
  std::size_t frames() const { return left_.size(); }
  bool empty() const { return left_.empty(); }
  double duration_s() const;

  std::span<const float> left() const { return left_; }
  std::span<const float> right() const { return right_; }
  std::span<const float> channel(int c) const { return c == 0 ? left() : right(); }

  // Copy of samples [begin, end), clamped to the stream.
  DuplexAudio slice(std::size_t begin, std::size_t end) const;

 private:
  int sample_rate_ = 0;
  std::vector<float> left_;
  std::vector<float> right_;
};

struct LoadedAudio {
  DuplexAudio audio;
  bool mono_duplicated = false;
};

LoadedAudio load_duplex(const std::filesystem::path& path);

// Always writes 2-channel PCM16 at the audio's sample rate.
void write_duplex(const std::filesystem::path& path, const DuplexAudio& audio);

enum class ResampleMethod { Linear, WindowedSinc };

DuplexAudio resample(const DuplexAudio& audio, int target_rate,
                     ResampleMethod method = ResampleMethod::Linear);

// 1-second tiling of the stream; a trailing partial second is dropped.
struct ChunkGrid {
  std::size_t n_block = 0;
  std::size_t n_chunks = 0;
  bool short_input = false;

  // B_i = i * n_block, for 0 <= i <= n_chunks.
  std::size_t boundary(std::size_t i) const { return i * n_block; }
};

ChunkGrid chunk(const DuplexAudio& audio);

// Samples visible when emitting chunk i (1-based):
// [max(0, B_{i-1} - W*rate), min(T, B_{i-1} + L*rate)).
struct CausalWindow {
  std::size_t index = 0;
  double window_s = 0.0;
  double lookahead_s = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return end == begin; }
};

CausalWindow causal_window(const DuplexAudio& audio, std::size_t i, double window_s,
                           double lookahead_s);

// Same arithmetic without an audio object, for grids described only by size.
CausalWindow causal_window(std::size_t total_samples, int sample_rate, std::size_t i,
                           double window_s, double lookahead_s);

}  // namespace duplex
