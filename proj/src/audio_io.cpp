#include "duplex/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "duplex/wav.hpp"

namespace duplex {

DuplexAudio::DuplexAudio(int sample_rate, std::vector<float> left, std::vector<float> right)
    : sample_rate_(sample_rate), left_(std::move(left)), right_(std::move(right)) {
  if (sample_rate_ <= 0) throw AudioError("sample rate must be positive");
  if (left_.size() != right_.size()) throw AudioError("channel lengths differ");
}

double DuplexAudio::duration_s() const {
  return sample_rate_ > 0 ? static_cast<double>(frames()) / sample_rate_ : 0.0;
}

DuplexAudio DuplexAudio::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, frames());
  begin = std::min(begin, end);
  return DuplexAudio(sample_rate_, std::vector<float>(left_.begin() + begin, left_.begin() + end),
                     std::vector<float>(right_.begin() + begin, right_.begin() + end));
}

LoadedAudio load_duplex(const std::filesystem::path& path) {
  const wav::WavData data = wav::read(path);
  if (data.channels != 1 && data.channels != 2) {
    throw AudioError("expected 1 or 2 channels, got " + std::to_string(data.channels));
  }
  const std::size_t n = data.frames();
  if (n == 0) throw AudioError("zero-length audio: " + path.string());

  std::vector<float> left(n), right(n);
  if (data.channels == 1) {
    std::copy(data.interleaved.begin(), data.interleaved.end(), left.begin());
    right = left;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      left[i] = data.interleaved[2 * i];
      right[i] = data.interleaved[2 * i + 1];
    }
  }
  return {DuplexAudio(data.sample_rate, std::move(left), std::move(right)), data.channels == 1};
}

void write_duplex(const std::filesystem::path& path, const DuplexAudio& audio) {
  wav::WavData data;
  data.sample_rate = audio.sample_rate();
  data.channels = 2;
  data.interleaved.resize(audio.frames() * 2);
  for (std::size_t i = 0; i < audio.frames(); ++i) {
    data.interleaved[2 * i] = audio.left()[i];
    data.interleaved[2 * i + 1] = audio.right()[i];
  }
  wav::write_pcm16(path, data);
}

namespace {

std::vector<float> resample_linear(std::span<const float> in, double step, std::size_t out_len) {
  std::vector<float> out(out_len);
  const std::size_t last = in.size() - 1;
  for (std::size_t j = 0; j < out_len; ++j) {
    const double x = static_cast<double>(j) * step;
    const auto i0 = std::min(static_cast<std::size_t>(x), last);
    const std::size_t i1 = std::min(i0 + 1, last);
    const double frac = x - static_cast<double>(i0);
    out[j] = static_cast<float>((1.0 - frac) * in[i0] + frac * in[i1]);
  }
  return out;
}

// Hann-windowed sinc; weights are renormalized per output sample so DC passes exactly.
std::vector<float> resample_sinc(std::span<const float> in, double step, double cutoff,
                                 std::size_t out_len) {
  constexpr double kZeroCrossings = 16.0;
  const double half_width = kZeroCrossings / cutoff;
  std::vector<float> out(out_len);
  const auto n = static_cast<std::ptrdiff_t>(in.size());
  for (std::size_t j = 0; j < out_len; ++j) {
    const double x = static_cast<double>(j) * step;
    const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(x - half_width)));
    const auto hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::floor(x + half_width)));
    double acc = 0.0;
    double norm = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) {
      const double t = x - static_cast<double>(k);
      const double arg = std::numbers::pi * cutoff * t;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      const double window = 0.5 * (1.0 + std::cos(std::numbers::pi * t / half_width));
      const double w = sinc * window;
      acc += w * in[static_cast<std::size_t>(k)];
      norm += w;
    }
    out[j] = static_cast<float>(norm != 0.0 ? acc / norm : 0.0);
  }
  return out;
}

}  // namespace

DuplexAudio resample(const DuplexAudio& audio, int target_rate, ResampleMethod method) {
  if (target_rate <= 0) throw AudioError("target rate must be positive");
  if (target_rate == audio.sample_rate() || audio.empty()) {
    if (audio.empty()) {
      return DuplexAudio(target_rate, {}, {});
    }
    return audio;
  }
  const double ratio = static_cast<double>(target_rate) / audio.sample_rate();
  const auto out_len = static_cast<std::size_t>(std::llround(audio.frames() * ratio));
  const double step = 1.0 / ratio;
  auto run = [&](std::span<const float> ch) {
    if (method == ResampleMethod::Linear) return resample_linear(ch, step, out_len);
    return resample_sinc(ch, step, std::min(1.0, ratio), out_len);
  };
  return DuplexAudio(target_rate, run(audio.left()), run(audio.right()));
}

ChunkGrid chunk(const DuplexAudio& audio) {
  if (audio.sample_rate() <= 0) throw AudioError("audio has no sample rate");
  ChunkGrid grid;
  grid.n_block = static_cast<std::size_t>(audio.sample_rate());
  grid.n_chunks = audio.frames() / grid.n_block;
  grid.short_input = grid.n_chunks == 0;
  return grid;
}

CausalWindow causal_window(std::size_t total_samples, int sample_rate, std::size_t i,
                           double window_s, double lookahead_s) {
  if (sample_rate <= 0) throw AudioError("sample rate must be positive");
  if (!(window_s > 0.0)) throw std::invalid_argument("window must be positive");
  if (!(lookahead_s >= 0.0)) throw AudioError("lookahead must be non-negative");
  const std::size_t n_block = static_cast<std::size_t>(sample_rate);
  const std::size_t n_chunks = total_samples / n_block;
  if (i < 1 || i > n_chunks) {
    throw std::out_of_range("chunk index " + std::to_string(i) + " outside [1, " +
                            std::to_string(n_chunks) + "]");
  }
  const double anchor = static_cast<double>((i - 1) * n_block);
  const double left = anchor - std::round(window_s * sample_rate);
  const double right = anchor + std::round(lookahead_s * sample_rate);

  CausalWindow w;
  w.index = i;
  w.window_s = window_s;
  w.lookahead_s = lookahead_s;
  w.begin = left <= 0.0 ? 0 : static_cast<std::size_t>(left);
  w.end = std::min(total_samples, static_cast<std::size_t>(right));
  return w;
}

CausalWindow causal_window(const DuplexAudio& audio, std::size_t i, double window_s,
                           double lookahead_s) {
  return causal_window(audio.frames(), audio.sample_rate(), i, window_s, lookahead_s);
}

}  // namespace duplex
