#include <doctest.h>

#include <cmath>
#include <numbers>

#include "duplex/audio_io.hpp"
#include "duplex/wav.hpp"
#include "support/fixtures.hpp"

using namespace duplex;

namespace {

DuplexAudio constant(int rate, std::size_t n, float v) {
  return DuplexAudio(rate, std::vector<float>(n, v), std::vector<float>(n, v));
}

}  // namespace

TEST_CASE("stereo PCM16 round trip") {
  const auto dir = fixtures::temp_dir("audio_rt");
  std::vector<float> l(16000), r(16000);
  for (std::size_t k = 0; k < l.size(); ++k) {
    l[k] = static_cast<float>(std::sin(0.01 * static_cast<double>(k)) * 0.5);
    r[k] = -l[k];
  }
  write_duplex(dir / "a.wav", DuplexAudio(16000, l, r));
  const auto loaded = load_duplex(dir / "a.wav");
  CHECK(loaded.audio.frames() == 16000);
  CHECK(loaded.audio.sample_rate() == 16000);
  CHECK_FALSE(loaded.mono_duplicated);
  for (std::size_t k = 0; k < l.size(); k += 997) CHECK(loaded.audio.left()[k] == doctest::Approx(l[k]).epsilon(1e-4));
}

TEST_CASE("mono file duplicates into both channels") {
  const auto dir = fixtures::temp_dir("audio_mono");
  wav::WavData d{8000, 1, wav::SampleFormat::Pcm16, {0.1f, -0.2f, 0.3f, 0.0f}};
  wav::write_pcm16(dir / "m.wav", d);
  const auto loaded = load_duplex(dir / "m.wav");
  CHECK(loaded.mono_duplicated);
  CHECK(std::equal(loaded.audio.left().begin(), loaded.audio.left().end(), loaded.audio.right().begin()));
}

TEST_CASE("PCM16 -32768 decodes to -1 exactly") {
  CHECK(wav::pcm16_to_float(-32768) == -1.0f);
  CHECK(wav::pcm16_to_float(16384) == 0.5f);
}

TEST_CASE("unreadable and malformed files raise") {
  CHECK_THROWS(load_duplex("/nonexistent/file.wav"));
  CHECK_THROWS(wav::decode({'R', 'I', 'F', 'F', 0, 0}));
}

TEST_CASE("resample") {
  SUBCASE("same rate is the identity") {
    const auto a = fixtures::random_stream(*std::make_unique<std::mt19937_64>(1), 16000, 0.5);
    const auto b = resample(a, 16000);
    CHECK(std::equal(a.left().begin(), a.left().end(), b.left().begin()));
  }
  SUBCASE("DC level is preserved") {
    const auto b = resample(constant(48000, 48000, 0.5f), 16000);
    CHECK(b.frames() == 16000);
    for (std::size_t k = 10; k + 10 < b.frames(); k += 101) CHECK(b.left()[k] == doctest::Approx(0.5).epsilon(1e-6));
  }
  SUBCASE("sine RMS within 1%") {
    std::vector<float> s(48000);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = static_cast<float>(0.8 * std::sin(2 * std::numbers::pi * 440.0 * k / 48000.0));
    for (auto method : {ResampleMethod::Linear, ResampleMethod::WindowedSinc}) {
      const auto b = resample(DuplexAudio(48000, s, s), 16000, method);
      double ss = 0;
      for (std::size_t k = 100; k + 100 < b.frames(); ++k) ss += b.left()[k] * b.left()[k];
      const double rms = std::sqrt(ss / static_cast<double>(b.frames() - 200));
      CHECK(std::abs(rms - 0.8 / std::sqrt(2.0)) / (0.8 / std::sqrt(2.0)) < 0.01);
    }
  }
}

TEST_CASE("chunk grid") {
  auto g = chunk(constant(16000, 160000, 0.0f));
  CHECK(g.n_chunks == 10);
  CHECK(g.boundary(1) == 16000);
  CHECK(chunk(constant(16000, 171200, 0.0f)).n_chunks == 10);
  g = chunk(constant(16000, 8000, 0.0f));
  CHECK(g.n_chunks == 0);
  CHECK(g.short_input);
}

TEST_CASE("causal window arithmetic") {
  const std::size_t T = 100 * 16000;
  auto w = causal_window(T, 16000, 5, 30.0, 0.0);
  CHECK(w.begin == 0);
  CHECK(w.end == 64000);
  w = causal_window(T, 16000, 40, 30.0, 0.0);
  CHECK(w.begin == 144000);
  CHECK(w.end == 624000);
  w = causal_window(T, 16000, 40, 30.0, 5.0);
  CHECK(w.end == 44 * 16000);
  w = causal_window(std::size_t{41 * 16000}, 16000, 40, 30.0, 5.0);
  CHECK(w.end == 41 * 16000);
  CHECK(causal_window(T, 16000, 1, 30.0, 0.0).empty());
  CHECK_THROWS_AS(causal_window(T, 16000, 0, 30.0, 0.0), std::out_of_range);
  CHECK_THROWS_AS(causal_window(T, 16000, 3, -1.0, 0.0), std::invalid_argument);
}
