#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "duplex/audio_io.hpp"

namespace duplex {

// Per-channel frame-level voice activity; 1 = voiced.
struct VadMask {
  double frame_ms = 20.0;
  std::vector<std::uint8_t> left;
  std::vector<std::uint8_t> right;

  std::size_t frames() const { return left.size(); }
  double total_ms() const { return static_cast<double>(frames()) * frame_ms; }
  const std::vector<std::uint8_t>& channel(int c) const { return c == 0 ? left : right; }
};

struct VadResult {
  VadMask mask;
  std::array<bool, 2> silent_channel{false, false};
};

// A frame is voiced iff its RMS exceeds threshold * (95th-percentile frame RMS
// of that channel). Channels are processed independently.
VadResult compute_vad(const DuplexAudio& audio, double frame_ms = 20.0,
                      double energy_threshold = 0.1);

struct VadLoadResult {
  VadMask mask;
  std::vector<std::string> warnings;
};

// JSONL, one record per channel: {"channel": "left"|"right"|0|1, "frame_ms": 20, "frames": [0,1,...]}.
VadLoadResult load_vad_mask(const std::filesystem::path& path);
VadLoadResult parse_vad_mask(std::string_view jsonl);
std::string format_vad_mask(const VadMask& mask);

enum class EventKind { IPU, Pause, Gap, Overlap };
enum class Channel { Left, Right, Both };

std::string_view to_string(EventKind kind);
std::string_view to_string(Channel channel);

struct TurnEvent {
  EventKind kind = EventKind::IPU;
  Channel channel = Channel::Left;
  double start_ms = 0.0;
  double end_ms = 0.0;

  double duration_ms() const { return end_ms - start_ms; }
  friend bool operator==(const TurnEvent&, const TurnEvent&) = default;
};

// Maximal voiced stretches of one channel, merged across silences of at most
// min_silence_ms.
std::vector<TurnEvent> segment_ipus(const VadMask& mask, int channel, double min_silence_ms = 200.0);
// Both channels, left first.
std::vector<TurnEvent> segment_ipus(const VadMask& mask, double min_silence_ms = 200.0);

// Pause / Gap / Overlap events from per-channel IPU lists, plus the IPUs
// themselves; sorted by (start, kind, channel).
std::vector<TurnEvent> classify_events(std::span<const TurnEvent> ipus_left,
                                       std::span<const TurnEvent> ipus_right, double total_ms);

// segment_ipus + classify_events.
std::vector<TurnEvent> detect_events(const VadMask& mask, double min_silence_ms = 200.0);

struct KindStats {
  std::size_t count = 0;
  double duration_ms = 0.0;
  double count_per_minute = 0.0;
  double cumulative_pct = 0.0;
};

struct CorpusStats {
  std::array<KindStats, 4> kinds{};
  double total_duration_s = 0.0;

  const KindStats& operator[](EventKind k) const { return kinds[static_cast<std::size_t>(k)]; }
  KindStats& operator[](EventKind k) { return kinds[static_cast<std::size_t>(k)]; }
};

CorpusStats corpus_stats(std::span<const TurnEvent> events, double total_ms);

// Duration-weighted reduction; equals corpus_stats over the concatenated corpus.
CorpusStats merge_stats(std::span<const CorpusStats> parts);

// Published reference rows (events/min, cumulative %) in IPU, Pause, Gap, Overlap order.
struct ReferenceRow {
  std::string_view name;
  std::array<double, 4> per_minute;
  std::array<double, 4> cumulative_pct;
};

inline constexpr std::array<ReferenceRow, 4> kTurnTakingReference{{
    {"Simulation", {23.06, 10.7, 7.3, 6.7}, {84.7, 9.6, 1.6, 4.2}},
    {"Human", {15.7, 3.8, 5.5, 6.6}, {97.3, 5.7, 3.7, 6.7}},
    {"dGSLM", {24.2, 5.4, 7.2, 10.9}, {99.0, 6.0, 4.8, 9.7}},
    {"Moshi", {21.6, 10.2, 6.7, 4.8}, {81.0, 10.3, 11.8, 3.1}},
}};

std::string stats_to_json(const CorpusStats& stats, bool include_reference = true);
std::string stats_to_table(const CorpusStats& stats);
std::string events_to_jsonl(std::span<const TurnEvent> events);

}  // namespace duplex
