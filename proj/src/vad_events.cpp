#include "duplex/vad_events.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "duplex/jsonl.hpp"

namespace duplex {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::IPU: return "IPU";
    case EventKind::Pause: return "Pause";
    case EventKind::Gap: return "Gap";
    case EventKind::Overlap: return "Overlap";
  }
  return "?";
}

std::string_view to_string(Channel channel) {
  switch (channel) {
    case Channel::Left: return "left";
    case Channel::Right: return "right";
    case Channel::Both: return "both";
  }
  return "?";
}

namespace {

constexpr double kSilentLevel = 1e-9;

std::vector<std::uint8_t> channel_vad(std::span<const float> x, std::size_t frame_len,
                                      double threshold, bool& silent) {
  const std::size_t n = x.size() / frame_len;
  std::vector<double> rms(n);
  for (std::size_t f = 0; f < n; ++f) {
    double acc = 0.0;
    for (std::size_t k = 0; k < frame_len; ++k) {
      const double v = x[f * frame_len + k];
      acc += v * v;
    }
    rms[f] = std::sqrt(acc / static_cast<double>(frame_len));
  }
  std::vector<std::uint8_t> mask(n, 0);
  if (n == 0) {
    silent = true;
    return mask;
  }
  // nearest-rank 95th percentile
  std::vector<double> sorted = rms;
  const std::size_t rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n))) - 1;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank), sorted.end());
  const double p95 = sorted[rank];
  silent = p95 <= kSilentLevel;
  if (silent) return mask;
  const double level = threshold * p95;
  for (std::size_t f = 0; f < n; ++f) mask[f] = rms[f] > level ? 1 : 0;
  return mask;
}

}  // namespace

VadResult compute_vad(const DuplexAudio& audio, double frame_ms, double energy_threshold) {
  if (!(frame_ms >= 10.0 && frame_ms <= 50.0)) {
    throw std::invalid_argument("frame_ms must lie in [10, 50]");
  }
  if (!(energy_threshold > 0.0 && energy_threshold < 1.0)) {
    throw std::invalid_argument("energy threshold must lie in (0, 1)");
  }
  const auto frame_len =
      static_cast<std::size_t>(std::llround(frame_ms * audio.sample_rate() / 1000.0));
  if (frame_len == 0) throw std::invalid_argument("frame shorter than one sample");

  VadResult out;
  out.mask.frame_ms = frame_ms;
  out.mask.left = channel_vad(audio.left(), frame_len, energy_threshold, out.silent_channel[0]);
  out.mask.right = channel_vad(audio.right(), frame_len, energy_threshold, out.silent_channel[1]);
  return out;
}

VadLoadResult parse_vad_mask(std::string_view jsonl) {
  const auto records = parse_jsonl(jsonl);
  std::array<std::vector<std::uint8_t>, 2> frames;
  std::array<double, 2> frame_ms{0.0, 0.0};
  std::array<bool, 2> seen{false, false};

  for (const auto& r : records) {
    const json& ch = require(r, "channel");
    int c = -1;
    if (ch.is_string()) {
      const auto s = ch.get<std::string>();
      if (s == "left" || s == "L") c = 0;
      if (s == "right" || s == "R") c = 1;
    } else if (ch.is_number_integer()) {
      c = ch.get<int>();
    }
    if (c != 0 && c != 1) throw FormatError("unknown channel " + ch.dump());
    if (seen[c]) throw FormatError("duplicate record for channel " + ch.dump());
    seen[c] = true;

    const json& fm = require(r, "frame_ms");
    if (!fm.is_number() || !(fm.get<double>() > 0.0)) throw FormatError("frame_ms must be positive");
    frame_ms[c] = fm.get<double>();

    const json& fr = require(r, "frames");
    if (!fr.is_array()) throw FormatError("frames must be an array");
    frames[c].reserve(fr.size());
    for (const auto& v : fr) {
      if (v.is_boolean()) {
        frames[c].push_back(v.get<bool>() ? 1 : 0);
      } else if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) {
        frames[c].push_back(static_cast<std::uint8_t>(v.get<int>()));
      } else {
        throw FormatError("frame values must be 0/1");
      }
    }
  }
  if (!seen[0] || !seen[1]) throw FormatError("mask needs one record per channel");
  if (frame_ms[0] != frame_ms[1]) throw FormatError("frame_ms differs between channels");

  VadLoadResult out;
  out.mask.frame_ms = frame_ms[0];
  const std::size_t n = std::min(frames[0].size(), frames[1].size());
  if (frames[0].size() != frames[1].size()) {
    out.warnings.push_back("channel lengths " + std::to_string(frames[0].size()) + " vs " +
                           std::to_string(frames[1].size()) + "; truncated to " +
                           std::to_string(n));
  }
  frames[0].resize(n);
  frames[1].resize(n);
  out.mask.left = std::move(frames[0]);
  out.mask.right = std::move(frames[1]);
  return out;
}

VadLoadResult load_vad_mask(const std::filesystem::path& path) {
  return parse_vad_mask(read_text(path));
}

std::string format_vad_mask(const VadMask& mask) {
  std::string out;
  for (int c = 0; c < 2; ++c) {
    json r{{"channel", c == 0 ? "left" : "right"}, {"frame_ms", mask.frame_ms}};
    json fr = json::array();
    for (auto v : mask.channel(c)) fr.push_back(static_cast<int>(v));
    r["frames"] = std::move(fr);
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::vector<TurnEvent> segment_ipus(const VadMask& mask, int channel, double min_silence_ms) {
  if (!(min_silence_ms > 0.0)) throw std::invalid_argument("min_silence_ms must be positive");
  if (mask.left.size() != mask.right.size()) throw std::invalid_argument("mask channels differ in length");
  const auto& frames = mask.channel(channel);
  const Channel ch = channel == 0 ? Channel::Left : Channel::Right;

  std::vector<TurnEvent> ipus;
  std::size_t f = 0;
  const std::size_t n = frames.size();
  while (f < n) {
    if (!frames[f]) {
      ++f;
      continue;
    }
    std::size_t end = f;
    while (end < n && frames[end]) ++end;
    const double start_ms = static_cast<double>(f) * mask.frame_ms;
    const double end_ms = static_cast<double>(end) * mask.frame_ms;
    const double silence_ms = ipus.empty() ? 0.0 : start_ms - ipus.back().end_ms;
    if (!ipus.empty() && silence_ms <= min_silence_ms) {
      ipus.back().end_ms = end_ms;
    } else {
      ipus.push_back({EventKind::IPU, ch, start_ms, end_ms});
    }
    f = end;
  }
  return ipus;
}

std::vector<TurnEvent> segment_ipus(const VadMask& mask, double min_silence_ms) {
  auto out = segment_ipus(mask, 0, min_silence_ms);
  auto right = segment_ipus(mask, 1, min_silence_ms);
  out.insert(out.end(), right.begin(), right.end());
  return out;
}

namespace {

bool event_less(const TurnEvent& a, const TurnEvent& b) {
  return std::tie(a.start_ms, a.kind, a.channel, a.end_ms) <
         std::tie(b.start_ms, b.kind, b.channel, b.end_ms);
}

}  // namespace

std::vector<TurnEvent> classify_events(std::span<const TurnEvent> ipus_left,
                                       std::span<const TurnEvent> ipus_right, double total_ms) {
  std::vector<TurnEvent> out;
  out.insert(out.end(), ipus_left.begin(), ipus_left.end());
  out.insert(out.end(), ipus_right.begin(), ipus_right.end());
  for (auto& e : out) {
    if (e.end_ms > total_ms) throw std::invalid_argument("IPU extends past total duration");
  }

  // Overlaps: pairwise intersections, touching pieces joined.
  std::vector<TurnEvent> overlaps;
  std::size_t i = 0, j = 0;
  while (i < ipus_left.size() && j < ipus_right.size()) {
    const auto& a = ipus_left[i];
    const auto& b = ipus_right[j];
    const double lo = std::max(a.start_ms, b.start_ms);
    const double hi = std::min(a.end_ms, b.end_ms);
    if (lo < hi) {
      if (!overlaps.empty() && overlaps.back().end_ms == lo) {
        overlaps.back().end_ms = hi;
      } else {
        overlaps.push_back({EventKind::Overlap, Channel::Both, lo, hi});
      }
    }
    if (a.end_ms < b.end_ms) ++i; else ++j;
  }

  // Silences between consecutive stretches of the IPU union.
  struct Edge {
    double start, end;
    int channel;
  };
  std::vector<Edge> all;
  for (const auto& e : ipus_left) all.push_back({e.start_ms, e.end_ms, 0});
  for (const auto& e : ipus_right) all.push_back({e.start_ms, e.end_ms, 1});
  std::sort(all.begin(), all.end(), [](const Edge& a, const Edge& b) { return a.start < b.start; });

  auto speakers_ending_at = [&](double t) {
    unsigned bits = 0;
    for (const auto& e : all) if (e.end == t) bits |= 1U << e.channel;
    return bits;
  };
  auto speakers_starting_at = [&](double t) {
    unsigned bits = 0;
    for (const auto& e : all) if (e.start == t) bits |= 1U << e.channel;
    return bits;
  };

  double union_end = -1.0;
  bool have_union = false;
  for (const auto& e : all) {
    if (have_union && e.start > union_end) {
      const unsigned prev = speakers_ending_at(union_end);
      const unsigned next = speakers_starting_at(e.start);
      const bool same = (prev == 1U || prev == 2U) && prev == next;
      out.push_back({same ? EventKind::Pause : EventKind::Gap,
                     same ? (prev == 1U ? Channel::Left : Channel::Right) : Channel::Both,
                     union_end, e.start});
    }
    union_end = have_union ? std::max(union_end, e.end) : e.end;
    have_union = true;
  }

  out.insert(out.end(), overlaps.begin(), overlaps.end());
  std::sort(out.begin(), out.end(), event_less);
  return out;
}

std::vector<TurnEvent> detect_events(const VadMask& mask, double min_silence_ms) {
  const auto left = segment_ipus(mask, 0, min_silence_ms);
  const auto right = segment_ipus(mask, 1, min_silence_ms);
  return classify_events(left, right, mask.total_ms());
}

namespace {

void finalize(CorpusStats& s) {
  const double total_ms = s.total_duration_s * 1000.0;
  for (auto& k : s.kinds) {
    k.count_per_minute = total_ms > 0 ? 60000.0 * static_cast<double>(k.count) / total_ms : 0.0;
    k.cumulative_pct = total_ms > 0 ? 100.0 * k.duration_ms / total_ms : 0.0;
  }
}

}  // namespace

CorpusStats corpus_stats(std::span<const TurnEvent> events, double total_ms) {
  if (!(total_ms > 0.0)) throw std::invalid_argument("total_ms must be positive");
  CorpusStats s;
  s.total_duration_s = total_ms / 1000.0;
  for (const auto& e : events) {
    auto& k = s[e.kind];
    ++k.count;
    k.duration_ms += e.duration_ms();
  }
  finalize(s);
  return s;
}

CorpusStats merge_stats(std::span<const CorpusStats> parts) {
  CorpusStats s;
  for (const auto& p : parts) {
    s.total_duration_s += p.total_duration_s;
    for (std::size_t k = 0; k < 4; ++k) {
      s.kinds[k].count += p.kinds[k].count;
      s.kinds[k].duration_ms += p.kinds[k].duration_ms;
    }
  }
  finalize(s);
  return s;
}

std::string stats_to_json(const CorpusStats& stats, bool include_reference) {
  json rows = json::array();
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& ks = stats.kinds[k];
    rows.push_back({{"event", to_string(static_cast<EventKind>(k))},
                    {"count", ks.count},
                    {"duration_s", ks.duration_ms / 1000.0},
                    {"per_minute", ks.count_per_minute},
                    {"cumulative_pct", ks.cumulative_pct}});
  }
  json out{{"total_duration_s", stats.total_duration_s}, {"rows", rows}};
  if (include_reference) {
    json ref = json::object();
    for (const auto& row : kTurnTakingReference) {
      json r = json::array();
      for (std::size_t k = 0; k < 4; ++k) {
        r.push_back({{"event", to_string(static_cast<EventKind>(k))},
                     {"per_minute", row.per_minute[k]},
                     {"cumulative_pct", row.cumulative_pct[k]}});
      }
      ref[std::string(row.name)] = r;
    }
    out["reference"] = ref;
  }
  return out.dump(2);
}

std::string stats_to_table(const CorpusStats& stats) {
  const auto& sim = kTurnTakingReference[0];
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-10s %8s %10s %12s   %10s %12s\n", "Event", "Count", "Per-min",
                "Cumul.(%)", "Sim/min", "Sim cumul.");
  os << buf;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& ks = stats.kinds[k];
    std::snprintf(buf, sizeof buf, "%-10s %8zu %10.2f %12.2f   %10.2f %12.1f\n",
                  std::string(to_string(static_cast<EventKind>(k))).c_str(), ks.count,
                  ks.count_per_minute, ks.cumulative_pct, sim.per_minute[k], sim.cumulative_pct[k]);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "total duration: %.2f s\n", stats.total_duration_s);
  os << buf;
  return os.str();
}

std::string events_to_jsonl(std::span<const TurnEvent> events) {
  std::string out;
  for (const auto& e : events) {
    out += json{{"kind", to_string(e.kind)},
                {"channel", to_string(e.channel)},
                {"start_ms", e.start_ms},
                {"end_ms", e.end_ms}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace duplex
