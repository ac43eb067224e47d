#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cli/commands.hpp"
#include "duplex/jsonl.hpp"

namespace duplex::cli {

namespace {

std::optional<fs::path> optional_path(const json& r, const char* key, const fs::path& base) {
  if (!r.contains(key) || r.at(key).is_null()) return std::nullopt;
  fs::path p = r.at(key).get<std::string>();
  return p.is_absolute() ? p : base / p;
}

}  // namespace

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  const fs::path base = path.parent_path();
  std::vector<ManifestEntry> out;
  for (const auto& r : read_jsonl(path)) {
    ManifestEntry e;
    e.audio_id = require(r, "audio_id").get<std::string>();
    e.wav = optional_path(r, "wav", base);
    e.labels = optional_path(r, "labels", base);
    e.transcripts = optional_path(r, "transcripts", base);
    e.features = optional_path(r, "features", base);
    if (r.contains("split") && !r.at("split").is_null()) e.split = r.at("split").get<std::string>();
    if (!e.wav && !e.features) throw FormatError("manifest entry " + e.audio_id + " has neither wav nor features");
    out.push_back(std::move(e));
  }
  if (out.empty()) throw FormatError("empty manifest: " + path.string());
  return out;
}

std::vector<ManifestEntry> select_split(const std::vector<ManifestEntry>& entries, const std::string& split) {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (split.empty() || e.split.empty() || e.split == split) out.push_back(e);
  }
  return out;
}

DatasetItem load_item(const ManifestEntry& entry, bool need_labels) {
  DatasetItem item;
  item.audio_id = entry.audio_id;
  if (entry.features) {
    auto all = parse_feature_file(read_text(*entry.features));
    auto it = all.find(entry.audio_id);
    if (it == all.end()) throw FormatError("no features for " + entry.audio_id + " in " + entry.features->string());
    item.features = std::move(it->second);
    item.seconds = item.features->size();
  } else {
    item.audio = load_duplex(*entry.wav).audio;
    item.seconds = chunk(*item.audio).n_chunks;
    if (item.seconds == 0) throw AudioError(entry.audio_id + ": audio shorter than one chunk");
    if (entry.transcripts) {
      auto all = parse_transcripts(read_text(*entry.transcripts));
      if (auto it = all.find(entry.audio_id); it != all.end()) item.transcript = std::move(it->second);
    }
  }
  if (entry.labels) {
    auto all = read_timelines(*entry.labels);
    auto it = all.find(entry.audio_id);
    if (it == all.end()) throw FormatError("labels file has no timeline for " + entry.audio_id);
    const std::size_t n = it->second.size();
    const std::size_t diff = n > item.seconds ? n - item.seconds : item.seconds - n;
    if (diff > 1) {
      throw FormatError(entry.audio_id + ": " + std::to_string(n) + " labeled seconds for a " +
                        std::to_string(item.seconds) + " s stream");
    }
    item.seconds = std::min(item.seconds, n);
    std::vector<SecondLabel> kept(it->second.begin(), it->second.begin() + static_cast<std::ptrdiff_t>(item.seconds));
    item.labels = LabelTimeline(std::move(kept));
  } else if (need_labels) {
    throw FormatError("manifest entry " + entry.audio_id + " has no labels");
  }
  return item;
}

std::vector<DatasetItem> load_items(const std::vector<ManifestEntry>& entries, bool need_labels) {
  std::vector<DatasetItem> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(load_item(e, need_labels));
  return out;
}

std::vector<TrainingSequence> item_sequences(const DatasetItem& item, double window_s, double lookahead_s) {
  if (!item.labels) throw std::invalid_argument(item.audio_id + " has no labels");
  if (item.features) {
    std::span<const FeaturePair> f(item.features->data(), item.seconds);
    return windowed_sequences(f, *item.labels, window_s, lookahead_s);
  }
  const Transcript* tr = item.transcript ? &*item.transcript : nullptr;
  return windowed_sequences(*item.audio, tr, *item.labels, window_s, lookahead_s);
}

StreamPrediction item_predict(const DatasetItem& item, const DetectorParams& params, double window_s,
                              double lookahead_s) {
  if (item.features) return infer_features(*item.features, params, window_s, lookahead_s);
  const Transcript* tr = item.transcript ? &*item.transcript : nullptr;
  return infer_stream(*item.audio, tr, params, window_s, lookahead_s);
}

double mean_context_s(const DatasetItem& item, double window_s, double lookahead_s) {
  const int rate = item.audio ? item.audio->sample_rate() : 1;
  const std::size_t total = item.audio ? item.audio->frames() : item.seconds;
  if (item.seconds == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 1; i <= item.seconds; ++i) {
    if (item.audio) {
      acc += static_cast<double>(causal_window(total, rate, i, window_s, lookahead_s).size()) / rate;
    } else {
      const auto anchor = static_cast<long long>(i - 1);
      const long long lo = std::max(0LL, anchor - std::llround(window_s));
      const long long hi = std::min(static_cast<long long>(total), anchor + std::llround(lookahead_s));
      acc += static_cast<double>(std::max(0LL, hi - lo));
    }
  }
  return acc / static_cast<double>(item.seconds);
}

}  // namespace duplex::cli
