#include "duplex/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "duplex/jsonl.hpp"
#include "duplex/rationale_metrics.hpp"
#include "duplex/vad_events.hpp"

namespace duplex {

namespace {

constexpr double kVadFrameMs = 20.0;
constexpr double kVadThreshold = 0.1;
constexpr double kRatioEps = 1e-10;

const std::set<std::string>& imperative_verbs() {
  static const std::set<std::string> words{
      "stop", "wait", "go",   "look", "listen", "tell", "give",  "take", "come", "let",
      "please", "put", "bring", "check", "try", "open", "close", "show", "help", "get",
      "make", "find", "move", "hold", "call", "keep", "turn", "send", "sit", "stay"};
  return words;
}

const std::set<std::string>& first_person() {
  static const std::set<std::string> words{"i",     "me",   "my",    "mine",  "myself", "we",
                                           "us",    "our",  "ours",  "ourselves", "i'm", "i've",
                                           "i'll",  "i'd",  "we're", "we've", "we'll", "we'd"};
  return words;
}

const std::set<std::string>& second_person() {
  static const std::set<std::string> words{"you",   "your",   "yours",  "yourself", "yourselves",
                                           "you're", "you've", "you'll", "you'd"};
  return words;
}

struct ChannelStats {
  double log_rms = kLogRmsFloor;
  double mean_square = 0.0;
  double zcr = 0.0;
};

ChannelStats channel_stats(std::span<const float> x) {
  ChannelStats s;
  if (x.empty()) return s;
  double acc = 0.0;
  std::size_t crossings = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    acc += static_cast<double>(x[k]) * x[k];
    if (k > 0 && ((x[k - 1] < 0.0f) != (x[k] < 0.0f))) ++crossings;
  }
  s.mean_square = acc / static_cast<double>(x.size());
  s.log_rms = std::log(std::max(std::sqrt(s.mean_square), 1e-5));
  s.zcr = x.size() > 1 ? static_cast<double>(crossings) / static_cast<double>(x.size() - 1) : 0.0;
  return s;
}

}  // namespace

std::vector<FeaturePair> block_features(const DuplexAudio& audio, std::span<const Block> blocks) {
  std::vector<FeaturePair> out;
  out.reserve(blocks.size());

  VadMask mask;
  const std::size_t frame_len =
      static_cast<std::size_t>(std::llround(kVadFrameMs * audio.sample_rate() / 1000.0));
  if (!audio.empty()) mask = compute_vad(audio, kVadFrameMs, kVadThreshold).mask;

  const auto fillers = default_filler_lexicon();
  std::set<std::string> types;
  std::size_t running_tokens = 0;
  std::array<double, 2> prev_log_rms{0.0, 0.0};

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& blk = blocks[b];
    if (blk.end < blk.begin || blk.end > audio.frames()) throw std::out_of_range("block outside audio");
    FeaturePair fp;
    fp.acoustic = Eigen::VectorXd::Zero(kAcousticDim);
    fp.semantic = Eigen::VectorXd::Zero(kSemanticDim);

    const std::size_t len = blk.end - blk.begin;
    const auto l = channel_stats(audio.left().subspan(blk.begin, len));
    const auto r = channel_stats(audio.right().subspan(blk.begin, len));

    // VAD frames whose start lies inside the block
    double voiced_l = 0.0, voiced_r = 0.0, both = 0.0;
    std::size_t n_frames = 0;
    if (frame_len > 0) {
      const std::size_t f0 = (blk.begin + frame_len - 1) / frame_len;
      for (std::size_t f = f0; f < mask.frames() && f * frame_len < blk.end; ++f) {
        ++n_frames;
        voiced_l += mask.left[f];
        voiced_r += mask.right[f];
        both += mask.left[f] && mask.right[f];
      }
    }
    const double nf = n_frames > 0 ? static_cast<double>(n_frames) : 1.0;

    fp.acoustic << l.log_rms, r.log_rms, voiced_l / nf, voiced_r / nf, both / nf, l.zcr, r.zcr,
        std::clamp((l.mean_square + kRatioEps) / (r.mean_square + kRatioEps), 1e-3, 1e3),
        b > 0 ? l.log_rms - prev_log_rms[0] : 0.0, b > 0 ? r.log_rms - prev_log_rms[1] : 0.0;
    prev_log_rms = {l.log_rms, r.log_rms};

    const auto tokens = tokenize(blk.text);
    if (!tokens.empty()) {
      const double n = static_cast<double>(tokens.size());
      double imperative = 0, first = 0, second = 0;
      for (const auto& t : tokens.tokens) {
        imperative += imperative_verbs().count(t);
        first += first_person().count(t);
        second += second_person().count(t);
        types.insert(t);
      }
      running_tokens += tokens.size();
      fp.semantic(0) = n;
      fp.semantic(1) = static_cast<double>(count_fillers(tokens, fillers)) / n;
      fp.semantic(3) = imperative / n;
      fp.semantic(4) = first / n;
      fp.semantic(5) = second / n;
    }
    fp.semantic(2) = blk.text.find('?') != std::string::npos ? 1.0 : 0.0;
    fp.semantic(6) = running_tokens > 0
                         ? static_cast<double>(types.size()) / static_cast<double>(running_tokens)
                         : 0.0;
    out.push_back(std::move(fp));
  }
  return out;
}

std::vector<FeaturePair> extract_features(const DuplexAudio& audio, const ChunkGrid& grid,
                                          const Transcript* transcript) {
  std::vector<Block> blocks(grid.n_chunks);
  for (std::size_t i = 0; i < grid.n_chunks; ++i) {
    blocks[i].begin = grid.boundary(i);
    blocks[i].end = grid.boundary(i + 1);
    if (transcript && i < transcript->size()) blocks[i].text = (*transcript)[i];
  }
  return block_features(audio, blocks);
}

std::vector<FeaturePair> window_features(const DuplexAudio& audio, const Transcript* transcript,
                                         std::size_t i, double window_s, double lookahead_s) {
  const CausalWindow w = causal_window(audio, i, window_s, lookahead_s);
  const DuplexAudio view = audio.slice(w.begin, w.end);
  const auto n_block = static_cast<std::size_t>(audio.sample_rate());

  std::vector<Block> blocks;
  if (w.empty()) {
    blocks.push_back({});
  } else {
    for (std::size_t c = w.begin / n_block; c * n_block < w.end; ++c) {
      const std::size_t chunk_begin = c * n_block;
      const std::size_t chunk_end = chunk_begin + n_block;
      Block b;
      b.begin = std::max(chunk_begin, w.begin) - w.begin;
      b.end = std::min(chunk_end, w.end) - w.begin;
      // words are heard only once their whole second is inside the window
      if (transcript && c < transcript->size() && chunk_begin >= w.begin && chunk_end <= w.end) {
        b.text = (*transcript)[c];
      }
      blocks.push_back(std::move(b));
    }
  }
  return block_features(view, blocks);
}

std::vector<FeaturePair> window_features(std::span<const FeaturePair> per_second, std::size_t i,
                                         double window_s, double lookahead_s) {
  const std::size_t n = per_second.size();
  if (i < 1 || i > n) throw std::out_of_range("chunk index outside the feature sequence");
  if (!(window_s > 0.0) || !(lookahead_s >= 0.0)) throw std::invalid_argument("invalid window");
  const auto anchor = static_cast<long long>(i - 1);
  const long long lo = std::max(0LL, anchor - std::llround(window_s));
  const long long hi = std::min(static_cast<long long>(n), anchor + std::llround(lookahead_s));
  if (hi <= lo) {
    const Eigen::Index da = per_second.front().acoustic.size();
    const Eigen::Index ds = per_second.front().semantic.size();
    return {FeaturePair{Eigen::VectorXd::Zero(da), Eigen::VectorXd::Zero(ds)}};
  }
  return {per_second.begin() + lo, per_second.begin() + hi};
}

std::map<std::string, std::vector<FeaturePair>> parse_feature_file(std::string_view jsonl) {
  std::map<std::string, std::vector<std::pair<int, FeaturePair>>> raw;
  for (const auto& r : parse_jsonl(jsonl)) {
    const auto a = require(r, "acoustic").get<std::vector<double>>();
    const auto s = require(r, "semantic").get<std::vector<double>>();
    FeaturePair fp{Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size())),
                   Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()))};
    if (!fp.acoustic.allFinite() || !fp.semantic.allFinite()) throw FormatError("non-finite feature");
    raw[require(r, "audio_id").get<std::string>()].emplace_back(require(r, "t").get<int>(), std::move(fp));
  }
  std::map<std::string, std::vector<FeaturePair>> out;
  for (auto& [id, rows] : raw) {
    std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    auto& seq = out[id];
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].first != static_cast<int>(k)) throw FormatError("feature seconds must be consecutive from 0: " + id);
      if (k > 0 && (rows[k].second.acoustic.size() != seq.front().acoustic.size() ||
                    rows[k].second.semantic.size() != seq.front().semantic.size())) {
        throw FormatError("feature dimensions vary within " + id);
      }
      seq.push_back(std::move(rows[k].second));
    }
  }
  return out;
}

std::string format_features(std::string_view audio_id, std::span<const FeaturePair> features) {
  std::string out;
  for (std::size_t t = 0; t < features.size(); ++t) {
    const auto& f = features[t];
    json r{{"audio_id", audio_id},
           {"t", t},
           {"acoustic", std::vector<double>(f.acoustic.data(), f.acoustic.data() + f.acoustic.size())},
           {"semantic", std::vector<double>(f.semantic.data(), f.semantic.data() + f.semantic.size())}};
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::map<std::string, Transcript> parse_transcripts(std::string_view jsonl) {
  std::map<std::string, Transcript> out;
  for (const auto& r : parse_jsonl(jsonl)) {
    const auto id = require(r, "audio_id").get<std::string>();
    const int t = require(r, "t").get<int>();
    if (t < 0) throw FormatError("negative transcript second");
    std::string text;
    if (r.contains("text")) {
      text = r.at("text").get<std::string>();
    } else {
      for (const auto& tok : require(r, "tokens")) text += (text.empty() ? "" : " ") + tok.get<std::string>();
    }
    auto& tr = out[id];
    if (tr.size() <= static_cast<std::size_t>(t)) tr.resize(static_cast<std::size_t>(t) + 1);
    auto& slot = tr[static_cast<std::size_t>(t)];
    slot += (slot.empty() ? "" : " ") + text;
  }
  return out;
}

}  // namespace duplex
