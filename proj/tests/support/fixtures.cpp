#include "fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>

#include "duplex/jsonl.hpp"

namespace fixtures {

using namespace duplex;

VadMask mask_from_intervals(const std::vector<Interval>& left, const std::vector<Interval>& right, double total_ms,
                            double frame_ms) {
  VadMask m;
  m.frame_ms = frame_ms;
  const auto n = static_cast<std::size_t>(std::llround(total_ms / frame_ms));
  m.left.assign(n, 0);
  m.right.assign(n, 0);
  for (std::size_t f = 0; f < n; ++f) {
    const double t = static_cast<double>(f) * frame_ms;
    for (const auto& [a, b] : left) m.left[f] |= (t >= a && t < b);
    for (const auto& [a, b] : right) m.right[f] |= (t >= a && t < b);
  }
  return m;
}

VadMask random_mask(std::mt19937_64& rng, std::size_t frames, double frame_ms) {
  VadMask m;
  m.frame_ms = frame_ms;
  std::uniform_int_distribution<int> run_len(1, 40);
  std::bernoulli_distribution voiced(0.45);
  for (auto* ch : {&m.left, &m.right}) {
    while (ch->size() < frames) {
      const std::uint8_t v = voiced(rng);
      const int len = run_len(rng);
      for (int k = 0; k < len && ch->size() < frames; ++k) ch->push_back(v);
    }
  }
  return m;
}

namespace {

// Fill silences of at most max_gap frames between voiced frames.
std::vector<std::uint8_t> merged(const std::vector<std::uint8_t>& v, std::size_t max_gap) {
  std::vector<std::uint8_t> out = v;
  std::ptrdiff_t last_voiced = -1;
  for (std::size_t f = 0; f < v.size(); ++f) {
    if (!v[f]) continue;
    if (last_voiced >= 0) {
      const auto gap = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(f) - last_voiced - 1);
      if (gap > 0 && gap <= max_gap) {
        for (std::size_t g = static_cast<std::size_t>(last_voiced) + 1; g < f; ++g) out[g] = 1;
      }
    }
    last_voiced = static_cast<std::ptrdiff_t>(f);
  }
  return out;
}

template <typename Pred>
std::vector<std::pair<std::size_t, std::size_t>> runs(std::size_t n, Pred&& pred) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t f = 0;
  while (f < n) {
    if (!pred(f)) {
      ++f;
      continue;
    }
    std::size_t e = f;
    while (e < n && pred(e)) ++e;
    out.emplace_back(f, e);
    f = e;
  }
  return out;
}

}  // namespace

std::vector<TurnEvent> naive_events(const VadMask& mask, double min_silence_ms) {
  const std::size_t n = mask.frames();
  // silence of g frames lasts g * frame_ms; merge iff that is <= min_silence_ms
  const auto max_gap = static_cast<std::size_t>(std::floor(min_silence_ms / mask.frame_ms + 1e-9));
  const auto L = merged(mask.left, max_gap);
  const auto R = merged(mask.right, max_gap);
  const double fm = mask.frame_ms;
  std::vector<TurnEvent> ev;
  for (auto [a, b] : runs(n, [&](std::size_t f) { return L[f] != 0; })) {
    ev.push_back({EventKind::IPU, Channel::Left, a * fm, b * fm});
  }
  for (auto [a, b] : runs(n, [&](std::size_t f) { return R[f] != 0; })) {
    ev.push_back({EventKind::IPU, Channel::Right, a * fm, b * fm});
  }
  for (auto [a, b] : runs(n, [&](std::size_t f) { return L[f] && R[f]; })) {
    ev.push_back({EventKind::Overlap, Channel::Both, a * fm, b * fm});
  }
  for (auto [a, b] : runs(n, [&](std::size_t f) { return !L[f] && !R[f]; })) {
    if (a == 0 || b == n) continue;  // leading / trailing silence
    const bool prev_l = L[a - 1], prev_r = R[a - 1];
    const bool next_l = L[b], next_r = R[b];
    const bool pause_l = prev_l && !prev_r && next_l && !next_r;
    const bool pause_r = prev_r && !prev_l && next_r && !next_l;
    if (pause_l || pause_r) {
      ev.push_back({EventKind::Pause, pause_l ? Channel::Left : Channel::Right, a * fm, b * fm});
    } else {
      ev.push_back({EventKind::Gap, Channel::Both, a * fm, b * fm});
    }
  }
  std::sort(ev.begin(), ev.end(), [](const TurnEvent& x, const TurnEvent& y) {
    return std::tie(x.start_ms, x.kind, x.channel, x.end_ms) < std::tie(y.start_ms, y.kind, y.channel, y.end_ms);
  });
  return ev;
}

namespace {

std::string trimmed(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string key_of(const std::string& s) {
  std::string k = trimmed(s);
  for (auto& c : k) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return k;
}

}  // namespace

BruteGraph brute_force_graph(const std::vector<Triple>& triples, HighAct hi, LowAct lo) {
  BruteGraph g;
  std::vector<std::string> keys;
  auto index_of = [&](const std::string& span) {
    const std::string k = key_of(span);
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (keys[i] == k) return i;
    }
    keys.push_back(k);
    g.labels.push_back(trimmed(span));
    return keys.size() - 1;
  };
  for (const auto& t : triples) {
    index_of(t.subject);
    index_of(t.object);
  }
  const std::size_t n_text = keys.size();
  const std::size_t n = n_text + 2;
  g.a.assign(n, std::vector<int>(n, 0));
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      int count = u == v ? 1 : 0;
      if (u < n_text && v < n_text) {
        for (const auto& t : triples) {
          if (key_of(t.subject) == keys[u] && key_of(t.object) == keys[v]) ++count;
        }
      }
      g.a[u][v] = count;
    }
  }
  g.labels.push_back("SA_High=" + std::string(to_string(hi)));
  g.labels.push_back("SA_Low=" + std::string(to_string(lo)));
  return g;
}

std::vector<Triple> random_triples(std::mt19937_64& rng, std::size_t max_triples, std::size_t max_spans,
                                   bool allow_reflexive) {
  static const std::vector<std::string> words{"Alice", "the dog", "Paris", "a plan",  "coffee", "the meeting",
                                              "Bob",   "music",   "rain",  "the car", "tea",    "a question",
                                              "she",   "we",      "it",    "the bus", "lunch",  "my sister",
                                              "code",  "the game"};
  std::uniform_int_distribution<std::size_t> nt(0, max_triples);
  std::uniform_int_distribution<std::size_t> ns(1, std::min(max_spans, words.size()));
  const std::size_t spans = ns(rng);
  std::uniform_int_distribution<std::size_t> pick(0, spans - 1);
  std::uniform_int_distribution<int> variant(0, 3);
  auto vary = [&](std::string s) {
    switch (variant(rng)) {
      case 1:
        for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        break;
      case 2: s = "  " + s + " "; break;
      case 3:
        for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        break;
      default: break;
    }
    return s;
  };
  std::vector<Triple> out(nt(rng));
  for (auto& t : out) {
    const std::size_t s = pick(rng);
    std::size_t o = pick(rng);
    if (!allow_reflexive && spans > 1) {
      while (o == s) o = pick(rng);
    }
    t.subject = vary(words[s]);
    t.relation = "rel";
    t.object = vary(words[o]);
  }
  if (!allow_reflexive && spans == 1) out.clear();
  return out;
}

MonoClip tone(int rate, double ms, double freq_hz, double amp) {
  MonoClip c;
  c.sample_rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(ms * rate / 1000.0));
  c.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    c.samples[k] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(k) / rate));
  }
  return c;
}

std::string random_script(std::mt19937_64& rng, int n) {
  static const char* intents[] = {"Constatives", "Directives", "Commissives", "Acknowledgments"};
  static const char* words[] = {"we", "should", "really", "go", "there", "soon", "because", "the", "weather",
                                "looks", "great", "today", "and", "tomorrow", "it", "rains"};
  std::uniform_int_distribution<int> intent(0, 3), word(0, 15), len(4, 12);
  std::bernoulli_distribution coin(0.5);
  n = std::max(n, 6);
  // positions of event children; a child always follows a plain line
  const int bc_at = 2 + static_cast<int>(rng() % 2);
  const int int_at = bc_at + 2 + static_cast<int>(rng() % 2);
  std::string script;
  int speaker = 1;
  auto body = [&](int words_n) {
    std::string s;
    for (int k = 0; k < words_n; ++k) s += std::string(k ? " " : "") + words[word(rng)];
    return s;
  };
  for (int i = 1; i <= n; ++i) {
    std::string line = "(" + std::to_string(i) + ") ";
    const bool is_bc = i == bc_at;
    const bool is_int = i == int_at;
    const bool next_bc = i + 1 == bc_at;
    const bool next_int = i + 1 == int_at;
    std::string text;
    if (next_bc || next_int) {
      const int a = len(rng), b = len(rng);
      text = body(a) + (next_bc ? " [backchannel] " : " [interruption] ") + body(b);
    } else if (is_bc) {
      text = coin(rng) ? "uh-huh" : "yeah right";
    } else {
      text = body(len(rng));
    }
    if (is_bc || is_int) {
      speaker = 3 - speaker;
      line += "speaker" + std::to_string(speaker) + (is_bc ? "(backchannel)" : "(interruption)");
    } else if (i > 1 && i - 1 == bc_at) {
      // the speaker holding the floor before the backchannel keeps or yields it at random
      speaker = coin(rng) ? 3 - speaker : speaker;
      line += "speaker" + std::to_string(speaker);
    } else {
      if (i > 1 && i - 1 != int_at) speaker = 3 - speaker;
      line += "speaker" + std::to_string(speaker);
    }
    line += ": " + text + " {" + intents[intent(rng)] + "}";
    script += line + "\n";
  }
  return script;
}

DuplexAudio random_stream(std::mt19937_64& rng, int rate, double seconds) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate));
  std::vector<float> ch[2] = {std::vector<float>(n, 0.0f), std::vector<float>(n, 0.0f)};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (auto& c : ch) {
    std::size_t pos = 0;
    while (pos < n) {
      const auto len = static_cast<std::size_t>((0.2 + 1.5 * u(rng)) * rate);
      const bool on = u(rng) < 0.6;
      const double f = 100.0 + 400.0 * u(rng), amp = 0.1 + 0.4 * u(rng);
      for (std::size_t k = 0; k < len && pos < n; ++k, ++pos) {
        c[pos] = on ? static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * f * k / rate) + noise(rng))
                    : static_cast<float>(0.01 * noise(rng));
      }
    }
  }
  return DuplexAudio(rate, std::move(ch[0]), std::move(ch[1]));
}

namespace {

FeaturePair toy_pair(std::mt19937_64& rng, int hi, int lo, double sep, double noise) {
  std::normal_distribution<double> nd(0.0, noise);
  FeaturePair f{Eigen::VectorXd(kAcousticDim), Eigen::VectorXd(kSemanticDim)};
  for (Eigen::Index k = 0; k < kAcousticDim; ++k) f.acoustic(k) = nd(rng);
  for (Eigen::Index k = 0; k < kSemanticDim; ++k) f.semantic(k) = nd(rng);
  f.acoustic(hi) += sep;
  f.acoustic(4 + lo) += sep;
  return f;
}

}  // namespace

ToyData toy_separable(std::size_t seconds, std::uint64_t seed, double sep, double noise) {
  std::mt19937_64 rng(seed);
  ToyData d;
  for (std::size_t t = 0; t < seconds; ++t) {
    // every class appears: cycle through the 16 combinations, shuffled by a random offset
    const int hi = static_cast<int>((t + rng() % 4) % 4);
    const int lo = static_cast<int>((t / 4 + rng() % 4) % 4);
    d.features.push_back(toy_pair(rng, hi, lo, sep, noise));
    d.labels.push_back(static_cast<HighAct>(hi), static_cast<LowAct>(lo));
  }
  return d;
}

ToyData toy_imbalanced(std::size_t seconds, std::uint64_t seed, double ratio, double sep, double noise) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution minority(1.0 / (ratio + 1.0));
  ToyData d;
  for (std::size_t t = 0; t < seconds; ++t) {
    const int hi = static_cast<int>(rng() % 4);
    const bool is_min = minority(rng);
    const LowAct lo = is_min ? LowAct::Backchannel : LowAct::Continuation;
    d.features.push_back(toy_pair(rng, hi, static_cast<int>(lo), sep, noise));
    d.labels.push_back(static_cast<HighAct>(hi), lo);
  }
  return d;
}

std::filesystem::path write_toy_dataset(const std::filesystem::path& dir, const std::vector<ToyData>& items,
                                        const std::vector<std::string>& splits) {
  std::string features, labels, manifest;
  for (std::size_t k = 0; k < items.size(); ++k) {
    const std::string id = "toy" + std::to_string(k);
    features += format_features(id, items[k].features);
    labels += format_timeline(id, items[k].labels);
    json m{{"audio_id", id}, {"features", "features.jsonl"}, {"labels", "labels.jsonl"}};
    if (k < splits.size()) m["split"] = splits[k];
    manifest += m.dump() + "\n";
  }
  write_text(dir / "features.jsonl", features);
  write_text(dir / "labels.jsonl", labels);
  write_text(dir / "manifest.jsonl", manifest);
  return dir / "manifest.jsonl";
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("duplex_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fixtures
