#include "duplex/corpus_stitcher.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include "duplex/jsonl.hpp"
#include "duplex/wav.hpp"

namespace duplex {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw FormatError("script line " + std::to_string(line) + ": " + what);
}

struct CleanBody {
  std::string text;
  std::optional<ScriptMarker> marker;
};

CleanBody strip_markers(std::string body, std::size_t line) {
  static const std::regex marker_re(R"(\[\s*(interruption|backchannel)\s*\])", std::regex::icase);
  CleanBody out;
  std::smatch m;
  if (std::regex_search(body, m, marker_re)) {
    const std::string rest = m.suffix().str();
    if (std::regex_search(rest, marker_re)) fail(line, "more than one event marker");
    const std::string before(trim(m.prefix().str()));
    const std::string after(trim(rest));
    out.text = before + (!before.empty() && !after.empty() ? " " : "") + after;
    out.marker = ScriptMarker{lower(m[1].str()) == "interruption" ? ScriptEvent::Interruption
                                                                   : ScriptEvent::Backchannel,
                              before.size()};
  } else {
    out.text = std::string(trim(body));
  }
  return out;
}

}  // namespace

std::string_view to_string(ScriptEvent event) {
  switch (event) {
    case ScriptEvent::None: return "none";
    case ScriptEvent::Interruption: return "interruption";
    case ScriptEvent::Backchannel: return "backchannel";
  }
  return "?";
}

std::vector<ScriptUtterance> parse_script(std::string_view text) {
  static const std::regex line_re(R"(^\s*\(\s*(\d+)\s*\)\s*([A-Za-z]+\s*\d*)\s*(?:\(\s*([A-Za-z]+)\s*\))?\s*:(.*)$)");
  static const std::regex intent_re(R"(\{([^{}]*)\})");

  std::vector<ScriptUtterance> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;

    std::smatch m;
    if (!std::regex_match(line, m, line_re)) fail(line_no, "expected \"(N) speakerX: text {Intent}\"");
    ScriptUtterance u;
    u.index = std::stoi(m[1].str());

    std::string who = lower(m[2].str());
    who.erase(std::remove_if(who.begin(), who.end(), [](unsigned char c) { return std::isspace(c); }), who.end());
    if (who == "speaker1") {
      u.speaker = Speaker::One;
    } else if (who == "speaker2") {
      u.speaker = Speaker::Two;
    } else {
      fail(line_no, "unknown speaker '" + m[2].str() + "'");
    }

    if (m[3].matched) {
      const std::string ev = lower(m[3].str());
      if (ev == "interruption") {
        u.event = ScriptEvent::Interruption;
      } else if (ev == "backchannel") {
        u.event = ScriptEvent::Backchannel;
      } else {
        fail(line_no, "unknown event '" + m[3].str() + "'");
      }
    }

    std::string body = m[4].str();
    std::vector<std::string> tags;
    for (auto it = std::sregex_iterator(body.begin(), body.end(), intent_re); it != std::sregex_iterator(); ++it) {
      tags.push_back((*it)[1].str());
    }
    if (tags.empty()) fail(line_no, "missing {Intent} tag");
    if (tags.size() > 1) fail(line_no, "more than one {Intent} tag");
    const auto intent = parse_high_act(trim(tags.front()));
    if (!intent) fail(line_no, "unknown intent '" + tags.front() + "'");
    u.intent = *intent;
    body = std::regex_replace(body, intent_re, " ");

    CleanBody clean = strip_markers(std::move(body), line_no);
    u.text = std::move(clean.text);
    u.marker = clean.marker;

    if (u.event != ScriptEvent::None) {
      if (out.empty() || !out.back().marker || out.back().marker->kind != u.event) {
        fail(line_no, std::string(to_string(u.event)) + " line without a matching [" +
                          std::string(to_string(u.event)) + "] marker in the previous line");
      }
      if (out.back().speaker == u.speaker) fail(line_no, "event child must be spoken by the other speaker");
      u.marker_offset = out.back().marker->offset;
    }
    out.push_back(std::move(u));
  }
  return out;
}

double StitchPlan::total_ms() const {
  double total = 0.0;
  for (const auto& u : utterances) total = std::max(total, u.audible_end_ms);
  return total;
}

StitchPlan plan_timestamps(std::span<const ScriptUtterance> script, std::span<const double> durations_ms,
                           const StitchConfig& config) {
  if (durations_ms.size() != script.size()) {
    throw std::invalid_argument("need one clip duration per utterance (" + std::to_string(script.size()) +
                                " utterances, " + std::to_string(durations_ms.size()) + " durations)");
  }
  if (config.inter_turn_gap_ms < 0.0 || config.interruption_cut_ms <= 0.0 || config.fade_ms < 0.0 ||
      config.min_overlap_ms < 0.0) {
    throw std::invalid_argument("invalid stitch configuration");
  }
  StitchPlan plan;
  plan.config = config;
  double floor_end = 0.0;  // latest audible end so far
  for (std::size_t k = 0; k < script.size(); ++k) {
    const ScriptUtterance& s = script[k];
    const double dur = durations_ms[k];
    if (!(dur > 0.0) || !std::isfinite(dur)) throw std::invalid_argument("clip durations must be positive");
    PlannedUtterance u;
    u.position = k;
    u.speaker = s.speaker;
    u.channel = s.speaker == Speaker::One ? 0 : 1;
    u.duration_ms = dur;
    u.event = s.event;
    u.intent = s.intent;

    if (s.event == ScriptEvent::None) {
      u.start_ms = k == 0 ? 0.0 : floor_end + config.inter_turn_gap_ms;
    } else {
      if (k == 0 || !s.marker_offset) throw std::invalid_argument("event utterance without a parent marker");
      PlannedUtterance& parent = plan.utterances[k - 1];
      const std::size_t len = script[k - 1].text.size();
      if (*s.marker_offset > len) throw std::invalid_argument("marker offset beyond the parent text");
      const double frac = len > 0 ? static_cast<double>(*s.marker_offset) / static_cast<double>(len) : 0.0;
      double start = parent.start_ms + parent.duration_ms * frac;
      start = std::min(start, parent.audible_end_ms - config.min_overlap_ms);
      u.start_ms = std::max(start, parent.start_ms);
      u.parent = k - 1;
      if (s.event == ScriptEvent::Interruption) {
        const double cut = u.start_ms + config.interruption_cut_ms;
        if (cut < parent.audible_end_ms) {
          parent.audible_end_ms = cut;
          parent.truncated = true;
        }
      }
    }
    u.audible_end_ms = u.start_ms + dur;
    plan.utterances.push_back(u);
    floor_end = 0.0;
    for (const auto& p : plan.utterances) floor_end = std::max(floor_end, p.audible_end_ms);
  }
  return plan;
}

double MonoClip::duration_ms() const {
  return sample_rate > 0 ? 1000.0 * static_cast<double>(samples.size()) / sample_rate : 0.0;
}

float soft_clip(float x) {
  const float a = std::abs(x);
  if (a <= 0.5f) return x;
  const float y = 0.5f + 0.5f * std::tanh((a - 0.5f) / 0.5f);
  return std::copysign(std::min(y, 0.99999994f), x);
}

DuplexAudio stitch(const StitchPlan& plan, std::span<const MonoClip> clips) {
  if (clips.size() != plan.utterances.size()) throw std::invalid_argument("need one clip per planned utterance");
  if (clips.empty()) throw std::invalid_argument("nothing to stitch");
  const int rate = clips.front().sample_rate;
  for (const auto& c : clips) {
    if (c.sample_rate != rate) throw AudioError("clip sample rates differ");
  }
  if (rate <= 0) throw AudioError("clip sample rate must be positive");
  auto to_samples = [rate](double ms) { return static_cast<std::size_t>(std::llround(ms * rate / 1000.0)); };

  struct Placement {
    std::size_t begin, length, fade;
  };
  std::vector<Placement> placements;
  std::size_t total = 0;
  for (std::size_t k = 0; k < clips.size(); ++k) {
    const auto& u = plan.utterances[k];
    const std::size_t begin = to_samples(u.start_ms);
    std::size_t length = clips[k].samples.size();
    std::size_t fade = 0;
    if (u.truncated) {
      const std::size_t end = to_samples(u.audible_end_ms);
      length = std::min(length, end > begin ? end - begin : 0);
      fade = std::min(length, to_samples(plan.config.fade_ms));
    }
    placements.push_back({begin, length, fade});
    total = std::max(total, begin + length);
  }

  std::vector<float> ch[2] = {std::vector<float>(total, 0.0f), std::vector<float>(total, 0.0f)};
  for (std::size_t k = 0; k < clips.size(); ++k) {
    const auto& pl = placements[k];
    auto& out = ch[plan.utterances[k].channel];
    for (std::size_t n = 0; n < pl.length; ++n) {
      float g = 1.0f;
      const std::size_t from_end = pl.length - n;
      if (pl.fade > 0 && from_end <= pl.fade) g = static_cast<float>(from_end - 1) / static_cast<float>(pl.fade);
      out[pl.begin + n] += g * clips[k].samples[n];
    }
  }
  for (auto& c : ch) {
    for (auto& x : c) x = soft_clip(x);
  }
  return DuplexAudio(rate, std::move(ch[0]), std::move(ch[1]));
}

std::vector<std::vector<LowAct>> events_by_second(const StitchPlan& plan) {
  const auto n = static_cast<std::size_t>(std::floor(plan.total_ms() / 1000.0));
  std::vector<std::vector<LowAct>> out(n);
  auto add_span = [&](double a, double b, LowAct act) {
    for (std::size_t s = 0; s < n; ++s) {
      const double lo = 1000.0 * static_cast<double>(s);
      if (std::min(b, lo + 1000.0) - std::max(a, lo) > 0.0) out[s].push_back(act);
    }
  };
  std::optional<Speaker> holder;
  for (const auto& u : plan.utterances) {
    if (u.event == ScriptEvent::Backchannel) {
      add_span(u.start_ms, u.audible_end_ms, LowAct::Backchannel);
      continue;
    }
    if (u.event == ScriptEvent::Interruption) add_span(u.start_ms, u.audible_end_ms, LowAct::Interruption);
    if (holder && *holder != u.speaker) {
      const auto s = static_cast<std::size_t>(std::floor(u.start_ms / 1000.0));
      if (s < n) out[s].push_back(LowAct::TurnTaking);
    }
    holder = u.speaker;
  }
  return out;
}

LabelTimeline emit_labels(const StitchPlan& plan) {
  const auto events = events_by_second(plan);
  LabelTimeline timeline;
  for (std::size_t s = 0; s < events.size(); ++s) {
    const double lo = 1000.0 * static_cast<double>(s);
    std::optional<HighAct> hi;
    double best = 0.0;
    for (const auto& u : plan.utterances) {
      const double cover = std::min(u.audible_end_ms, lo + 1000.0) - std::max(u.start_ms, lo);
      if (cover > best) {
        best = cover;
        hi = u.intent;
      }
    }
    timeline.push_back(hi, resolve_low_label(events[s]));
  }
  return timeline;
}

std::string plan_to_json(const StitchPlan& plan) {
  json utts = json::array();
  for (const auto& u : plan.utterances) {
    json j{{"position", u.position},
           {"speaker", u.speaker == Speaker::One ? "speaker1" : "speaker2"},
           {"channel", u.channel == 0 ? "left" : "right"},
           {"start_ms", u.start_ms},
           {"duration_ms", u.duration_ms},
           {"audible_end_ms", u.audible_end_ms},
           {"truncated", u.truncated},
           {"event", to_string(u.event)},
           {"intent", to_string(u.intent)}};
    j["parent"] = u.parent ? json(*u.parent) : json(nullptr);
    utts.push_back(std::move(j));
  }
  json out{{"inter_turn_gap_ms", plan.config.inter_turn_gap_ms},
           {"interruption_cut_ms", plan.config.interruption_cut_ms},
           {"fade_ms", plan.config.fade_ms},
           {"total_ms", plan.total_ms()},
           {"utterances", utts}};
  return out.dump(1);
}

std::vector<ClipEntry> parse_clip_manifest(std::string_view jsonl, const std::filesystem::path& base_dir) {
  std::vector<ClipEntry> out;
  for (const auto& r : parse_jsonl(jsonl)) {
    ClipEntry e;
    e.index = require(r, "index").get<int>();
    std::filesystem::path p = require(r, "path").get<std::string>();
    e.path = p.is_absolute() ? p : base_dir / p;
    if (r.contains("duration_ms") && !r.at("duration_ms").is_null()) e.duration_ms = r.at("duration_ms").get<double>();
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const ClipEntry& a, const ClipEntry& b) { return a.index < b.index; });
  for (std::size_t k = 1; k < out.size(); ++k) {
    if (out[k].index == out[k - 1].index) throw FormatError("duplicate clip index " + std::to_string(out[k].index));
  }
  return out;
}

MonoClip load_clip(const std::filesystem::path& path) {
  const wav::WavData w = wav::read(path);
  if (w.channels < 1) throw AudioError("clip has no channels: " + path.string());
  MonoClip clip;
  clip.sample_rate = w.sample_rate;
  const std::size_t frames = w.frames();
  clip.samples.resize(frames);
  for (std::size_t n = 0; n < frames; ++n) {
    double acc = 0.0;
    for (int c = 0; c < w.channels; ++c) acc += w.interleaved[n * static_cast<std::size_t>(w.channels) + static_cast<std::size_t>(c)];
    clip.samples[n] = static_cast<float>(acc / w.channels);
  }
  if (clip.samples.empty()) throw AudioError("empty clip: " + path.string());
  return clip;
}

}  // namespace duplex
