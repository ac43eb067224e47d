#include "duplex/behavior_labels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "duplex/jsonl.hpp"

namespace duplex {

namespace {

constexpr std::array<std::string_view, 4> kHighNames{"Constative", "Directive", "Commissive",
                                                     "Acknowledgment"};
constexpr std::array<std::string_view, 4> kLowNames{"TurnTaking", "Interruption", "Backchannel",
                                                    "Continuation"};

std::string fold(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_' || c == '-' || c == ' ') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

// Low-level priority; larger wins.
int priority(LowAct a) {
  switch (a) {
    case LowAct::Backchannel: return 3;
    case LowAct::Interruption: return 2;
    case LowAct::TurnTaking: return 1;
    case LowAct::Continuation: return 0;
  }
  return 0;
}

}  // namespace

std::string_view to_string(HighAct act) { return kHighNames[static_cast<std::size_t>(act)]; }
std::string_view to_string(LowAct act) { return kLowNames[static_cast<std::size_t>(act)]; }

std::optional<HighAct> parse_high_act(std::string_view name) {
  std::string f = fold(name);
  if (f.size() > 1 && f.back() == 's') f.pop_back();
  if (f == "acknowledgement") f = "acknowledgment";
  for (std::size_t i = 0; i < kHighNames.size(); ++i) {
    if (f == fold(kHighNames[i])) return static_cast<HighAct>(i);
  }
  return std::nullopt;
}

std::optional<LowAct> parse_low_act(std::string_view name) {
  const std::string f = fold(name);
  if (f == "turnchange") return LowAct::TurnTaking;
  for (std::size_t i = 0; i < kLowNames.size(); ++i) {
    if (f == fold(kLowNames[i])) return static_cast<LowAct>(i);
  }
  return std::nullopt;
}

std::size_t low_class_count(LowScheme scheme) { return scheme == LowScheme::FourClass ? 4 : 3; }

std::optional<std::size_t> low_class_index(LowAct act, LowScheme scheme) {
  const auto code = static_cast<std::size_t>(act);
  if (scheme == LowScheme::FourClass) return code;
  switch (act) {
    case LowAct::TurnTaking: return 0;
    case LowAct::Interruption: return std::nullopt;
    case LowAct::Backchannel: return 1;
    case LowAct::Continuation: return 2;
  }
  return std::nullopt;
}

LowAct low_act_from_index(std::size_t index, LowScheme scheme) {
  if (index >= low_class_count(scheme)) throw std::out_of_range("low-level class index");
  if (scheme == LowScheme::FourClass) return static_cast<LowAct>(index);
  constexpr std::array<LowAct, 3> three{LowAct::TurnTaking, LowAct::Backchannel,
                                        LowAct::Continuation};
  return three[index];
}

LabelTimeline::LabelTimeline(std::vector<SecondLabel> seconds) : seconds_(std::move(seconds)) {
  for (std::size_t i = 0; i < seconds_.size(); ++i) {
    if (seconds_[i].t != static_cast<int>(i)) {
      throw std::invalid_argument("timeline seconds must be consecutive from 0");
    }
  }
}

void LabelTimeline::push_back(std::optional<HighAct> hi, std::optional<LowAct> lo) {
  seconds_.push_back({static_cast<int>(seconds_.size()), hi, lo});
}

LowAct resolve_low_label(std::span<const LowAct> events) {
  LowAct best = LowAct::Continuation;
  for (LowAct e : events) {
    if (priority(e) > priority(best)) best = e;
  }
  return best;
}

ClassWeights ClassWeights::uniform(LowScheme scheme) {
  ClassWeights w;
  w.hi.assign(kHighClasses, 1.0);
  w.lo.assign(low_class_count(scheme), 1.0);
  return w;
}

std::vector<double> inverse_frequency(std::span<const std::size_t> counts,
                                      std::vector<std::size_t>* absent) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw std::invalid_argument("no labeled examples");
  std::vector<double> w(counts.size(), 0.0);
  double max_raw = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) {
      w[c] = static_cast<double>(total) / static_cast<double>(counts[c]);
      max_raw = std::max(max_raw, w[c]);
    }
  }
  double weighted = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) {
      w[c] = max_raw;
      if (absent) absent->push_back(c);
    }
    weighted += static_cast<double>(counts[c]) * w[c];
  }
  const double scale = static_cast<double>(total) / weighted;
  for (auto& v : w) v *= scale;
  return w;
}

std::vector<std::size_t> low_counts(std::span<const LabelTimeline> timelines, LowScheme scheme) {
  std::vector<std::size_t> counts(low_class_count(scheme), 0);
  for (const auto& tl : timelines) {
    for (const auto& s : tl) {
      if (!s.lo) continue;
      if (auto idx = low_class_index(*s.lo, scheme)) ++counts[*idx];
    }
  }
  return counts;
}

std::vector<std::size_t> high_counts(std::span<const LabelTimeline> timelines) {
  std::vector<std::size_t> counts(kHighClasses, 0);
  for (const auto& tl : timelines) {
    for (const auto& s : tl) {
      if (s.hi) ++counts[static_cast<std::size_t>(*s.hi)];
    }
  }
  return counts;
}

ClassWeights inverse_frequency_weights(std::span<const LabelTimeline> timelines, LowScheme scheme) {
  const auto hc = high_counts(timelines);
  const auto lc = low_counts(timelines, scheme);
  ClassWeights w;
  w.hi = inverse_frequency(hc, &w.absent_hi);
  w.lo = inverse_frequency(lc, &w.absent_lo);
  return w;
}

ClassWeights inverse_frequency_weights(const LabelTimeline& timeline, LowScheme scheme) {
  if (timeline.empty()) throw std::invalid_argument("empty timeline");
  return inverse_frequency_weights(std::span<const LabelTimeline>(&timeline, 1), scheme);
}

namespace {

void check_distribution(const Eigen::MatrixXd& p, Eigen::Index row, const char* head) {
  const auto r = p.row(row);
  if ((r.array() < 0.0).any() || !r.allFinite() || std::abs(r.sum() - 1.0) > 1e-6) {
    throw std::invalid_argument(std::string("invalid ") + head + " distribution at second " +
                                std::to_string(row));
  }
}

}  // namespace

double weighted_ce_loss(const Eigen::MatrixXd& p_hi, const Eigen::MatrixXd& p_lo,
                        const LabelTimeline& timeline, const ClassWeights& weights,
                        LowScheme scheme) {
  const auto n = static_cast<Eigen::Index>(timeline.size());
  if (p_hi.rows() != n || p_lo.rows() != n) throw std::invalid_argument("length mismatch");
  if (p_hi.cols() != static_cast<Eigen::Index>(weights.hi.size()) ||
      p_lo.cols() != static_cast<Eigen::Index>(weights.lo.size())) {
    throw std::invalid_argument("class count mismatch");
  }
  constexpr double kFloor = 1e-12;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = timeline[static_cast<std::size_t>(i)];
    if (s.hi) {
      check_distribution(p_hi, i, "high-level");
      const auto y = static_cast<Eigen::Index>(*s.hi);
      loss += weights.alpha * weights.hi[static_cast<std::size_t>(y)] *
              -std::log(std::max(p_hi(i, y), kFloor));
    }
    if (s.lo) {
      const auto idx = low_class_index(*s.lo, scheme);
      if (!idx) continue;
      check_distribution(p_lo, i, "low-level");
      const auto y = static_cast<Eigen::Index>(*idx);
      loss += weights.beta * weights.lo[*idx] * -std::log(std::max(p_lo(i, y), kFloor));
    }
  }
  return loss;
}

std::vector<double> event_distribution(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw std::invalid_argument("no labeled seconds");
  std::vector<double> pct(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    pct[c] = 100.0 * static_cast<double>(counts[c]) / static_cast<double>(total);
  }
  return pct;
}

std::vector<double> event_distribution(const LabelTimeline& timeline, LowScheme scheme) {
  if (timeline.empty()) throw std::invalid_argument("empty timeline");
  return event_distribution(low_counts(std::span<const LabelTimeline>(&timeline, 1), scheme));
}

std::map<std::string, LabelTimeline> parse_timelines(std::string_view jsonl) {
  std::map<std::string, std::vector<SecondLabel>> raw;
  for (const auto& r : parse_jsonl(jsonl)) {
    SecondLabel s;
    const auto id = require(r, "audio_id").get<std::string>();
    s.t = require(r, "t").get<int>();
    const json& hi = require(r, "hi");
    const json& lo = require(r, "lo");
    if (!hi.is_null()) {
      s.hi = parse_high_act(hi.get<std::string>());
      if (!s.hi) throw FormatError("unknown high-level act " + hi.dump());
    }
    if (!lo.is_null()) {
      s.lo = parse_low_act(lo.get<std::string>());
      if (!s.lo) throw FormatError("unknown low-level act " + lo.dump());
    }
    raw[id].push_back(s);
  }
  std::map<std::string, LabelTimeline> out;
  for (auto& [id, seconds] : raw) {
    std::sort(seconds.begin(), seconds.end(),
              [](const SecondLabel& a, const SecondLabel& b) { return a.t < b.t; });
    try {
      out.emplace(id, LabelTimeline(std::move(seconds)));
    } catch (const std::invalid_argument& e) {
      throw FormatError("timeline '" + id + "': " + e.what());
    }
  }
  return out;
}

std::map<std::string, LabelTimeline> read_timelines(const std::filesystem::path& path) {
  return parse_timelines(read_text(path));
}

std::string format_timeline(std::string_view audio_id, const LabelTimeline& timeline) {
  std::string out;
  for (const auto& s : timeline) {
    json r{{"audio_id", audio_id}, {"t", s.t}};
    r["hi"] = s.hi ? json(to_string(*s.hi)) : json(nullptr);
    r["lo"] = s.lo ? json(to_string(*s.lo)) : json(nullptr);
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::string weights_to_json(const ClassWeights& weights) {
  json out{{"alpha", weights.alpha}, {"beta", weights.beta}, {"hi", weights.hi}, {"lo", weights.lo},
           {"absent_hi", weights.absent_hi}, {"absent_lo", weights.absent_lo}};
  return out.dump(2);
}

}  // namespace duplex
