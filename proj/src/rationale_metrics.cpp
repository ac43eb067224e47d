#include "duplex/rationale_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "duplex/jsonl.hpp"

namespace duplex {

namespace {

bool word_char(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::unordered_map<std::string, std::size_t> counts(const TokenizedText& t) {
  std::unordered_map<std::string, std::size_t> m;
  for (const auto& w : t.tokens) ++m[w];
  return m;
}

std::size_t clipped_overlap(const TokenizedText& candidate, const TokenizedText& reference) {
  const auto ref = counts(reference);
  std::size_t overlap = 0;
  for (const auto& [w, c] : counts(candidate)) {
    if (auto it = ref.find(w); it != ref.end()) overlap += std::min(c, it->second);
  }
  return overlap;
}

double f_measure(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

TokenizedText tokenize(std::string_view text) {
  TokenizedText out;
  std::string current;
  auto flush = [&] {
    const auto first = current.find_first_not_of("-'");
    if (first != std::string::npos) {
      const auto last = current.find_last_not_of("-'");
      out.tokens.push_back(current.substr(first, last - first + 1));
    }
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (word_char(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if ((c == '-' || c == '\'') && !current.empty()) {
      current.push_back(ch);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

double bleu1(const TokenizedText& candidate, const TokenizedText& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double precision = static_cast<double>(clipped_overlap(candidate, reference)) / c;
  const double bp = std::exp(std::min(0.0, 1.0 - r / c));
  return precision * bp;
}

double rouge1(const TokenizedText& candidate, const TokenizedText& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const double overlap = static_cast<double>(clipped_overlap(candidate, reference));
  return f_measure(overlap / static_cast<double>(candidate.size()),
                   overlap / static_cast<double>(reference.size()));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rougeL(const TokenizedText& candidate, const TokenizedText& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(candidate.tokens, reference.tokens));
  return f_measure(lcs / static_cast<double>(candidate.size()),
                   lcs / static_cast<double>(reference.size()));
}

Similarity cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding dimensions differ");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  return {std::clamp(a.dot(b) / (na * nb), -1.0, 1.0), false};
}

Similarity tf_cosine(const TokenizedText& a, const TokenizedText& b) {
  std::unordered_map<std::string, Eigen::Index> vocab;
  for (const auto* t : {&a, &b}) {
    for (const auto& w : t->tokens) vocab.emplace(w, static_cast<Eigen::Index>(vocab.size()));
  }
  Eigen::VectorXd va = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab.size()));
  Eigen::VectorXd vb = va;
  for (const auto& w : a.tokens) va(vocab.at(w)) += 1.0;
  for (const auto& w : b.tokens) vb(vocab.at(w)) += 1.0;
  return cosine_similarity(va, vb);
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) throw std::invalid_argument("score/label length mismatch");
  const auto n_pos = static_cast<double>(std::count(positive.begin(), positive.end(), 1));
  const double n_neg = static_cast<double>(positive.size()) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return scores[x] > scores[y]; });

  double area = 0.0;
  double tp = 0.0, fp = 0.0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double threshold = scores[order[k]];
    double dtp = 0.0, dfp = 0.0;
    while (k < order.size() && scores[order[k]] == threshold) {
      (positive[order[k]] ? dtp : dfp) += 1.0;
      ++k;
    }
    // trapezoid between (fp, tp) and (fp + dfp, tp + dtp)
    area += dfp * (tp + 0.5 * dtp);
    tp += dtp;
    fp += dfp;
  }
  return area / (n_pos * n_neg);
}

MetricReport classification_report(std::span<const ScoredPrediction> preds, std::size_t n_classes,
                                   std::vector<std::string> class_names) {
  if (preds.empty()) throw std::invalid_argument("classification report needs at least one example");
  if (n_classes == 0) throw std::invalid_argument("class count must be positive");
  MetricReport rep;
  rep.examples = preds.size();
  rep.class_names = std::move(class_names);
  if (rep.class_names.empty()) {
    for (std::size_t c = 0; c < n_classes; ++c) rep.class_names.push_back(std::to_string(c));
  }
  if (rep.class_names.size() != n_classes) throw std::invalid_argument("class name count mismatch");

  std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  std::size_t correct = 0;
  for (const auto& p : preds) {
    if (static_cast<std::size_t>(p.scores.size()) != n_classes) {
      throw std::invalid_argument("score vector length differs from class count");
    }
    if (p.true_class >= n_classes) throw std::invalid_argument("true class out of range");
    Eigen::Index arg = 0;
    p.scores.maxCoeff(&arg);
    const auto pred = static_cast<std::size_t>(arg);
    if (pred == p.true_class) {
      ++tp[pred];
      ++correct;
    } else {
      ++fp[pred];
      ++fn[p.true_class];
    }
  }

  rep.per_class.resize(n_classes);
  double f1_sum = 0.0, weighted = 0.0;
  std::vector<double> aucs;
  std::vector<double> column(preds.size());
  std::vector<std::uint8_t> positive(preds.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    auto& m = rep.per_class[c];
    m.support = tp[c] + fn[c];
    m.precision = tp[c] + fp[c] > 0 ? static_cast<double>(tp[c]) / static_cast<double>(tp[c] + fp[c]) : 0.0;
    m.recall = m.support > 0 ? static_cast<double>(tp[c]) / static_cast<double>(m.support) : 0.0;
    m.f1 = f_measure(m.precision, m.recall);
    f1_sum += m.f1;
    weighted += m.f1 * static_cast<double>(m.support);

    for (std::size_t i = 0; i < preds.size(); ++i) {
      column[i] = preds[i].scores(static_cast<Eigen::Index>(c));
      positive[i] = preds[i].true_class == c ? 1 : 0;
    }
    m.auc = roc_auc(column, positive);
    if (m.auc) {
      aucs.push_back(*m.auc);
    } else {
      rep.auc_excluded.push_back(c);
    }
  }
  const double n = static_cast<double>(preds.size());
  rep.macro_f1 = f1_sum / static_cast<double>(n_classes);
  rep.weighted_f1 = weighted / n;
  const double sum_tp = static_cast<double>(correct);
  const double sum_fp = std::accumulate(fp.begin(), fp.end(), 0.0);
  const double sum_fn = std::accumulate(fn.begin(), fn.end(), 0.0);
  rep.micro_f1 = f_measure(sum_tp / (sum_tp + sum_fp), sum_tp / (sum_tp + sum_fn));
  rep.accuracy = sum_tp / n;
  if (!aucs.empty()) {
    rep.macro_auc = std::accumulate(aucs.begin(), aucs.end(), 0.0) / static_cast<double>(aucs.size());
  }
  return rep;
}

std::string report_to_json(const MetricReport& report) {
  json classes = json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    classes.push_back({{"class", report.class_names[c]},
                       {"support", m.support},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"auc", m.auc ? json(*m.auc) : json(nullptr)}});
  }
  json excluded = json::array();
  for (auto c : report.auc_excluded) excluded.push_back(report.class_names[c]);
  json out{{"examples", report.examples},
           {"per_class", classes},
           {"macro_f1", report.macro_f1},
           {"weighted_f1", report.weighted_f1},
           {"micro_f1", report.micro_f1},
           {"accuracy", report.accuracy},
           {"macro_auc_ovr", report.macro_auc ? json(*report.macro_auc) : json(nullptr)},
           {"auc_excluded", excluded}};
  return out.dump(2);
}

std::string report_to_text(const MetricReport& report) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %8s %10s %8s %8s %8s\n", "class", "support", "precision",
                "recall", "f1", "auc");
  os << buf;
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const auto& m = report.per_class[c];
    char auc[16];
    if (m.auc) {
      std::snprintf(auc, sizeof auc, "%.4f", *m.auc);
    } else {
      std::snprintf(auc, sizeof auc, "n/a");
    }
    std::snprintf(buf, sizeof buf, "%-16s %8zu %10.4f %8.4f %8.4f %8s\n", report.class_names[c].c_str(),
                  m.support, m.precision, m.recall, m.f1, auc);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "macro_F1 %.4f  weighted_F1 %.4f  micro_F1 %.4f", report.macro_f1,
                report.weighted_f1, report.micro_f1);
  os << buf;
  if (report.macro_auc) {
    std::snprintf(buf, sizeof buf, "  macro_AUC_OvR %.4f", *report.macro_auc);
    os << buf;
  }
  os << '\n';
  return os.str();
}

std::vector<std::string> default_filler_lexicon() {
  return {"uh-huh", "yeah", "okay", "um", "uh", "mm-hmm", "like", "you know", "right", "hmm"};
}

std::vector<std::string> load_filler_lexicon(const std::filesystem::path& path) {
  std::vector<std::string> out;
  std::istringstream in(read_text(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto tokens = tokenize(line.substr(0, line.find('#'))).tokens;
    if (tokens.empty()) continue;
    std::string entry;
    for (const auto& t : tokens) entry += (entry.empty() ? "" : " ") + t;
    out.push_back(entry);
  }
  return out;
}

std::size_t count_fillers(const TokenizedText& transcript, std::span<const std::string> filler_lexicon) {
  std::vector<std::vector<std::string>> entries;
  for (const auto& e : filler_lexicon) {
    auto t = tokenize(e).tokens;
    if (!t.empty()) entries.push_back(std::move(t));
  }
  // longer entries first so "you know" is not shadowed by a unigram
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  const auto& toks = transcript.tokens;
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t matched = 0;
    for (const auto& e : entries) {
      if (i + e.size() <= toks.size() && std::equal(e.begin(), e.end(), toks.begin() + static_cast<std::ptrdiff_t>(i))) {
        matched = e.size();
        break;
      }
    }
    if (matched > 0) {
      ++count;
      i += matched;
    } else {
      ++i;
    }
  }
  return count;
}

SpeakingStyle speaking_style(const TokenizedText& transcript, double duration_s,
                             std::span<const std::string> filler_lexicon) {
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
  SpeakingStyle s;
  s.tokens = transcript.size();
  s.wpm = 60.0 * static_cast<double>(s.tokens) / duration_s;
  if (s.tokens > 0) {
    s.fillers = count_fillers(transcript, filler_lexicon);
    s.fwr = 100.0 * static_cast<double>(s.fillers) / static_cast<double>(s.tokens);
  }
  return s;
}

std::string style_table(const SpeakingStyle& measured, std::string_view label) {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-20s %10s %8s\n", "Method", "WPM", "FWR");
  os << buf;
  for (const auto& ref : {kDgslmStyle, kSimulationStyle}) {
    std::snprintf(buf, sizeof buf, "%-20s %10.2f %8.2f   (reference)\n", std::string(ref.name).c_str(),
                  ref.wpm, ref.fwr);
    os << buf;
  }
  if (measured.fwr) {
    std::snprintf(buf, sizeof buf, "%-20s %10.2f %8.2f\n", std::string(label).c_str(), measured.wpm,
                  *measured.fwr);
  } else {
    std::snprintf(buf, sizeof buf, "%-20s %10.2f %8s\n", std::string(label).c_str(), measured.wpm, "n/a");
  }
  os << buf;
  return os.str();
}

std::vector<RationaleRecord> parse_rationales(std::string_view jsonl, std::string_view text_field) {
  std::vector<RationaleRecord> out;
  for (const auto& r : parse_jsonl(jsonl)) {
    RationaleRecord rec;
    rec.audio_id = require(r, "audio_id").get<std::string>();
    rec.t = require(r, "t").get<int>();
    rec.text = require(r, text_field).get<std::string>();
    if (r.contains("embedding")) {
      const auto v = r.at("embedding").get<std::vector<double>>();
      rec.embedding = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

MeanCI mean_ci(std::span<const double> values) {
  MeanCI ci;
  ci.n = values.size();
  if (values.empty()) return ci;
  const double n = static_cast<double>(values.size());
  ci.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double half = 0.0;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - ci.mean) * (v - ci.mean);
    half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  ci.lower = ci.mean - half;
  ci.upper = ci.mean + half;
  return ci;
}

namespace {

using Key = std::pair<std::string, int>;

constexpr std::array<const char*, 4> kTextMetrics{"bleu1", "rouge1", "rougeL", "similarity"};

std::array<double, 4> metric_values(const PairScore& p) {
  return {p.bleu1, p.rouge1, p.rougeL, p.similarity};
}

}  // namespace

AlignmentReport align_and_score(std::span<const std::vector<RationaleRecord>> prediction_runs,
                                std::span<const RationaleRecord> references) {
  std::map<Key, const RationaleRecord*> ref_index;
  for (const auto& r : references) ref_index[{r.audio_id, r.t}] = &r;

  AlignmentReport rep;
  std::set<Key> matched_refs;
  std::set<Key> orphan_preds;
  std::vector<std::array<double, 4>> run_means;
  for (const auto& run : prediction_runs) {
    std::array<std::vector<double>, 4> per_metric;
    for (const auto& p : run) {
      const Key key{p.audio_id, p.t};
      auto it = ref_index.find(key);
      if (it == ref_index.end()) {
        orphan_preds.insert(key);
        continue;
      }
      matched_refs.insert(key);
      const auto cand = tokenize(p.text);
      const auto ref = tokenize(it->second->text);
      PairScore s{p.audio_id, p.t, bleu1(cand, ref), rouge1(cand, ref), rougeL(cand, ref), 0.0};
      if (p.embedding && it->second->embedding) {
        s.similarity = cosine_similarity(*p.embedding, *it->second->embedding).value;
      } else {
        s.similarity = tf_cosine(cand, ref).value;
      }
      const auto vals = metric_values(s);
      for (std::size_t m = 0; m < 4; ++m) per_metric[m].push_back(vals[m]);
      rep.pairs.push_back(std::move(s));
    }
    if (!per_metric[0].empty()) {
      std::array<double, 4> means{};
      for (std::size_t m = 0; m < 4; ++m) means[m] = mean_ci(per_metric[m]).mean;
      run_means.push_back(means);
    }
  }
  if (rep.pairs.empty()) throw std::invalid_argument("no (audio_id, t) keys in common");

  rep.orphan_predictions.assign(orphan_preds.begin(), orphan_preds.end());
  for (const auto& [key, rec] : ref_index) {
    if (!matched_refs.count(key)) rep.orphan_references.push_back(key);
  }
  for (std::size_t m = 0; m < 4; ++m) {
    std::vector<double> items;
    for (const auto& p : rep.pairs) items.push_back(metric_values(p)[m]);
    rep.item_means[kTextMetrics[m]] = mean_ci(items);
    if (prediction_runs.size() > 1) {
      std::vector<double> seeds;
      for (const auto& r : run_means) seeds.push_back(r[m]);
      rep.seed_means[kTextMetrics[m]] = mean_ci(seeds);
    }
  }
  return rep;
}

AlignmentReport align_and_score(std::span<const RationaleRecord> predictions,
                                std::span<const RationaleRecord> references) {
  std::vector<std::vector<RationaleRecord>> runs{
      std::vector<RationaleRecord>(predictions.begin(), predictions.end())};
  return align_and_score(std::span<const std::vector<RationaleRecord>>(runs), references);
}

std::string alignment_to_json(const AlignmentReport& report) {
  auto ci_json = [](const std::map<std::string, MeanCI>& m) {
    json o = json::object();
    for (const auto& [k, v] : m) {
      o[k] = {{"mean", v.mean}, {"ci95", {v.lower, v.upper}}, {"n", v.n}};
    }
    return o;
  };
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"audio_id", p.audio_id}, {"t", p.t}, {"bleu1", p.bleu1}, {"rouge1", p.rouge1},
                     {"rougeL", p.rougeL}, {"similarity", p.similarity}});
  }
  auto keys = [](const std::vector<std::pair<std::string, int>>& v) {
    json a = json::array();
    for (const auto& [id, t] : v) a.push_back({{"audio_id", id}, {"t", t}});
    return a;
  };
  json out{{"means", ci_json(report.item_means)},
           {"pairs", pairs},
           {"orphan_predictions", keys(report.orphan_predictions)},
           {"orphan_references", keys(report.orphan_references)}};
  if (!report.seed_means.empty()) out["seed_means"] = ci_json(report.seed_means);
  return out.dump(2);
}

std::string alignment_to_text(const AlignmentReport& report) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %8s %18s %6s\n", "metric", "mean", "95% CI", "n");
  os << buf;
  for (const auto* name : kTextMetrics) {
    const auto& ci = report.item_means.at(name);
    std::snprintf(buf, sizeof buf, "%-12s %8.4f   [%6.4f, %6.4f] %6zu\n", name, ci.mean, ci.lower,
                  ci.upper, ci.n);
    os << buf;
  }
  os << "orphan predictions: " << report.orphan_predictions.size()
     << ", orphan references: " << report.orphan_references.size() << '\n';
  return os.str();
}

}  // namespace duplex
