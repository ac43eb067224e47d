#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracles {

using Tokens = std::vector<std::string>;

inline std::map<std::string, int> counts(const Tokens& t) {
  std::map<std::string, int> m;
  for (const auto& w : t) ++m[w];
  return m;
}

inline int clipped(const Tokens& cand, const Tokens& ref) {
  const auto c = counts(cand), r = counts(ref);
  int n = 0;
  for (const auto& [w, k] : c) {
    auto it = r.find(w);
    if (it != r.end()) n += std::min(k, it->second);
  }
  return n;
}

inline double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

inline double bleu1(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  const double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * clipped(cand, ref) / c;
}

inline double rouge1(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  const double m = clipped(cand, ref);
  return f1(m / static_cast<double>(cand.size()), m / static_cast<double>(ref.size()));
}

// Memoized recursion on suffixes.
inline std::size_t lcs(const Tokens& a, const Tokens& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t v = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    return memo[key] = v;
  };
  return go(0, 0);
}

inline double rougeL(const Tokens& cand, const Tokens& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  const double m = static_cast<double>(lcs(cand, ref));
  return f1(m / static_cast<double>(cand.size()), m / static_cast<double>(ref.size()));
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / std::sqrt(aa * bb);
}

// Mann-Whitney: fraction of (positive, negative) pairs ranked correctly, ties count 1/2.
inline double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& pos) {
  double good = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1;
      good += scores[i] > scores[j] ? 1.0 : scores[i] == scores[j] ? 0.5 : 0.0;
    }
  }
  return good / pairs;
}

struct F1Scores {
  std::vector<double> per_class;
  double macro = 0, micro = 0, weighted = 0;
};

inline F1Scores f1_scores(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& pred,
                          std::size_t k) {
  F1Scores out;
  double total_tp = 0, total_fp = 0, total_fn = 0, weighted = 0;
  for (std::size_t c = 0; c < k; ++c) {
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      tp += truth[i] == c && pred[i] == c;
      fp += truth[i] != c && pred[i] == c;
      fn += truth[i] == c && pred[i] != c;
      support += truth[i] == c;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    out.per_class.push_back(f1(p, r));
    weighted += support * out.per_class.back();
    total_tp += tp;
    total_fp += fp;
    total_fn += fn;
  }
  for (double v : out.per_class) out.macro += v / static_cast<double>(k);
  out.micro = f1(total_tp / (total_tp + total_fp), total_tp / (total_tp + total_fn));
  out.weighted = weighted / static_cast<double>(truth.size());
  return out;
}

}  // namespace oracles
