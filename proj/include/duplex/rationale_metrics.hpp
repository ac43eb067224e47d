#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace duplex {

// Lowercased word tokens; punctuation stripped except intra-word hyphens and
// apostrophes.
struct TokenizedText {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

TokenizedText tokenize(std::string_view text);

double bleu1(const TokenizedText& candidate, const TokenizedText& reference);
double rouge1(const TokenizedText& candidate, const TokenizedText& reference);
double rougeL(const TokenizedText& candidate, const TokenizedText& reference);
std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct Similarity {
  double value = 0.0;
  bool zero_vector = false;
};

// Throws std::invalid_argument on dimension mismatch.
Similarity cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
// Term-frequency vectors over the union vocabulary.
Similarity tf_cosine(const TokenizedText& a, const TokenizedText& b);

struct ScoredPrediction {
  std::size_t true_class = 0;
  Eigen::VectorXd scores;
};

struct ClassMetrics {
  std::size_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;
};

struct MetricReport {
  std::vector<std::string> class_names;
  std::vector<ClassMetrics> per_class;
  double macro_f1 = 0.0;
  double weighted_f1 = 0.0;
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  std::optional<double> macro_auc;
  std::vector<std::size_t> auc_excluded;
  std::size_t examples = 0;
};

// Argmax of scores is the predicted class (first index on ties).
MetricReport classification_report(std::span<const ScoredPrediction> preds, std::size_t n_classes,
                                   std::vector<std::string> class_names = {});

// One-vs-rest ROC-AUC for binary labels via the trapezoidal ROC curve; tied
// scores form a single threshold step. nullopt if a side is empty.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

std::string report_to_json(const MetricReport& report);
std::string report_to_text(const MetricReport& report);

// Default lexicon; "you know" is a bigram entry.
std::vector<std::string> default_filler_lexicon();
std::vector<std::string> load_filler_lexicon(const std::filesystem::path& path);

struct SpeakingStyle {
  double wpm = 0.0;
  std::optional<double> fwr;
  std::size_t tokens = 0;
  std::size_t fillers = 0;
};

// Filler occurrences are matched greedily left to right; a multi-word entry
// counts as one occurrence.
SpeakingStyle speaking_style(const TokenizedText& transcript, double duration_s,
                             std::span<const std::string> filler_lexicon);
std::size_t count_fillers(const TokenizedText& transcript, std::span<const std::string> filler_lexicon);

struct StyleReference {
  std::string_view name;
  double wpm;
  double fwr;
};
inline constexpr StyleReference kSimulationStyle{"Simulation Data", 240.8, 6.89};
inline constexpr StyleReference kDgslmStyle{"dGSLM (DLM-5)", 211.98, 5.5};

std::string style_table(const SpeakingStyle& measured, std::string_view label = "This corpus");

// Rationale alignment keyed by (audio_id, t).
struct RationaleRecord {
  std::string audio_id;
  int t = 0;
  std::string text;
  std::optional<Eigen::VectorXd> embedding;
};

std::vector<RationaleRecord> parse_rationales(std::string_view jsonl, std::string_view text_field);

struct PairScore {
  std::string audio_id;
  int t = 0;
  double bleu1 = 0.0;
  double rouge1 = 0.0;
  double rougeL = 0.0;
  double similarity = 0.0;
};

struct MeanCI {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n = 0;
};

// Normal-approximation 95% interval: mean +- 1.96 * s / sqrt(n), s the sample sd.
MeanCI mean_ci(std::span<const double> values);

struct AlignmentReport {
  std::vector<PairScore> pairs;
  std::vector<std::pair<std::string, int>> orphan_predictions;
  std::vector<std::pair<std::string, int>> orphan_references;
  std::map<std::string, MeanCI> item_means;
  // Populated when several prediction runs (seeds) are supplied.
  std::map<std::string, MeanCI> seed_means;
};

AlignmentReport align_and_score(std::span<const std::vector<RationaleRecord>> prediction_runs,
                                std::span<const RationaleRecord> references);
AlignmentReport align_and_score(std::span<const RationaleRecord> predictions,
                                std::span<const RationaleRecord> references);

std::string alignment_to_json(const AlignmentReport& report);
std::string alignment_to_text(const AlignmentReport& report);

}  // namespace duplex
