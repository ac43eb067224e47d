#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace duplex {

enum class HighAct { Constative = 0, Directive = 1, Commissive = 2, Acknowledgment = 3 };
enum class LowAct { TurnTaking = 0, Interruption = 1, Backchannel = 2, Continuation = 3 };

inline constexpr std::size_t kHighClasses = 4;

std::string_view to_string(HighAct act);
std::string_view to_string(LowAct act);
// Accepts the canonical names plus the plural intent tags used in dialogue scripts
// ("Constatives", "Acknowledgments", ...), case-insensitively.
std::optional<HighAct> parse_high_act(std::string_view name);
std::optional<LowAct> parse_low_act(std::string_view name);

// Low-level head layout. Three-class mode drops Interruption (corpora without
// interruption labels).
enum class LowScheme { FourClass, ThreeClass };

std::size_t low_class_count(LowScheme scheme);
// Class index of an act under a scheme; nullopt if the scheme cannot represent it.
std::optional<std::size_t> low_class_index(LowAct act, LowScheme scheme);
LowAct low_act_from_index(std::size_t index, LowScheme scheme);

struct SecondLabel {
  int t = 0;
  std::optional<HighAct> hi;
  std::optional<LowAct> lo;

  friend bool operator==(const SecondLabel&, const SecondLabel&) = default;
};

// Per-second labels with t = 0, 1, 2, ...; missing labels are explicit.
class LabelTimeline {
 public:
  LabelTimeline() = default;
  explicit LabelTimeline(std::vector<SecondLabel> seconds);

  void push_back(std::optional<HighAct> hi, std::optional<LowAct> lo);

  std::size_t size() const { return seconds_.size(); }
  bool empty() const { return seconds_.empty(); }
  const SecondLabel& operator[](std::size_t i) const { return seconds_[i]; }
  auto begin() const { return seconds_.begin(); }
  auto end() const { return seconds_.end(); }
  std::span<const SecondLabel> seconds() const { return seconds_; }

  friend bool operator==(const LabelTimeline&, const LabelTimeline&) = default;

 private:
  std::vector<SecondLabel> seconds_;
};

// Highest-priority event among those overlapping one second:
// Backchannel > Interruption > TurnTaking > Continuation; empty -> Continuation.
LowAct resolve_low_label(std::span<const LowAct> events);

struct ClassWeights {
  std::vector<double> hi;
  std::vector<double> lo;
  double alpha = 1.0;
  double beta = 1.0;
  // Class indices that had zero training examples (weight fell back to the max).
  std::vector<std::size_t> absent_hi;
  std::vector<std::size_t> absent_lo;

  static ClassWeights uniform(LowScheme scheme = LowScheme::FourClass);
};

// Raw weight N/count(c); absent classes take the max raw weight; rescaled so the
// label-frequency-weighted mean is 1 (sum_c count_c * w_c / N == 1).
std::vector<double> inverse_frequency(std::span<const std::size_t> counts,
                                      std::vector<std::size_t>* absent = nullptr);

ClassWeights inverse_frequency_weights(std::span<const LabelTimeline> timelines,
                                       LowScheme scheme = LowScheme::FourClass);
ClassWeights inverse_frequency_weights(const LabelTimeline& timeline,
                                       LowScheme scheme = LowScheme::FourClass);

// Weighted negative log-likelihood over labeled seconds. Rows of p_hi / p_lo are
// per-second distributions; probabilities are clamped below at 1e-12.
double weighted_ce_loss(const Eigen::MatrixXd& p_hi, const Eigen::MatrixXd& p_lo,
                        const LabelTimeline& timeline, const ClassWeights& weights,
                        LowScheme scheme = LowScheme::FourClass);

// Percentage of each low-level class among labeled seconds, in class-index order.
std::vector<double> event_distribution(const LabelTimeline& timeline,
                                       LowScheme scheme = LowScheme::FourClass);
std::vector<double> event_distribution(std::span<const std::size_t> counts);

std::vector<std::size_t> low_counts(std::span<const LabelTimeline> timelines, LowScheme scheme);
std::vector<std::size_t> high_counts(std::span<const LabelTimeline> timelines);

// Timeline JSONL: {"audio_id", "t", "hi", "lo"} with enum names or null.
std::map<std::string, LabelTimeline> parse_timelines(std::string_view jsonl);
std::map<std::string, LabelTimeline> read_timelines(const std::filesystem::path& path);
std::string format_timeline(std::string_view audio_id, const LabelTimeline& timeline);

std::string weights_to_json(const ClassWeights& weights);

}  // namespace duplex
