#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "duplex/audio_io.hpp"

namespace duplex {

inline constexpr Eigen::Index kAcousticDim = 10;
inline constexpr Eigen::Index kSemanticDim = 7;

// Acoustic layout: log-RMS L/R, voiced fraction L/R, overlap fraction, ZCR L/R,
// L/R energy ratio, delta log-RMS L/R.
// Semantic layout: token count, filler fraction, question mark, imperative-verb
// fraction, first-person fraction, second-person fraction, running type-token ratio.
struct FeaturePair {
  Eigen::VectorXd acoustic;
  Eigen::VectorXd semantic;
};

inline constexpr double kLogRmsFloor = -11.512925464970229;  // log(1e-5)

// Sample range [begin, end) inside an audio buffer, plus the transcript heard in it.
struct Block {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;
};

// One feature pair per block, in order; deltas and the type-token ratio run
// across the block sequence only.
std::vector<FeaturePair> block_features(const DuplexAudio& audio, std::span<const Block> blocks);

// Per-second transcript text, indexed by chunk; may be shorter than the grid.
using Transcript = std::vector<std::string>;

std::vector<FeaturePair> extract_features(const DuplexAudio& audio, const ChunkGrid& grid,
                                          const Transcript* transcript = nullptr);

// Features visible to the emission for chunk i (1-based) under a causal window:
// the audio is cut to the window before anything is computed. A window with no
// samples yields one empty block.
std::vector<FeaturePair> window_features(const DuplexAudio& audio, const Transcript* transcript,
                                         std::size_t i, double window_s, double lookahead_s);

// Precomputed per-second features: the window selects whole seconds
// [max(0, i-1-W), min(N, i-1+L)); an empty selection yields one zero pair.
std::vector<FeaturePair> window_features(std::span<const FeaturePair> per_second, std::size_t i,
                                         double window_s, double lookahead_s);

// Feature import JSONL {audio_id, t, acoustic: [...], semantic: [...]}.
std::map<std::string, std::vector<FeaturePair>> parse_feature_file(std::string_view jsonl);
std::string format_features(std::string_view audio_id, std::span<const FeaturePair> features);

// Transcript JSONL {audio_id, t, text} or {audio_id, t, tokens: [...]}.
std::map<std::string, Transcript> parse_transcripts(std::string_view jsonl);

}  // namespace duplex
