#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "duplex/behavior_labels.hpp"
#include "duplex/corpus_stitcher.hpp"
#include "duplex/features.hpp"
#include "duplex/thought_graph.hpp"
#include "duplex/vad_events.hpp"

namespace fixtures {

using Interval = std::pair<double, double>;  // [start_ms, end_ms)

// Mask whose frame f is voiced iff f * frame_ms lies in one of the intervals.
duplex::VadMask mask_from_intervals(const std::vector<Interval>& left, const std::vector<Interval>& right,
                                    double total_ms, double frame_ms = 20.0);

duplex::VadMask random_mask(std::mt19937_64& rng, std::size_t frames, double frame_ms = 20.0);

// Frame-by-frame reference implementation of IPU / Pause / Gap / Overlap.
std::vector<duplex::TurnEvent> naive_events(const duplex::VadMask& mask, double min_silence_ms = 200.0);

// A = I + sum e_s e_o^T by explicit pair counting over an independently built node order.
struct BruteGraph {
  std::vector<std::string> labels;
  std::vector<std::vector<int>> a;
};
BruteGraph brute_force_graph(const std::vector<duplex::Triple>& triples, duplex::HighAct hi, duplex::LowAct lo);

std::vector<duplex::Triple> random_triples(std::mt19937_64& rng, std::size_t max_triples, std::size_t max_spans,
                                          bool allow_reflexive = true);

duplex::MonoClip tone(int rate, double ms, double freq_hz, double amp);

// Script of n utterances with at least one backchannel and one interruption.
std::string random_script(std::mt19937_64& rng, int n);

// Stereo stream of a few seconds with bursts of tones and noise on both channels.
duplex::DuplexAudio random_stream(std::mt19937_64& rng, int rate, double seconds);

// Per-second features whose high label is encoded in acoustic dims 0-3 and whose
// low label is encoded in acoustic dims 4-7 (cluster centres `sep` apart).
struct ToyData {
  std::vector<duplex::FeaturePair> features;
  duplex::LabelTimeline labels;
};
ToyData toy_separable(std::size_t seconds, std::uint64_t seed, double sep = 3.0, double noise = 0.3);
// Only Continuation (majority) and Backchannel (minority) low labels, ratio ~ ratio:1.
ToyData toy_imbalanced(std::size_t seconds, std::uint64_t seed, double ratio, double sep, double noise);

// features.jsonl + labels.jsonl + manifest.jsonl under dir; returns the manifest path.
std::filesystem::path write_toy_dataset(const std::filesystem::path& dir, const std::vector<ToyData>& items,
                                        const std::vector<std::string>& splits = {});

std::filesystem::path temp_dir(const std::string& name);

}  // namespace fixtures
