#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "duplex/audio_io.hpp"
#include "duplex/behavior_labels.hpp"

namespace duplex {

enum class Speaker { One = 1, Two = 2 };
enum class ScriptEvent { None, Interruption, Backchannel };

std::string_view to_string(ScriptEvent event);

struct ScriptMarker {
  ScriptEvent kind = ScriptEvent::None;
  std::size_t offset = 0;  // character offset in the cleaned text
};

// One line of a dialogue script: "(N) speakerX[(event)]: body {Intent}".
struct ScriptUtterance {
  int index = 0;  // as written in the script
  Speaker speaker = Speaker::One;
  std::string text;  // bracket markers removed
  HighAct intent = HighAct::Constative;
  ScriptEvent event = ScriptEvent::None;
  std::optional<ScriptMarker> marker;  // marker found inside this utterance
  // For event children: the marker offset inside the previous utterance.
  std::optional<std::size_t> marker_offset;
};

// Throws FormatError with the offending line number.
std::vector<ScriptUtterance> parse_script(std::string_view text);

struct StitchConfig {
  double inter_turn_gap_ms = 200.0;
  double interruption_cut_ms = 300.0;  // parent stays audible until child start + this
  double fade_ms = 50.0;
  double min_overlap_ms = 100.0;  // child start is kept at least this far before the parent ends
};

struct PlannedUtterance {
  std::size_t position = 0;  // 0-based position in the script
  Speaker speaker = Speaker::One;
  int channel = 0;  // 0 left, 1 right
  double start_ms = 0.0;
  double duration_ms = 0.0;
  double audible_end_ms = 0.0;  // start + duration unless cut by an interruption
  std::optional<std::size_t> parent;
  ScriptEvent event = ScriptEvent::None;
  HighAct intent = HighAct::Constative;
  bool truncated = false;

  double end_ms() const { return audible_end_ms; }
};

struct StitchPlan {
  StitchConfig config;
  std::vector<PlannedUtterance> utterances;

  double total_ms() const;
};

StitchPlan plan_timestamps(std::span<const ScriptUtterance> script, std::span<const double> durations_ms,
                           const StitchConfig& config = {});

struct MonoClip {
  int sample_rate = 0;
  std::vector<float> samples;

  double duration_ms() const;
};

// Identity up to 0.5 in magnitude, then a tanh knee that stays below 1.
float soft_clip(float x);

DuplexAudio stitch(const StitchPlan& plan, std::span<const MonoClip> clips);

// Low-level events active in each whole second of the plan.
std::vector<std::vector<LowAct>> events_by_second(const StitchPlan& plan);
LabelTimeline emit_labels(const StitchPlan& plan);

std::string plan_to_json(const StitchPlan& plan);

// Clip manifest JSONL {index, path, duration_ms}; paths relative to the manifest.
struct ClipEntry {
  int index = 0;
  std::filesystem::path path;
  std::optional<double> duration_ms;
};

std::vector<ClipEntry> parse_clip_manifest(std::string_view jsonl, const std::filesystem::path& base_dir);
MonoClip load_clip(const std::filesystem::path& path);

}  // namespace duplex
