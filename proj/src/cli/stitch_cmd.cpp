#include <cmath>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "duplex/corpus_stitcher.hpp"
#include "duplex/jsonl.hpp"

namespace duplex::cli {

int cmd_stitch(const StitchOptions& opt) {
  const auto script = parse_script(read_text(opt.script));
  if (script.empty()) throw std::invalid_argument("script has no utterances");
  const auto entries = parse_clip_manifest(read_text(opt.clips), opt.clips.parent_path());
  if (entries.size() != script.size()) {
    throw std::invalid_argument("clip manifest lists " + std::to_string(entries.size()) + " clips for " +
                                std::to_string(script.size()) + " utterances");
  }
  std::vector<MonoClip> clips;
  std::vector<double> durations;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (entries[k].index != script[k].index) {
      throw std::invalid_argument("clip index " + std::to_string(entries[k].index) + " does not match utterance " +
                                  std::to_string(script[k].index));
    }
    clips.push_back(load_clip(entries[k].path));
    const double measured = clips.back().duration_ms();
    if (entries[k].duration_ms && std::abs(*entries[k].duration_ms - measured) > 1.0) {
      std::cerr << "warning: clip " << entries[k].index << " declares " << *entries[k].duration_ms
                << " ms but holds " << measured << " ms; using the audio length\n";
    }
    durations.push_back(measured);
  }
  StitchConfig config;
  config.inter_turn_gap_ms = opt.gap_ms;
  config.interruption_cut_ms = opt.cut_ms;
  const StitchPlan plan = plan_timestamps(script, durations, config);
  write_duplex(opt.out_wav, stitch(plan, clips));
  if (opt.out_labels) write_text(*opt.out_labels, format_timeline(opt.audio_id, emit_labels(plan)));
  if (opt.out_plan) write_text(*opt.out_plan, plan_to_json(plan));
  return 0;
}

void register_stitch(CLI::App& app) {
  auto opt = std::make_shared<StitchOptions>();
  auto* sub = app.add_subcommand("stitch", "assemble two-channel overlapped dialogue from a script and clips");
  sub->add_option("--script", opt->script, "dialogue script")->required();
  sub->add_option("--clips", opt->clips, "clip manifest JSONL {index, path, duration_ms}")->required();
  sub->add_option("--out", opt->out_wav, "stereo WAV")->required();
  sub->add_option("--labels-out", opt->out_labels, "per-second label timeline JSONL");
  sub->add_option("--plan-out", opt->out_plan, "placement plan JSON");
  sub->add_option("--audio-id", opt->audio_id)->capture_default_str();
  sub->add_option("--gap-ms", opt->gap_ms, "silence between sequential turns")->capture_default_str();
  sub->add_option("--cut-ms", opt->cut_ms, "interrupted speaker keeps talking this long")->capture_default_str();
  sub->callback([opt] { command_status() = cmd_stitch(*opt); });
}

}  // namespace duplex::cli
