#include <atomic>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "duplex/jsonl.hpp"
#include "duplex/rationale_metrics.hpp"
#include "duplex/vad_events.hpp"

namespace duplex::cli {

namespace {

struct FileResult {
  CorpusStats stats;
  std::vector<TurnEvent> events;
  std::string error;
  std::vector<std::string> warnings;
};

FileResult analyze(const fs::path& path, const StatsOptions& opt) {
  FileResult r;
  VadMask mask;
  if (opt.vad_inputs) {
    auto loaded = load_vad_mask(path);
    mask = std::move(loaded.mask);
    r.warnings = std::move(loaded.warnings);
  } else {
    const auto loaded = load_duplex(path);
    if (loaded.mono_duplicated) r.warnings.push_back("mono input duplicated to both channels");
    const auto vad = compute_vad(loaded.audio, opt.frame_ms, opt.vad_threshold);
    for (int c = 0; c < 2; ++c) {
      if (vad.silent_channel[static_cast<std::size_t>(c)]) {
        r.warnings.push_back(std::string(c == 0 ? "left" : "right") + " channel is silent");
      }
    }
    mask = vad.mask;
  }
  r.events = detect_events(mask, opt.min_silence_ms);
  r.stats = corpus_stats(r.events, mask.total_ms());
  return r;
}

}  // namespace

int cmd_stats(const StatsOptions& opt) {
  if (opt.inputs.empty()) throw std::invalid_argument("no input files");
  if (!opt.vad_inputs) {
    if (opt.frame_ms < 10.0 || opt.frame_ms > 50.0) throw std::invalid_argument("--frame-ms must be in [10, 50]");
    if (!(opt.vad_threshold > 0.0 && opt.vad_threshold < 1.0)) {
      throw std::invalid_argument("--vad-threshold must be in (0, 1)");
    }
  }
  if (opt.min_silence_ms < 0.0) throw std::invalid_argument("--min-silence-ms must be non-negative");

  std::vector<FileResult> results(opt.inputs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < opt.inputs.size(); k = next++) {
      try {
        results[k] = analyze(opt.inputs[k], opt);
      } catch (const std::exception& e) {
        results[k].error = e.what();
      }
    }
  };
  const auto jobs = static_cast<std::size_t>(std::max(1, opt.jobs));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < std::min(jobs, opt.inputs.size()); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<CorpusStats> parts;
  std::string events_jsonl;
  bool failed = false;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    for (const auto& w : r.warnings) std::cerr << "warning: " << opt.inputs[k].string() << ": " << w << "\n";
    if (!r.error.empty()) {
      std::cerr << "error: " << opt.inputs[k].string() << ": " << r.error << "\n";
      failed = true;
      continue;
    }
    parts.push_back(r.stats);
    if (opt.events_out) {
      for (const auto& line : parse_jsonl(events_to_jsonl(r.events))) {
        json rec = line;
        rec["file"] = opt.inputs[k].filename().string();
        events_jsonl += rec.dump() + "\n";
      }
    }
  }
  if (parts.empty()) throw std::runtime_error("no valid inputs");

  const CorpusStats merged = merge_stats(parts);
  std::cout << stats_to_table(merged);
  if (opt.out) write_text(*opt.out, stats_to_json(merged));
  if (opt.events_out) write_text(*opt.events_out, events_jsonl);

  if (opt.transcripts) {
    const auto transcripts = parse_transcripts(read_text(*opt.transcripts));
    const auto lexicon = opt.filler_lexicon ? load_filler_lexicon(*opt.filler_lexicon) : default_filler_lexicon();
    TokenizedText all;
    for (std::size_t k = 0; k < opt.inputs.size(); ++k) {
      if (!results[k].error.empty()) continue;
      auto it = transcripts.find(opt.inputs[k].stem().string());
      if (it == transcripts.end()) continue;
      for (const auto& text : it->second) {
        auto toks = tokenize(text);
        all.tokens.insert(all.tokens.end(), toks.tokens.begin(), toks.tokens.end());
      }
    }
    const auto style = speaking_style(all, merged.total_duration_s, lexicon);
    std::cout << "\n" << style_table(style);
  }
  return failed ? 1 : 0;
}

void register_stats(CLI::App& app) {
  auto opt = std::make_shared<StatsOptions>();
  auto* sub = app.add_subcommand("stats", "turn-taking event statistics (IPU / Pause / Gap / Overlap)");
  sub->add_option("inputs", opt->inputs, "stereo WAV files, or VAD JSONL with --vad-jsonl")->required();
  sub->add_flag("--vad-jsonl", opt->vad_inputs, "inputs are precomputed VAD masks");
  sub->add_option("--frame-ms", opt->frame_ms)->capture_default_str();
  sub->add_option("--vad-threshold", opt->vad_threshold, "fraction of the channel's p95 frame RMS")
      ->capture_default_str();
  sub->add_option("--min-silence-ms", opt->min_silence_ms, "silences up to this merge into one IPU")
      ->capture_default_str();
  sub->add_option("--jobs", opt->jobs)->capture_default_str();
  sub->add_option("--out", opt->out, "JSON report");
  sub->add_option("--events-out", opt->events_out, "per-event JSONL");
  sub->add_option("--transcripts", opt->transcripts, "transcript JSONL keyed by file stem, for WPM/FWR");
  sub->add_option("--filler-lexicon", opt->filler_lexicon, "one filler entry per line");
  sub->callback([opt] { command_status() = cmd_stats(*opt); });
}

}  // namespace duplex::cli
