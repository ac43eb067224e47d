#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "duplex/behavior_labels.hpp"
#include "duplex/detector.hpp"
#include "duplex/features.hpp"
#include "duplex/training.hpp"

namespace CLI {
class App;
}

namespace duplex::cli {

namespace fs = std::filesystem;

// Dataset manifest JSONL {audio_id, wav, labels, transcripts?, features?, split?};
// paths are relative to the manifest's directory.
struct ManifestEntry {
  std::string audio_id;
  std::optional<fs::path> wav;
  std::optional<fs::path> labels;
  std::optional<fs::path> transcripts;
  std::optional<fs::path> features;
  std::string split;
};

std::vector<ManifestEntry> load_manifest(const fs::path& path);

struct DatasetItem {
  std::string audio_id;
  std::optional<DuplexAudio> audio;
  std::optional<Transcript> transcript;
  std::optional<std::vector<FeaturePair>> features;  // imported per-second features
  std::optional<LabelTimeline> labels;
  std::size_t seconds = 0;
};

DatasetItem load_item(const ManifestEntry& entry, bool need_labels);
std::vector<DatasetItem> load_items(const std::vector<ManifestEntry>& entries, bool need_labels);
// Items whose split equals the wanted one; an empty split matches everything.
std::vector<ManifestEntry> select_split(const std::vector<ManifestEntry>& entries, const std::string& split);

std::vector<TrainingSequence> item_sequences(const DatasetItem& item, double window_s, double lookahead_s);
StreamPrediction item_predict(const DatasetItem& item, const DetectorParams& params, double window_s,
                              double lookahead_s);
// Mean accessible window length in seconds over the item's emissions.
double mean_context_s(const DatasetItem& item, double window_s, double lookahead_s);

struct DetectorOptions {
  double window_s = 30.0;
  double lookahead_s = 0.0;
  std::string context = "none";
  int classes_lo = 4;
  std::uint64_t seed = 42;
  int epochs = 10;
  double learning_rate = 3e-4;
  double grad_clip = 1.0;
  double weight_decay = 0.0;
  double ema_decay = 0.5;
  int fused_dim = 16;
  std::size_t batch_size = 0;
  bool unweighted = false;
  std::string optimizer = "adam";

  void validate() const;
  TrainConfig train_config() const;
  LowScheme scheme() const { return classes_lo == 3 ? LowScheme::ThreeClass : LowScheme::FourClass; }
};

struct StatsOptions {
  std::vector<fs::path> inputs;
  bool vad_inputs = false;
  double frame_ms = 20.0;
  double vad_threshold = 0.1;
  double min_silence_ms = 200.0;
  int jobs = 1;
  std::optional<fs::path> out;
  std::optional<fs::path> events_out;
  std::optional<fs::path> transcripts;
  std::optional<fs::path> filler_lexicon;
};
int cmd_stats(const StatsOptions& opt);

struct TrainOptions {
  fs::path manifest;
  fs::path out;
  std::string split = "train";
  DetectorOptions detector;
};
int cmd_train(const TrainOptions& opt);

struct InferOptions {
  fs::path manifest;
  fs::path checkpoint;
  fs::path out;
  std::string split;
  double window_s = 30.0;
  double lookahead_s = 0.0;
};
int cmd_infer(const InferOptions& opt);

struct GraphOptions {
  fs::path triples;
  std::optional<fs::path> labels;
  std::optional<fs::path> transcripts;
  std::optional<fs::path> rationales;
  fs::path out_dir;
  double window_s = 30.0;
};
int cmd_graph(const GraphOptions& opt);

struct EvalOptions {
  std::string mode = "labels";
  std::vector<fs::path> predictions;
  fs::path reference;
  std::optional<fs::path> out;
};
int cmd_eval(const EvalOptions& opt);

struct AblateOptions {
  fs::path manifest;
  fs::path out;  // grid CSV
  std::vector<double> windows{10, 20, 30, 40};
  std::vector<double> lookaheads{0, 5, 10};
  std::vector<std::string> contexts{"none"};
  std::vector<std::uint64_t> seeds{42};
  int jobs = 1;
  DetectorOptions detector;
  std::optional<fs::path> cache_dir;  // else DUPLEX_CACHE_DIR, else next to the CSV
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct AblationRow {
  double lookahead_s = 0.0;
  double window_s = 0.0;
  std::string context;
  MeanStd macro_f1_hi, macro_f1_lo, micro_f1_hi, micro_f1_lo, macro_auc_hi, macro_auc_lo;
  double context_s = 0.0;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
};

struct AblateResult {
  std::vector<AblationRow> rows;
  bool all_ok = true;
};

// Sample standard deviation (n - 1); 0 for a single run.
MeanStd mean_std(const std::vector<double>& values);

AblateResult run_ablation(const AblateOptions& opt);
int cmd_ablate(const AblateOptions& opt);
std::string ablation_csv(const AblateResult& result);

struct StitchOptions {
  fs::path script;
  fs::path clips;
  fs::path out_wav;
  std::optional<fs::path> out_labels;
  std::optional<fs::path> out_plan;
  std::string audio_id = "dialogue";
  double gap_ms = 200.0;
  double cut_ms = 300.0;
};
int cmd_stitch(const StitchOptions& opt);

// Flags shared by train and ablate.
void add_detector_flags(CLI::App& sub, DetectorOptions& opt, bool with_window);
// Exit status set by the subcommand callback that ran.
int& command_status();

void register_stats(CLI::App& app);
void register_detector(CLI::App& app);
void register_graph(CLI::App& app);
void register_eval(CLI::App& app);
void register_ablate(CLI::App& app);
void register_stitch(CLI::App& app);

int run_cli(int argc, char** argv);

}  // namespace duplex::cli
