#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "duplex/jsonl.hpp"

namespace duplex::cli {

int cmd_train(const TrainOptions& opt) {
  const TrainConfig config = opt.detector.train_config();
  const auto entries = select_split(load_manifest(opt.manifest), opt.split);
  if (entries.empty()) throw std::invalid_argument("no manifest entries in split '" + opt.split + "'");
  const auto items = load_items(entries, true);

  std::vector<TrainingSequence> data;
  std::vector<LabelTimeline> timelines;
  for (const auto& item : items) {
    auto seqs = item_sequences(item, opt.detector.window_s, opt.detector.lookahead_s);
    data.insert(data.end(), std::make_move_iterator(seqs.begin()), std::make_move_iterator(seqs.end()));
    timelines.push_back(*item.labels);
  }
  const ClassWeights weights =
      opt.detector.unweighted ? ClassWeights::uniform(config.scheme) : inverse_frequency_weights(timelines, config.scheme);

  const TrainResult result = train(data, weights, config);
  write_text(opt.out, params_to_json(result.params));

  json trace{{"loss", result.loss_trace}, {"weights", json::parse(weights_to_json(weights))}};
  write_text(fs::path(opt.out.string() + ".trace.json"), trace.dump(1));
  const auto preds = collect_predictions(result.params, data);
  std::cerr << "trained on " << data.size() << " windows; final loss " << result.loss_trace.back()
            << "; train accuracy hi " << accuracy(preds.hi) << " lo " << accuracy(preds.lo) << "\n";
  return 0;
}

int cmd_infer(const InferOptions& opt) {
  if (!(opt.window_s > 0.0) || !(opt.lookahead_s >= 0.0)) throw std::invalid_argument("invalid window");
  const DetectorParams params = params_from_json(read_text(opt.checkpoint));
  const auto entries = select_split(load_manifest(opt.manifest), opt.split);
  std::string out;
  for (const auto& e : entries) {
    const DatasetItem item = load_item(e, false);
    if (item.features && item.features->front().acoustic.size() != params.acoustic_dim()) {
      throw FormatError(item.audio_id + ": feature dimension differs from the checkpoint");
    }
    out += format_predictions(item.audio_id, item_predict(item, params, opt.window_s, opt.lookahead_s),
                              params.scheme);
  }
  write_text(opt.out, out);
  return 0;
}

void register_detector(CLI::App& app) {
  auto topt = std::make_shared<TrainOptions>();
  auto* train = app.add_subcommand("train", "train the streaming behavior detector");
  train->add_option("--manifest", topt->manifest, "dataset manifest JSONL")->required();
  train->add_option("--out", topt->out, "checkpoint JSON")->required();
  train->add_option("--split", topt->split, "manifest split to train on (entries without a split always count)")
      ->capture_default_str();
  add_detector_flags(*train, topt->detector, true);
  train->callback([topt] { command_status() = cmd_train(*topt); });

  auto iopt = std::make_shared<InferOptions>();
  auto* infer = app.add_subcommand("infer", "emit per-second labels and posteriors");
  infer->add_option("--manifest", iopt->manifest)->required();
  infer->add_option("--checkpoint", iopt->checkpoint)->required();
  infer->add_option("--out", iopt->out, "prediction JSONL")->required();
  infer->add_option("--split", iopt->split);
  infer->add_option("--window-s", iopt->window_s)->capture_default_str();
  infer->add_option("--lookahead-s", iopt->lookahead_s)->capture_default_str();
  infer->callback([iopt] { command_status() = cmd_infer(*iopt); });
}

}  // namespace duplex::cli
