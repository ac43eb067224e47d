#include "cli/commands.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "duplex/audio_io.hpp"
#include "duplex/jsonl.hpp"

namespace duplex::cli {

void DetectorOptions::validate() const {
  if (!(window_s > 0.0)) throw std::invalid_argument("--window-s must be positive");
  if (!(lookahead_s >= 0.0)) throw std::invalid_argument("--lookahead-s must be non-negative");
  if (classes_lo != 3 && classes_lo != 4) throw std::invalid_argument("--classes-lo must be 3 or 4");
  if (epochs < 1) throw std::invalid_argument("--epochs must be at least 1");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("--lr must be non-negative");
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw std::invalid_argument("--ema-decay must be in [0, 1)");
  if (fused_dim < 1) throw std::invalid_argument("--fused-dim must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("--weight-decay must be non-negative");
  if (optimizer != "adam" && optimizer != "sgd") throw std::invalid_argument("--optimizer must be adam or sgd");
  parse_context_mode(context);
}

TrainConfig DetectorOptions::train_config() const {
  validate();
  TrainConfig c;
  c.learning_rate = learning_rate;
  c.epochs = epochs;
  c.seed = seed;
  c.grad_clip = grad_clip;
  c.weight_decay = weight_decay;
  c.mode = parse_context_mode(context);
  c.ema_decay = ema_decay;
  c.fused_dim = fused_dim;
  c.scheme = scheme();
  c.optimizer = optimizer == "sgd" ? Optimizer::Sgd : Optimizer::Adam;
  c.batch_size = batch_size;
  return c;
}

void add_detector_flags(CLI::App& sub, DetectorOptions& opt, bool with_window) {
  if (with_window) {
    sub.add_option("--window-s", opt.window_s, "causal window W in seconds")->capture_default_str();
    sub.add_option("--lookahead-s", opt.lookahead_s, "look-ahead L in seconds")->capture_default_str();
  }
  sub.add_option("--context", opt.context, "context aggregator")
      ->check(CLI::IsMember({"none", "ema", "attention"}))
      ->capture_default_str();
  sub.add_option("--classes-lo", opt.classes_lo, "low-level classes (3 drops Interruption)")
      ->check(CLI::IsMember({3, 4}))
      ->capture_default_str();
  sub.add_option("--seed", opt.seed, "random seed")->capture_default_str();
  sub.add_option("--epochs", opt.epochs)->capture_default_str();
  sub.add_option("--lr", opt.learning_rate, "learning rate")->capture_default_str();
  sub.add_option("--grad-clip", opt.grad_clip, "global gradient-norm clip (0 disables)")->capture_default_str();
  sub.add_option("--weight-decay", opt.weight_decay, "L2 coefficient")->capture_default_str();
  sub.add_option("--ema-decay", opt.ema_decay)->capture_default_str();
  sub.add_option("--fused-dim", opt.fused_dim)->capture_default_str();
  sub.add_option("--batch-size", opt.batch_size, "sequences per step (0 = full batch)")->capture_default_str();
  sub.add_option("--optimizer", opt.optimizer)->check(CLI::IsMember({"adam", "sgd"}))->capture_default_str();
  sub.add_flag("--unweighted", opt.unweighted, "uniform class weights instead of inverse frequency");
}

int& command_status() {
  static int status = 0;
  return status;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Full-duplex dialogue behavior toolkit"};
  app.set_config("--config", "", "INI/TOML file with option values; flags override it");
  app.require_subcommand(1);
  register_stats(app);
  register_detector(app);
  register_graph(app);
  register_eval(app);
  register_ablate(app);
  register_stitch(app);

  command_status() = 0;
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return command_status();
}

}  // namespace duplex::cli
