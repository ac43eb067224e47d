#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "duplex/behavior_labels.hpp"
#include "duplex/detector.hpp"
#include "duplex/features.hpp"
#include "duplex/rationale_metrics.hpp"

namespace duplex {

// One forward unit: a step sequence with optional labels per step. Windowed
// training labels only the last step of each window.
struct TrainingSequence {
  std::vector<FeaturePair> steps;
  std::vector<SecondLabel> labels;  // same length as steps; t is ignored
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  double learning_rate = 3e-4;
  int epochs = 10;
  std::uint64_t seed = 42;
  double grad_clip = 1.0;  // global norm; <= 0 disables
  double weight_decay = 0.0;
  ContextMode mode = ContextMode::None;
  double ema_decay = 0.5;
  Eigen::Index fused_dim = 16;
  LowScheme scheme = LowScheme::FourClass;
  Optimizer optimizer = Optimizer::Adam;
  std::size_t batch_size = 0;  // 0 = full batch
};

struct TrainResult {
  DetectorParams params;
  std::vector<double> loss_trace;  // mean batch loss per epoch
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LossGradient {
  double loss = 0.0;
  DetectorParams grad;  // same shapes as the parameters; standardizer unused
  std::size_t labeled = 0;
};

// Weighted cross-entropy summed over sequences and divided by the number of
// labeled targets, plus 0.5 * weight_decay * |theta|^2.
LossGradient loss_and_gradient(const DetectorParams& params, std::span<const TrainingSequence> data,
                               const ClassWeights& weights, double weight_decay = 0.0);
double loss_only(const DetectorParams& params, std::span<const TrainingSequence> data,
                 const ClassWeights& weights, double weight_decay = 0.0);

// Flat view of the trainable tensors in zip_trainable order.
Eigen::VectorXd flatten(const DetectorParams& params);
void unflatten(const Eigen::VectorXd& flat, DetectorParams& params);

// Fits the fixed input standardizer on all steps of the data.
void fit_standardizer(DetectorParams& params, std::span<const TrainingSequence> data);

DetectorParams init_params(Eigen::Index d_a, Eigen::Index d_s, const TrainConfig& config);

TrainResult train(std::span<const TrainingSequence> data, const ClassWeights& weights,
                  const TrainConfig& config);
// Continues from given parameters (standardizer kept).
TrainResult train_from(DetectorParams params, std::span<const TrainingSequence> data,
                       const ClassWeights& weights, const TrainConfig& config);

// Max over all trainable entries of |analytic - numeric| / max(|analytic|, |numeric|, floor),
// numeric from central differences.
double grad_check(const DetectorParams& params, std::span<const TrainingSequence> data,
                  const ClassWeights& weights, double epsilon = 1e-5, double floor = 1e-6);

// One sequence covering the whole stream, every second labeled.
TrainingSequence full_sequence(std::vector<FeaturePair> per_second, const LabelTimeline& timeline);
// One window per second from precomputed per-second features.
std::vector<TrainingSequence> windowed_sequences(std::span<const FeaturePair> per_second,
                                                 const LabelTimeline& timeline, double window_s,
                                                 double lookahead_s);
// One window per second computed from audio, matching infer_stream.
std::vector<TrainingSequence> windowed_sequences(const DuplexAudio& audio, const Transcript* transcript,
                                                 const LabelTimeline& timeline, double window_s,
                                                 double lookahead_s);

struct HeadPredictions {
  std::vector<ScoredPrediction> hi;
  std::vector<ScoredPrediction> lo;
};

// Posteriors at every labeled step, for metrics.
HeadPredictions collect_predictions(const DetectorParams& params, std::span<const TrainingSequence> data);

double accuracy(std::span<const ScoredPrediction> preds);

}  // namespace duplex
