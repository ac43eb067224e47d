#include "duplex/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace duplex {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kProbFloor = 1e-12;

DetectorParams zeros_like(const DetectorParams& p) {
  DetectorParams g = p;
  for_each_trainable(g, [](auto& m) { m.setZero(); });
  return g;
}

struct Target {
  std::optional<Index> hi;
  std::optional<Index> lo;
};

Target target_of(const SecondLabel& s, LowScheme scheme) {
  Target t;
  if (s.hi) t.hi = static_cast<Index>(*s.hi);
  if (s.lo) {
    if (auto idx = low_class_index(*s.lo, scheme)) t.lo = static_cast<Index>(*idx);
  }
  return t;
}

std::size_t count_labeled(std::span<const TrainingSequence> data, LowScheme scheme) {
  std::size_t n = 0;
  for (const auto& seq : data) {
    for (const auto& s : seq.labels) {
      const Target t = target_of(s, scheme);
      n += t.hi.has_value() + t.lo.has_value();
    }
  }
  return n;
}

void check_sequence(const TrainingSequence& seq) {
  if (seq.steps.empty()) throw std::invalid_argument("training sequence has no steps");
  if (seq.steps.size() != seq.labels.size()) throw std::invalid_argument("steps and labels are misaligned");
}

// Loss of one sequence; accumulates unnormalized gradients into grad when given.
double sequence_loss(const DetectorParams& p, const TrainingSequence& seq, const ClassWeights& w,
                     DetectorParams* grad) {
  check_sequence(seq);
  const ForwardTrace tr = forward(seq.steps, p);
  const Index n = tr.z.cols();
  const Index d = tr.z.rows();

  double loss = 0.0;
  MatrixXd dlhi = MatrixXd::Zero(tr.p_hi.rows(), n);
  MatrixXd dllo = MatrixXd::Zero(tr.p_lo.rows(), n);
  bool any = false;
  for (Index t = 0; t < n; ++t) {
    const Target y = target_of(seq.labels[static_cast<std::size_t>(t)], p.scheme);
    if (y.hi) {
      const double c = w.alpha * w.hi[static_cast<std::size_t>(*y.hi)];
      const double prob = tr.p_hi(*y.hi, t);
      loss += c * -std::log(std::max(prob, kProbFloor));
      if (prob > kProbFloor) {
        dlhi.col(t) = c * tr.p_hi.col(t);
        dlhi(*y.hi, t) -= c;
      }
      any = true;
    }
    if (y.lo) {
      const double c = w.beta * w.lo[static_cast<std::size_t>(*y.lo)];
      const double prob = tr.p_lo(*y.lo, t);
      loss += c * -std::log(std::max(prob, kProbFloor));
      if (prob > kProbFloor) {
        dllo.col(t) = c * tr.p_lo.col(t);
        dllo(*y.lo, t) -= c;
      }
      any = true;
    }
  }
  if (!grad || !any) return loss;

  DetectorParams& g = *grad;
  g.head_hi += dlhi * tr.z.transpose();
  g.bias_hi += dlhi.rowwise().sum();
  g.head_lo += dllo * tr.z.transpose();
  g.bias_lo += dllo.rowwise().sum();
  const MatrixXd dz = p.head_hi.transpose() * dlhi + p.head_lo.transpose() * dllo;

  MatrixXd dh(d, n);
  switch (p.mode) {
    case ContextMode::None:
      dh = dz;
      break;
    case ContextMode::Ema: {
      VectorXd carry = VectorXd::Zero(d);
      for (Index t = n - 1; t >= 0; --t) {
        const VectorXd total = dz.col(t) + carry;
        if (t > 0) {
          dh.col(t) = (1.0 - p.ema_decay) * total;
          carry = p.ema_decay * total;
        } else {
          dh.col(t) = total;
        }
      }
      break;
    }
    case ContextMode::Attention: {
      const MatrixXd& h = tr.fused;
      const double scale = 1.0 / std::sqrt(static_cast<double>(d));
      const MatrixXd q = p.query * h;
      const MatrixXd k = p.key * h;
      const MatrixXd v = p.value * h;
      MatrixXd dq = MatrixXd::Zero(d, n), dk = MatrixXd::Zero(d, n), dv = MatrixXd::Zero(d, n);
      dh = dz;
      for (Index t = 0; t < n; ++t) {
        const VectorXd scores = (k.leftCols(t + 1).transpose() * q.col(t)) * scale;
        const VectorXd a = softmax(scores);
        dv.leftCols(t + 1) += dz.col(t) * a.transpose();
        const VectorXd da = v.leftCols(t + 1).transpose() * dz.col(t);
        const VectorXd ds = a.cwiseProduct(da.array().matrix() - VectorXd::Constant(t + 1, a.dot(da)));
        dq.col(t) += scale * (k.leftCols(t + 1) * ds);
        dk.leftCols(t + 1) += scale * q.col(t) * ds.transpose();
      }
      g.query += dq * h.transpose();
      g.key += dk * h.transpose();
      g.value += dv * h.transpose();
      dh += p.query.transpose() * dq + p.key.transpose() * dk + p.value.transpose() * dv;
      break;
    }
  }

  const auto lam = tr.gate.array();
  const MatrixXd dpb = ((1.0 - lam) * dh.array()).matrix();
  const MatrixXd dpe = (lam * dh.array()).matrix();
  const MatrixXd dgate = (dh.array() * (tr.proj_semantic - tr.proj_acoustic).array() * lam * (1.0 - lam)).matrix();
  g.gate_acoustic += dgate * tr.acoustic.transpose();
  g.gate_semantic += dgate * tr.semantic.transpose();
  g.proj_acoustic += dpb * tr.acoustic.transpose();
  g.proj_semantic += dpe * tr.semantic.transpose();
  return loss;
}

void check_weights(const DetectorParams& p, const ClassWeights& w) {
  if (w.hi.size() != kHighClasses || static_cast<Index>(w.lo.size()) != p.low_classes()) {
    throw std::invalid_argument("class weights do not match the detector heads");
  }
}

double squared_norm(const DetectorParams& p) {
  double s = 0.0;
  for_each_trainable(p, [&](const auto& m) { s += m.squaredNorm(); });
  return s;
}

}  // namespace

LossGradient loss_and_gradient(const DetectorParams& params, std::span<const TrainingSequence> data,
                               const ClassWeights& weights, double weight_decay) {
  check_weights(params, weights);
  LossGradient out;
  out.grad = zeros_like(params);
  out.labeled = count_labeled(data, params.scheme);
  for (const auto& seq : data) out.loss += sequence_loss(params, seq, weights, &out.grad);
  if (out.labeled > 0) {
    const double inv = 1.0 / static_cast<double>(out.labeled);
    out.loss *= inv;
    for_each_trainable(out.grad, [&](auto& m) { m *= inv; });
  }
  if (weight_decay > 0.0) {
    out.loss += 0.5 * weight_decay * squared_norm(params);
    zip_trainable(out.grad, params, [&](auto& g, const auto& x) { g += weight_decay * x; });
  }
  return out;
}

double loss_only(const DetectorParams& params, std::span<const TrainingSequence> data,
                 const ClassWeights& weights, double weight_decay) {
  check_weights(params, weights);
  double loss = 0.0;
  for (const auto& seq : data) loss += sequence_loss(params, seq, weights, nullptr);
  const std::size_t labeled = count_labeled(data, params.scheme);
  if (labeled > 0) loss /= static_cast<double>(labeled);
  if (weight_decay > 0.0) loss += 0.5 * weight_decay * squared_norm(params);
  return loss;
}

VectorXd flatten(const DetectorParams& params) {
  VectorXd flat(static_cast<Index>(trainable_count(params)));
  Index off = 0;
  for_each_trainable(params, [&](const auto& m) {
    flat.segment(off, m.size()) = Eigen::Map<const VectorXd>(m.data(), m.size());
    off += m.size();
  });
  return flat;
}

void unflatten(const VectorXd& flat, DetectorParams& params) {
  if (flat.size() != static_cast<Index>(trainable_count(params))) {
    throw std::invalid_argument("flat parameter size mismatch");
  }
  Index off = 0;
  for_each_trainable(params, [&](auto& m) {
    Eigen::Map<VectorXd>(m.data(), m.size()) = flat.segment(off, m.size());
    off += m.size();
  });
}

void fit_standardizer(DetectorParams& params, std::span<const TrainingSequence> data) {
  const Index da = params.acoustic_dim();
  const Index ds = params.semantic_dim();
  VectorXd sa = VectorXd::Zero(da), sqa = VectorXd::Zero(da);
  VectorXd ss = VectorXd::Zero(ds), sqs = VectorXd::Zero(ds);
  double n = 0.0;
  for (const auto& seq : data) {
    for (const auto& f : seq.steps) {
      if (f.acoustic.size() != da || f.semantic.size() != ds) {
        throw std::invalid_argument("feature dimensions do not match detector parameters");
      }
      sa += f.acoustic;
      sqa += f.acoustic.cwiseAbs2();
      ss += f.semantic;
      sqs += f.semantic.cwiseAbs2();
      n += 1.0;
    }
  }
  if (n == 0.0) return;
  auto scale_of = [n](const VectorXd& sum, const VectorXd& sq) {
    const VectorXd mean = sum / n;
    VectorXd sd = (sq / n - mean.cwiseAbs2()).cwiseMax(0.0).cwiseSqrt();
    for (Index i = 0; i < sd.size(); ++i) {
      if (sd(i) < 1e-8) sd(i) = 1.0;
    }
    return sd;
  };
  params.acoustic_mean = sa / n;
  params.acoustic_scale = scale_of(sa, sqa);
  params.semantic_mean = ss / n;
  params.semantic_scale = scale_of(ss, sqs);
}

DetectorParams init_params(Index d_a, Index d_s, const TrainConfig& config) {
  if (config.fused_dim <= 0) throw std::invalid_argument("fused dimension must be positive");
  DetectorParams p = DetectorParams::zeros(d_a, d_s, config.fused_dim, config.mode, config.scheme);
  p.ema_decay = config.ema_decay;
  std::mt19937_64 rng(config.seed);
  auto fill = [&](MatrixXd& m, double gain) {
    std::normal_distribution<double> dist(0.0, gain / std::sqrt(static_cast<double>(std::max<Index>(1, m.cols()))));
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  fill(p.gate_acoustic, 1.0);
  fill(p.gate_semantic, 1.0);
  fill(p.proj_acoustic, 1.0);
  fill(p.proj_semantic, 1.0);
  if (config.mode == ContextMode::Attention) {
    fill(p.query, 1.0);
    fill(p.key, 1.0);
    fill(p.value, 0.5);
  }
  fill(p.head_hi, 0.5);
  fill(p.head_lo, 0.5);
  return p;
}

TrainResult train(std::span<const TrainingSequence> data, const ClassWeights& weights,
                  const TrainConfig& config) {
  if (data.empty()) throw std::invalid_argument("no training data");
  check_sequence(data.front());
  DetectorParams p = init_params(data.front().steps.front().acoustic.size(),
                                 data.front().steps.front().semantic.size(), config);
  fit_standardizer(p, data);
  return train_from(std::move(p), data, weights, config);
}

TrainResult train_from(DetectorParams params, std::span<const TrainingSequence> data,
                       const ClassWeights& weights, const TrainConfig& config) {
  if (!(config.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be nonnegative");
  if (config.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (data.empty()) throw std::invalid_argument("no training data");

  TrainResult result;
  VectorXd theta = flatten(params);
  VectorXd m = VectorXd::Zero(theta.size()), v = VectorXd::Zero(theta.size());
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  long long step = 0;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t batch = config.batch_size == 0 ? data.size() : std::min(config.batch_size, data.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < data.size()) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < data.size(); start += batch) {
      std::vector<TrainingSequence> subset;
      std::span<const TrainingSequence> view = data;
      if (batch < data.size()) {
        for (std::size_t k = start; k < std::min(start + batch, data.size()); ++k) subset.push_back(data[order[k]]);
        view = subset;
      }
      unflatten(theta, params);
      LossGradient lg = loss_and_gradient(params, view, weights, config.weight_decay);
      if (!std::isfinite(lg.loss)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch + 1 << " batch " << n_batches + 1
            << ": loss is not finite (parameter norm " << theta.norm() << ")";
        if (!result.loss_trace.empty()) msg << ", last epoch loss " << result.loss_trace.back();
        throw TrainingDiverged(msg.str());
      }
      VectorXd g = flatten(lg.grad);
      const double gnorm = g.norm();
      if (config.grad_clip > 0.0 && gnorm > config.grad_clip) g *= config.grad_clip / gnorm;

      if (config.optimizer == Optimizer::Sgd) {
        theta -= config.learning_rate * g;
      } else {
        ++step;
        m = kBeta1 * m + (1.0 - kBeta1) * g;
        v = kBeta2 * v + (1.0 - kBeta2) * g.cwiseAbs2();
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        theta -= (config.learning_rate * (m / c1).array() / ((v / c2).array().sqrt() + kAdamEps)).matrix();
      }
      epoch_loss += lg.loss;
      ++n_batches;
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(n_batches));
  }
  unflatten(theta, params);
  result.params = std::move(params);
  return result;
}

double grad_check(const DetectorParams& params, std::span<const TrainingSequence> data,
                  const ClassWeights& weights, double epsilon, double floor) {
  const LossGradient lg = loss_and_gradient(params, data, weights);
  const VectorXd analytic = flatten(lg.grad);
  const VectorXd theta = flatten(params);
  DetectorParams probe = params;
  double worst = 0.0;
  for (Index i = 0; i < theta.size(); ++i) {
    VectorXd x = theta;
    x(i) = theta(i) + epsilon;
    unflatten(x, probe);
    const double up = loss_only(probe, data, weights);
    x(i) = theta(i) - epsilon;
    unflatten(x, probe);
    const double down = loss_only(probe, data, weights);
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic(i)), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic(i) - numeric) / denom);
  }
  return worst;
}

TrainingSequence full_sequence(std::vector<FeaturePair> per_second, const LabelTimeline& timeline) {
  if (per_second.size() != timeline.size()) throw std::invalid_argument("features and labels differ in length");
  TrainingSequence seq;
  seq.steps = std::move(per_second);
  seq.labels.assign(timeline.begin(), timeline.end());
  return seq;
}

namespace {

template <typename WindowFn>
std::vector<TrainingSequence> windowed(const LabelTimeline& timeline, std::size_t n, WindowFn&& window) {
  const std::size_t count = std::min(n, timeline.size());
  std::vector<TrainingSequence> out;
  out.reserve(count);
  for (std::size_t i = 1; i <= count; ++i) {
    TrainingSequence seq;
    seq.steps = window(i);
    seq.labels.resize(seq.steps.size());
    seq.labels.back() = timeline[i - 1];
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace

std::vector<TrainingSequence> windowed_sequences(std::span<const FeaturePair> per_second,
                                                 const LabelTimeline& timeline, double window_s,
                                                 double lookahead_s) {
  return windowed(timeline, per_second.size(), [&](std::size_t i) {
    return window_features(per_second, i, window_s, lookahead_s);
  });
}

std::vector<TrainingSequence> windowed_sequences(const DuplexAudio& audio, const Transcript* transcript,
                                                 const LabelTimeline& timeline, double window_s,
                                                 double lookahead_s) {
  return windowed(timeline, chunk(audio).n_chunks, [&](std::size_t i) {
    return window_features(audio, transcript, i, window_s, lookahead_s);
  });
}

HeadPredictions collect_predictions(const DetectorParams& params, std::span<const TrainingSequence> data) {
  HeadPredictions out;
  for (const auto& seq : data) {
    check_sequence(seq);
    const ForwardTrace tr = forward(seq.steps, params);
    for (std::size_t t = 0; t < seq.labels.size(); ++t) {
      const Target y = target_of(seq.labels[t], params.scheme);
      const auto col = static_cast<Index>(t);
      if (y.hi) out.hi.push_back({static_cast<std::size_t>(*y.hi), tr.p_hi.col(col)});
      if (y.lo) out.lo.push_back({static_cast<std::size_t>(*y.lo), tr.p_lo.col(col)});
    }
  }
  return out;
}

double accuracy(std::span<const ScoredPrediction> preds) {
  if (preds.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& p : preds) {
    Index arg = 0;
    p.scores.maxCoeff(&arg);
    hit += static_cast<std::size_t>(arg) == p.true_class;
  }
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

}  // namespace duplex
