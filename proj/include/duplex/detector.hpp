#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "duplex/behavior_labels.hpp"
#include "duplex/features.hpp"

namespace duplex {

enum class ContextMode { None, Ema, Attention };

std::string_view to_string(ContextMode mode);
ContextMode parse_context_mode(std::string_view name);

// Trainable surface of the streaming detector: gated fusion, causal context
// aggregation and the two softmax heads. Columns of sequence matrices are time
// steps.
template <typename Scalar>
struct DetectorParamsT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix gate_acoustic;   // d x d_a
  Matrix gate_semantic;   // d x d_s
  Matrix proj_acoustic;   // d x d_a
  Matrix proj_semantic;   // d x d_s

  ContextMode mode = ContextMode::None;
  Scalar ema_decay = Scalar(0.5);
  Matrix query;  // d x d, attention only
  Matrix key;
  Matrix value;

  Matrix head_hi;  // 4 x d
  Vector bias_hi;
  Matrix head_lo;  // k x d
  Vector bias_lo;
  LowScheme scheme = LowScheme::FourClass;

  // Fixed input standardization x -> (x - mean) / scale.
  Vector acoustic_mean;
  Vector acoustic_scale;
  Vector semantic_mean;
  Vector semantic_scale;

  Eigen::Index fused_dim() const { return gate_acoustic.rows(); }
  Eigen::Index acoustic_dim() const { return gate_acoustic.cols(); }
  Eigen::Index semantic_dim() const { return gate_semantic.cols(); }
  Eigen::Index low_classes() const { return head_lo.rows(); }

  static DetectorParamsT zeros(Eigen::Index d_a, Eigen::Index d_s, Eigen::Index d, ContextMode mode,
                               LowScheme scheme = LowScheme::FourClass) {
    DetectorParamsT p;
    p.gate_acoustic = Matrix::Zero(d, d_a);
    p.gate_semantic = Matrix::Zero(d, d_s);
    p.proj_acoustic = Matrix::Zero(d, d_a);
    p.proj_semantic = Matrix::Zero(d, d_s);
    p.mode = mode;
    if (mode == ContextMode::Attention) {
      p.query = Matrix::Zero(d, d);
      p.key = Matrix::Zero(d, d);
      p.value = Matrix::Zero(d, d);
    }
    const auto k = static_cast<Eigen::Index>(low_class_count(scheme));
    p.head_hi = Matrix::Zero(static_cast<Eigen::Index>(kHighClasses), d);
    p.bias_hi = Vector::Zero(static_cast<Eigen::Index>(kHighClasses));
    p.head_lo = Matrix::Zero(k, d);
    p.bias_lo = Vector::Zero(k);
    p.scheme = scheme;
    p.acoustic_mean = Vector::Zero(d_a);
    p.acoustic_scale = Vector::Ones(d_a);
    p.semantic_mean = Vector::Zero(d_s);
    p.semantic_scale = Vector::Ones(d_s);
    return p;
  }
};

using DetectorParams = DetectorParamsT<double>;

// Calls f(param, other) for every trainable tensor of two same-shaped parameter
// sets (e.g. parameters and their gradient), in a fixed order.
template <typename P, typename Q, typename F>
void zip_trainable(P& a, Q& b, F&& f) {
  f(a.gate_acoustic, b.gate_acoustic);
  f(a.gate_semantic, b.gate_semantic);
  f(a.proj_acoustic, b.proj_acoustic);
  f(a.proj_semantic, b.proj_semantic);
  if (a.mode == ContextMode::Attention) {
    f(a.query, b.query);
    f(a.key, b.key);
    f(a.value, b.value);
  }
  f(a.head_hi, b.head_hi);
  f(a.bias_hi, b.bias_hi);
  f(a.head_lo, b.head_lo);
  f(a.bias_lo, b.bias_lo);
}

template <typename P, typename F>
void for_each_trainable(P& p, F&& f) {
  zip_trainable(p, p, [&](auto& x, auto&) { f(x); });
}

template <typename Scalar>
std::size_t trainable_count(const DetectorParamsT<Scalar>& p) {
  std::size_t n = 0;
  for_each_trainable(p, [&](const auto& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) + (-x.array()).exp()).inverse().matrix();
}

// Column-wise numerically stable softmax.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> softmax(
    const Eigen::MatrixBase<Derived>& logits) {
  using Matrix = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix out = logits;
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    out.col(c).array() -= out.col(c).maxCoeff();
    out.col(c) = out.col(c).array().exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

template <typename Scalar>
struct FusionResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fused;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gate;
};

// lambda = sigmoid(W_B a + W_E s); fused = (1 - lambda) * (P_B a) + lambda * (P_E s).
template <typename Scalar, typename DA, typename DS>
FusionResult<Scalar> gated_fuse(const Eigen::MatrixBase<DA>& acoustic, const Eigen::MatrixBase<DS>& semantic,
                                const DetectorParamsT<Scalar>& p) {
  if (acoustic.size() != p.acoustic_dim() || semantic.size() != p.semantic_dim()) {
    throw std::invalid_argument("feature dimensions do not match detector parameters");
  }
  FusionResult<Scalar> r;
  r.gate = sigmoid(p.gate_acoustic * acoustic + p.gate_semantic * semantic);
  r.fused = (Scalar(1) - r.gate.array()) * (p.proj_acoustic * acoustic).array() +
            r.gate.array() * (p.proj_semantic * semantic).array();
  return r;
}

// Causal context over fused columns; column t depends on columns <= t only.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> causal_context(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& fused, const DetectorParamsT<Scalar>& p) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = fused.cols();
  if (n == 0) throw std::invalid_argument("context needs a nonempty sequence");
  switch (p.mode) {
    case ContextMode::None:
      return fused;
    case ContextMode::Ema: {
      Matrix z(fused.rows(), n);
      z.col(0) = fused.col(0);
      for (Eigen::Index t = 1; t < n; ++t) {
        z.col(t) = (Scalar(1) - p.ema_decay) * fused.col(t) + p.ema_decay * z.col(t - 1);
      }
      return z;
    }
    case ContextMode::Attention: {
      const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(fused.rows()));
      const Matrix q = p.query * fused;
      const Matrix k = p.key * fused;
      const Matrix v = p.value * fused;
      Matrix z = fused;
      for (Eigen::Index t = 0; t < n; ++t) {
        const Matrix scores = (k.leftCols(t + 1).transpose() * q.col(t)) * scale;
        const Matrix w = softmax(scores);
        z.col(t) += v.leftCols(t + 1) * w;
      }
      return z;
    }
  }
  throw std::invalid_argument("invalid context mode");
}

template <typename Scalar>
struct HeadOutput {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> p_hi;  // 4 x n
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> p_lo;  // k x n
};

template <typename Scalar, typename Derived>
HeadOutput<Scalar> predict(const Eigen::MatrixBase<Derived>& z, const DetectorParamsT<Scalar>& p) {
  HeadOutput<Scalar> out;
  out.p_hi = softmax((p.head_hi * z).colwise() + p.bias_hi);
  out.p_lo = softmax((p.head_lo * z).colwise() + p.bias_lo);
  return out;
}

// Full forward pass over one sequence, with intermediates kept for backprop.
struct ForwardTrace {
  Eigen::MatrixXd acoustic;  // standardized inputs, d_a x n
  Eigen::MatrixXd semantic;  // d_s x n
  Eigen::MatrixXd gate;
  Eigen::MatrixXd proj_acoustic;
  Eigen::MatrixXd proj_semantic;
  Eigen::MatrixXd fused;
  Eigen::MatrixXd z;
  Eigen::MatrixXd p_hi;
  Eigen::MatrixXd p_lo;
};

ForwardTrace forward(std::span<const FeaturePair> steps, const DetectorParams& params);

struct StreamPrediction {
  LabelTimeline labels;
  Eigen::MatrixXd p_hi;  // n x 4, row per second
  Eigen::MatrixXd p_lo;  // n x k
};

// Emission for second t = i - 1 uses only causal_window(i, W, L).
StreamPrediction infer_stream(const DuplexAudio& audio, const Transcript* transcript,
                              const DetectorParams& params, double window_s, double lookahead_s);
StreamPrediction infer_features(std::span<const FeaturePair> per_second, const DetectorParams& params,
                                double window_s, double lookahead_s);

std::string params_to_json(const DetectorParams& params);
DetectorParams params_from_json(std::string_view text);

// Inference output JSONL {audio_id, t, hi, lo, p_hi, p_lo}.
std::string format_predictions(std::string_view audio_id, const StreamPrediction& pred,
                               LowScheme scheme);

}  // namespace duplex
