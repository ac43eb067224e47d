#include "duplex/detector.hpp"

#include <map>

#include "duplex/jsonl.hpp"

namespace duplex {

std::string_view to_string(ContextMode mode) {
  switch (mode) {
    case ContextMode::None: return "none";
    case ContextMode::Ema: return "ema";
    case ContextMode::Attention: return "attention";
  }
  return "?";
}

ContextMode parse_context_mode(std::string_view name) {
  if (name == "none") return ContextMode::None;
  if (name == "ema") return ContextMode::Ema;
  if (name == "attention") return ContextMode::Attention;
  throw std::invalid_argument("unknown context mode '" + std::string(name) + "'");
}

ForwardTrace forward(std::span<const FeaturePair> steps, const DetectorParams& params) {
  const auto n = static_cast<Eigen::Index>(steps.size());
  if (n == 0) throw std::invalid_argument("forward needs at least one step");
  ForwardTrace tr;
  tr.acoustic.resize(params.acoustic_dim(), n);
  tr.semantic.resize(params.semantic_dim(), n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const auto& s = steps[static_cast<std::size_t>(t)];
    if (s.acoustic.size() != params.acoustic_dim() || s.semantic.size() != params.semantic_dim()) {
      throw std::invalid_argument("feature dimensions do not match detector parameters");
    }
    tr.acoustic.col(t) = (s.acoustic - params.acoustic_mean).cwiseQuotient(params.acoustic_scale);
    tr.semantic.col(t) = (s.semantic - params.semantic_mean).cwiseQuotient(params.semantic_scale);
  }
  tr.gate = sigmoid(params.gate_acoustic * tr.acoustic + params.gate_semantic * tr.semantic);
  tr.proj_acoustic = params.proj_acoustic * tr.acoustic;
  tr.proj_semantic = params.proj_semantic * tr.semantic;
  tr.fused = ((1.0 - tr.gate.array()) * tr.proj_acoustic.array() +
              tr.gate.array() * tr.proj_semantic.array())
                 .matrix();
  tr.z = causal_context(tr.fused, params);
  auto heads = predict(tr.z, params);
  tr.p_hi = std::move(heads.p_hi);
  tr.p_lo = std::move(heads.p_lo);
  return tr;
}

namespace {

template <typename WindowFn>
StreamPrediction run_stream(std::size_t n_seconds, const DetectorParams& params, WindowFn&& window) {
  StreamPrediction out;
  const auto n = static_cast<Eigen::Index>(n_seconds);
  out.p_hi.resize(n, params.head_hi.rows());
  out.p_lo.resize(n, params.head_lo.rows());
  for (std::size_t i = 1; i <= n_seconds; ++i) {
    const auto steps = window(i);
    const ForwardTrace tr = forward(steps, params);
    const auto row = static_cast<Eigen::Index>(i - 1);
    out.p_hi.row(row) = tr.p_hi.col(tr.p_hi.cols() - 1).transpose();
    out.p_lo.row(row) = tr.p_lo.col(tr.p_lo.cols() - 1).transpose();
    Eigen::Index hi = 0, lo = 0;
    out.p_hi.row(row).maxCoeff(&hi);
    out.p_lo.row(row).maxCoeff(&lo);
    out.labels.push_back(static_cast<HighAct>(hi),
                         low_act_from_index(static_cast<std::size_t>(lo), params.scheme));
  }
  return out;
}

}  // namespace

StreamPrediction infer_stream(const DuplexAudio& audio, const Transcript* transcript,
                              const DetectorParams& params, double window_s, double lookahead_s) {
  const ChunkGrid grid = chunk(audio);
  if (grid.n_chunks == 0) throw std::invalid_argument("audio shorter than one chunk");
  return run_stream(grid.n_chunks, params, [&](std::size_t i) {
    return window_features(audio, transcript, i, window_s, lookahead_s);
  });
}

StreamPrediction infer_features(std::span<const FeaturePair> per_second, const DetectorParams& params,
                                double window_s, double lookahead_s) {
  if (per_second.empty()) throw std::invalid_argument("empty feature sequence");
  return run_stream(per_second.size(), params, [&](std::size_t i) {
    return window_features(per_second, i, window_s, lookahead_s);
  });
}

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = require(j, "rows").get<Eigen::Index>();
  const auto cols = require(j, "cols").get<Eigen::Index>();
  const auto data = require(j, "data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size()) {
    throw FormatError("matrix shape does not match its data");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  if (!m.allFinite()) throw FormatError("non-finite parameter");
  return m;
}

template <typename F>
void visit_named(DetectorParams& p, F&& f) {
  f("gate_acoustic", p.gate_acoustic);
  f("gate_semantic", p.gate_semantic);
  f("proj_acoustic", p.proj_acoustic);
  f("proj_semantic", p.proj_semantic);
  if (p.mode == ContextMode::Attention) {
    f("query", p.query);
    f("key", p.key);
    f("value", p.value);
  }
  f("head_hi", p.head_hi);
  f("head_lo", p.head_lo);
}

template <typename F>
void visit_named_vectors(DetectorParams& p, F&& f) {
  f("bias_hi", p.bias_hi);
  f("bias_lo", p.bias_lo);
  f("acoustic_mean", p.acoustic_mean);
  f("acoustic_scale", p.acoustic_scale);
  f("semantic_mean", p.semantic_mean);
  f("semantic_scale", p.semantic_scale);
}

}  // namespace

std::string params_to_json(const DetectorParams& params) {
  DetectorParams p = params;
  json tensors = json::object();
  visit_named(p, [&](const char* name, Eigen::MatrixXd& m) { tensors[name] = matrix_json(m); });
  visit_named_vectors(p, [&](const char* name, Eigen::VectorXd& v) { tensors[name] = matrix_json(v); });
  json out{{"format", "duplex-detector/1"},
           {"context", to_string(p.mode)},
           {"ema_decay", p.ema_decay},
           {"classes_lo", low_class_count(p.scheme)},
           {"tensors", tensors}};
  return out.dump(1);
}

DetectorParams params_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
  if (require(j, "format").get<std::string>() != "duplex-detector/1") {
    throw FormatError("unknown checkpoint format");
  }
  DetectorParams p;
  p.mode = parse_context_mode(require(j, "context").get<std::string>());
  p.ema_decay = require(j, "ema_decay").get<double>();
  const int k = require(j, "classes_lo").get<int>();
  if (k != 3 && k != 4) throw FormatError("classes_lo must be 3 or 4");
  p.scheme = k == 4 ? LowScheme::FourClass : LowScheme::ThreeClass;
  const json& tensors = require(j, "tensors");
  visit_named(p, [&](const char* name, Eigen::MatrixXd& m) { m = matrix_from_json(require(tensors, name)); });
  visit_named_vectors(p, [&](const char* name, Eigen::VectorXd& v) {
    const Eigen::MatrixXd m = matrix_from_json(require(tensors, name));
    if (m.cols() != 1) throw FormatError(std::string(name) + " must be a column vector");
    v = m.col(0);
  });

  const Eigen::Index d = p.fused_dim();
  const Eigen::Index da = p.acoustic_dim();
  const Eigen::Index ds = p.semantic_dim();
  const bool ok = p.gate_semantic.rows() == d && p.proj_acoustic.rows() == d && p.proj_acoustic.cols() == da &&
                  p.proj_semantic.rows() == d && p.proj_semantic.cols() == ds && p.head_hi.rows() == 4 &&
                  p.head_hi.cols() == d && p.head_lo.rows() == k && p.head_lo.cols() == d &&
                  p.bias_hi.size() == 4 && p.bias_lo.size() == k && p.acoustic_mean.size() == da &&
                  p.acoustic_scale.size() == da && p.semantic_mean.size() == ds &&
                  p.semantic_scale.size() == ds &&
                  (p.mode != ContextMode::Attention ||
                   (p.query.rows() == d && p.query.cols() == d && p.key.rows() == d && p.key.cols() == d &&
                    p.value.rows() == d && p.value.cols() == d));
  if (!ok) throw FormatError("checkpoint tensor shapes are inconsistent");
  return p;
}

std::string format_predictions(std::string_view audio_id, const StreamPrediction& pred, LowScheme scheme) {
  std::string out;
  for (std::size_t t = 0; t < pred.labels.size(); ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    std::vector<double> phi(pred.p_hi.cols()), plo(pred.p_lo.cols());
    for (Eigen::Index c = 0; c < pred.p_hi.cols(); ++c) phi[static_cast<std::size_t>(c)] = pred.p_hi(row, c);
    for (Eigen::Index c = 0; c < pred.p_lo.cols(); ++c) plo[static_cast<std::size_t>(c)] = pred.p_lo(row, c);
    const auto& s = pred.labels[t];
    json r{{"audio_id", audio_id}, {"t", s.t}, {"hi", to_string(*s.hi)}, {"lo", to_string(*s.lo)},
           {"p_hi", phi}, {"p_lo", plo}};
    (void)scheme;
    out += r.dump();
    out += '\n';
  }
  return out;
}

}  // namespace duplex
