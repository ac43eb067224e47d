#include "duplex/thought_graph.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "duplex/jsonl.hpp"

namespace duplex {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Text: return "text";
    case NodeKind::SaHigh: return "sa-h";
    case NodeKind::SaLow: return "sa-l";
  }
  return "?";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<NodeKind> parse_kind(std::string_view s) {
  if (s == "text") return NodeKind::Text;
  if (s == "sa-h") return NodeKind::SaHigh;
  if (s == "sa-l") return NodeKind::SaLow;
  return std::nullopt;
}

}  // namespace

std::string span_key(std::string_view span) {
  std::string out(trim(span));
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool ThoughtGraph::augmented() const {
  return std::any_of(nodes.begin(), nodes.end(),
                     [](const GraphNode& n) { return n.kind != NodeKind::Text; });
}

ThoughtGraph build_text_graph(std::span<const Triple> triples) {
  ThoughtGraph g;
  std::map<std::string, std::size_t> index;
  auto intern = [&](std::string_view span) {
    const std::string key = span_key(span);
    if (key.empty()) throw std::invalid_argument("triple has an empty subject or object");
    auto [it, inserted] = index.emplace(key, g.nodes.size());
    if (inserted) g.nodes.push_back({std::string(trim(span)), NodeKind::Text});
    return it->second;
  };

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(triples.size());
  for (const auto& t : triples) {
    const std::size_t s = intern(t.subject);
    const std::size_t o = intern(t.object);
    pairs.emplace_back(s, o);
    const std::string rel(trim(t.relation));
    if (!rel.empty()) g.relations.push_back({s, o, rel});
  }

  const auto n = static_cast<Eigen::Index>(g.nodes.size());
  g.adjacency = Adjacency::Identity(n, n);
  for (const auto& [s, o] : pairs) {
    g.adjacency(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(o)) += 1;
  }
  return g;
}

std::string speech_act_label(HighAct hi) { return "SA_High=" + std::string(to_string(hi)); }
std::string speech_act_label(LowAct lo) { return "SA_Low=" + std::string(to_string(lo)); }

ThoughtGraph augment_with_speech_acts(const ThoughtGraph& graph, HighAct hi, LowAct lo) {
  if (graph.augmented()) throw std::logic_error("graph already carries speech-act nodes");
  ThoughtGraph out;
  out.nodes = graph.nodes;
  out.nodes.push_back({speech_act_label(hi), NodeKind::SaHigh});
  out.nodes.push_back({speech_act_label(lo), NodeKind::SaLow});
  const Eigen::Index n = graph.adjacency.rows();
  out.adjacency = Adjacency::Zero(n + 2, n + 2);
  out.adjacency.topLeftCorner(n, n) = graph.adjacency;
  out.adjacency.bottomRightCorner(2, 2) = Adjacency::Identity(2, 2);
  out.relations = graph.relations;
  return out;
}

std::vector<std::string> union_nodes(std::span<const Triple> triples, HighAct hi, LowAct lo) {
  std::vector<std::string> labels;
  std::set<std::string> seen;
  auto add = [&](std::string_view span) {
    const std::string key = span_key(span);
    if (key.empty()) throw std::invalid_argument("triple has an empty subject or object");
    if (seen.insert(key).second) labels.emplace_back(trim(span));
  };
  for (const auto& t : triples) {
    add(t.subject);
    add(t.object);
  }
  labels.push_back(speech_act_label(hi));
  labels.push_back(speech_act_label(lo));
  return labels;
}

GraphFiles serialize(const ThoughtGraph& graph) {
  json nodes = json::array();
  for (const auto& n : graph.nodes) nodes.push_back({{"label", n.label}, {"kind", to_string(n.kind)}});

  json entries = json::array();
  for (Eigen::Index r = 0; r < graph.adjacency.rows(); ++r) {
    for (Eigen::Index c = 0; c < graph.adjacency.cols(); ++c) {
      const int v = graph.adjacency(r, c);
      if (v != 0) entries.push_back({r, c, v});
    }
  }
  json adj{{"n", graph.nodes.size()}, {"entries", entries}};
  if (!graph.relations.empty()) {
    json rel = json::array();
    for (const auto& e : graph.relations) rel.push_back({e.from, e.to, e.relation});
    adj["relations"] = rel;
  }
  return {nodes.dump(), adj.dump()};
}

ThoughtGraph deserialize(std::string_view nodes_json, std::string_view adjacency_json) {
  json nodes;
  json adj;
  try {
    nodes = json::parse(nodes_json);
    adj = json::parse(adjacency_json);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed graph JSON: ") + e.what());
  }
  if (!nodes.is_array()) throw FormatError("nodes file must hold an array");

  ThoughtGraph g;
  for (const auto& n : nodes) {
    const auto kind = parse_kind(require(n, "kind").get<std::string>());
    if (!kind) throw FormatError("unknown node kind " + n.at("kind").dump());
    g.nodes.push_back({require(n, "label").get<std::string>(), *kind});
  }

  const json& jn = require(adj, "n");
  if (!jn.is_number_unsigned() && !(jn.is_number_integer() && jn.get<long long>() >= 0)) {
    throw FormatError("adjacency n must be a non-negative integer");
  }
  const auto n = jn.get<long long>();
  if (static_cast<std::size_t>(n) != g.nodes.size()) {
    throw FormatError("adjacency n does not match node count");
  }
  g.adjacency = Adjacency::Zero(n, n);
  Adjacency seen = Adjacency::Zero(n, n);
  for (const auto& e : require(adj, "entries")) {
    if (!e.is_array() || e.size() != 3) throw FormatError("entry must be [row, col, count]");
    const auto r = e[0].get<long long>();
    const auto c = e[1].get<long long>();
    const auto v = e[2].get<long long>();
    if (r < 0 || c < 0 || r >= n || c >= n) {
      throw FormatError("entry index out of range: " + e.dump());
    }
    if (v <= 0) throw FormatError("entry counts must be positive: " + e.dump());
    if (seen(r, c)) throw FormatError("duplicate entry: " + e.dump());
    seen(r, c) = 1;
    g.adjacency(r, c) = static_cast<int>(v);
  }
  if (adj.contains("relations")) {
    for (const auto& e : adj.at("relations")) {
      if (!e.is_array() || e.size() != 3) throw FormatError("relation must be [from, to, text]");
      const auto f = e[0].get<long long>();
      const auto t = e[1].get<long long>();
      if (f < 0 || t < 0 || f >= n || t >= n) throw FormatError("relation index out of range");
      g.relations.push_back({static_cast<std::size_t>(f), static_cast<std::size_t>(t),
                             e[2].get<std::string>()});
    }
  }
  return g;
}

}  // namespace duplex
