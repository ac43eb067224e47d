#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "duplex/behavior_labels.hpp"

namespace duplex {

struct Triple {
  std::string subject;
  std::string relation;
  std::string object;
};

enum class NodeKind { Text, SaHigh, SaLow };

std::string_view to_string(NodeKind kind);

struct GraphNode {
  std::string label;
  NodeKind kind = NodeKind::Text;

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

// Relation text attached to a subject->object pair; display only, carries no weight.
struct EdgeLabel {
  std::size_t from = 0;
  std::size_t to = 0;
  std::string relation;

  friend bool operator==(const EdgeLabel&, const EdgeLabel&) = default;
};

using Adjacency = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

struct ThoughtGraph {
  std::vector<GraphNode> nodes;
  Adjacency adjacency;
  std::vector<EdgeLabel> relations;

  std::size_t size() const { return nodes.size(); }
  bool augmented() const;

  friend bool operator==(const ThoughtGraph& a, const ThoughtGraph& b) {
    return a.nodes == b.nodes && a.adjacency == b.adjacency && a.relations == b.relations;
  }
};

// Case-insensitive, whitespace-trimmed key used for span deduplication.
std::string span_key(std::string_view span);

// A = I + sum_k e_{s_k} e_{o_k}^T over deduplicated subject/object spans in
// first-appearance order. Throws if a subject or object is blank.
ThoughtGraph build_text_graph(std::span<const Triple> triples);

std::string speech_act_label(HighAct hi);
std::string speech_act_label(LowAct lo);

// Appends SA_High / SA_Low nodes with block-diagonal identity padding.
ThoughtGraph augment_with_speech_acts(const ThoughtGraph& graph, HighAct hi, LowAct lo);

// Node labels of build + augment, without building the matrix.
std::vector<std::string> union_nodes(std::span<const Triple> triples, HighAct hi, LowAct lo);

struct GraphFiles {
  std::string nodes_json;
  std::string adjacency_json;
};

// nodes: [{"label", "kind"}]; adjacency: {"n", "entries": [[row, col, count], ...]}
// listing only nonzero entries in row-major order (plus optional "relations").
GraphFiles serialize(const ThoughtGraph& graph);
ThoughtGraph deserialize(std::string_view nodes_json, std::string_view adjacency_json);

}  // namespace duplex
