#include <doctest.h>

#include "duplex/thought_graph.hpp"

using namespace duplex;

namespace {

Adjacency mat(std::initializer_list<std::initializer_list<int>> rows) {
  Adjacency a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (int v : row) a(r, c++) = v;
    ++r;
  }
  return a;
}

}  // namespace

TEST_CASE("text graph adjacency") {
  const auto empty = build_text_graph({});
  CHECK(empty.size() == 0);
  CHECK(empty.adjacency.size() == 0);

  const std::vector<Triple> one{{"a", "r", "b"}};
  const auto g = build_text_graph(one);
  REQUIRE(g.size() == 2);
  CHECK(g.nodes[0].label == "a");
  CHECK(g.nodes[1].label == "b");
  CHECK(g.adjacency == mat({{1, 1}, {0, 1}}));

  const std::vector<Triple> multi{{"a", "r1", "b"}, {"a", "r2", "b"}, {"b", "r3", "a"}};
  CHECK(build_text_graph(multi).adjacency == mat({{1, 2}, {1, 1}}));

  const std::vector<Triple> reflexive{{"a", "is", "a"}};
  CHECK(build_text_graph(reflexive).adjacency == mat({{2}}));
}

TEST_CASE("span deduplication is case-insensitive and trimmed") {
  const std::vector<Triple> t{{"The Dog", "chased", "cat"}, {" the dog ", "saw", "CAT"}};
  const auto g = build_text_graph(t);
  CHECK(g.size() == 2);
  CHECK(g.adjacency(0, 1) == 2);
  CHECK(g.relations.size() == 2);
  CHECK_THROWS_AS(build_text_graph(std::vector<Triple>{{"  ", "r", "b"}}), std::invalid_argument);
}

TEST_CASE("speech-act augmentation") {
  const auto two = augment_with_speech_acts(build_text_graph({}), HighAct::Directive, LowAct::Continuation);
  CHECK(two.size() == 2);
  CHECK(two.adjacency == Adjacency::Identity(2, 2));

  const std::vector<Triple> one{{"a", "r", "b"}};
  const auto g = augment_with_speech_acts(build_text_graph(one), HighAct::Constative, LowAct::Backchannel);
  REQUIRE(g.size() == 4);
  CHECK(g.adjacency == mat({{1, 1, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}));
  CHECK(g.nodes[2].label == "SA_High=Constative");
  CHECK(g.nodes[3].kind == NodeKind::SaLow);
  CHECK_THROWS(augment_with_speech_acts(g, HighAct::Constative, LowAct::Backchannel));

  const auto labels = union_nodes(one, HighAct::Constative, LowAct::Backchannel);
  CHECK(labels == std::vector<std::string>{"a", "b", "SA_High=Constative", "SA_Low=Backchannel"});
  CHECK(union_nodes({}, HighAct::Constative, LowAct::Backchannel).size() == 2);
}

TEST_CASE("graph files round trip and validation") {
  const std::vector<Triple> one{{"a", "r", "b"}};
  const auto g = augment_with_speech_acts(build_text_graph(one), HighAct::Constative, LowAct::Backchannel);
  const auto files = serialize(g);
  CHECK(deserialize(files.nodes_json, files.adjacency_json) == g);

  const std::string nodes3 = R"([{"label":"a","kind":"text"},{"label":"b","kind":"text"},{"label":"c","kind":"text"}])";
  CHECK_THROWS(deserialize(nodes3, R"({"n":3,"entries":[[0,0,0]]})"));
  CHECK_THROWS(deserialize(nodes3, R"({"n":3,"entries":[[3,0,1]]})"));
}
