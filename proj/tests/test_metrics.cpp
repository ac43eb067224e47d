#include <doctest.h>

#include <cmath>

#include "duplex/rationale_metrics.hpp"
#include "support/oracles.hpp"

using namespace duplex;

TEST_CASE("tokenizer") {
  CHECK(tokenize("Hello, World! It's -- well-known.").tokens ==
        std::vector<std::string>{"hello", "world", "it's", "well-known"});
  CHECK(tokenize("  ").empty());
}

TEST_CASE("BLEU-1") {
  CHECK(bleu1(tokenize("a b c"), tokenize("a b c")) == 1.0);
  CHECK(bleu1(tokenize("a b"), tokenize("c d")) == 0.0);
  CHECK(bleu1(tokenize("the cat sat"), tokenize("the cat sat down")) == doctest::Approx(0.7165).epsilon(1e-4));
  CHECK(bleu1(tokenize(""), tokenize("x")) == 0.0);
  // clipping: "the the the" vs "the cat" -> 1/3, no brevity penalty
  CHECK(bleu1(tokenize("the the the"), tokenize("the cat")) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ROUGE-1 and ROUGE-L") {
  CHECK(rouge1(tokenize("x y"), tokenize("x y")) == 1.0);
  CHECK(rougeL(tokenize("x y"), tokenize("x y")) == 1.0);
  CHECK(rougeL(tokenize("a b c"), tokenize("a x c")) == doctest::Approx(2.0 / 3.0));
  const auto fwd = tokenize("a b c d e"), rev = tokenize("e d c b a");
  CHECK(rouge1(fwd, rev) == 1.0);
  CHECK(rougeL(fwd, rev) == doctest::Approx(1.0 / 5.0));
  const std::vector<std::string> a{"a", "b", "c", "b", "d", "a", "b"}, b{"b", "d", "c", "a", "b", "a"};
  CHECK(lcs_length(a, b) == oracles::lcs(a, b));
  CHECK(lcs_length(a, b) == 4);
}

TEST_CASE("cosine similarity") {
  Eigen::VectorXd a(3), b(3);
  a << 1, 2, 3;
  CHECK(cosine_similarity(a, a).value == doctest::Approx(1.0));
  a << 1, 0, 0;
  b << 0, 1, 0;
  CHECK(cosine_similarity(a, b).value == 0.0);
  const auto z = cosine_similarity(a, Eigen::VectorXd::Zero(3));
  CHECK(z.zero_vector);
  CHECK(z.value == 0.0);
  CHECK_THROWS_AS(cosine_similarity(a, Eigen::VectorXd::Zero(2)), std::invalid_argument);
  CHECK(tf_cosine(tokenize("the cat"), tokenize("the dog")).value == doctest::Approx(0.5));
}

TEST_CASE("classification report") {
  std::vector<ScoredPrediction> perfect;
  for (std::size_t i = 0; i < 8; ++i) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(4);
    s(static_cast<Eigen::Index>(i % 4)) = 1.0;
    perfect.push_back({i % 4, s});
  }
  auto rep = classification_report(perfect, 4);
  CHECK(rep.macro_f1 == 1.0);
  CHECK(rep.micro_f1 == 1.0);
  CHECK(*rep.macro_auc == 1.0);

  std::vector<ScoredPrediction> flat;
  for (std::size_t i = 0; i < 8; ++i) flat.push_back({i % 4, Eigen::VectorXd::Constant(4, 0.25)});
  rep = classification_report(flat, 4);
  for (const auto& c : rep.per_class) CHECK(*c.auc == 0.5);

  // 6-example hand fixture, binary scores for class 1
  const std::vector<double> s{0.9, 0.8, 0.8, 0.4, 0.3, 0.1};
  const std::vector<std::uint8_t> pos{1, 0, 1, 1, 0, 0};
  // pairs (pos, neg): 0.9 beats all 3; 0.8 ties one 0.8, beats 0.3, 0.1 -> 2.5; 0.4 beats 0.3, 0.1 -> 2
  CHECK(*roc_auc(s, pos) == doctest::Approx(7.5 / 9.0).epsilon(1e-12));
  CHECK(*roc_auc(s, pos) == doctest::Approx(oracles::auc(s, pos)).epsilon(1e-12));

  std::vector<ScoredPrediction> missing;
  for (std::size_t i = 0; i < 6; ++i) missing.push_back({i % 2, Eigen::VectorXd::Random(3)});
  rep = classification_report(missing, 3);
  CHECK(rep.auc_excluded == std::vector<std::size_t>{2});
  CHECK_FALSE(rep.per_class[2].auc.has_value());
  CHECK(rep.macro_auc.has_value());
}

TEST_CASE("speaking style") {
  const std::vector<std::string> lex{"um", "uh", "you know"};
  TokenizedText t;
  for (int k = 0; k < 120; ++k) t.tokens.push_back("w");
  CHECK(speaking_style(t, 30.0, lex).wpm == 240.0);
  const auto empty = speaking_style(TokenizedText{}, 10.0, lex);
  CHECK(empty.wpm == 0.0);
  CHECK_FALSE(empty.fwr.has_value());
  CHECK(count_fillers(tokenize("um you know uh you"), lex) == 3);
  CHECK_THROWS(speaking_style(t, 0.0, lex));
  const auto table = style_table(speaking_style(t, 30.0, lex));
  CHECK(table.find("240.80") != std::string::npos);
  CHECK(table.find("6.89") != std::string::npos);
}

TEST_CASE("rationale alignment") {
  const auto refs = parse_rationales(
      R"({"audio_id":"a","t":0,"rationale_gt":"the user asks a question"}
{"audio_id":"a","t":1,"rationale_gt":"the speaker keeps talking"})",
      "rationale_gt");
  const auto same = parse_rationales(
      R"({"audio_id":"a","t":0,"rationale":"the user asks a question"}
{"audio_id":"a","t":1,"rationale":"the speaker keeps talking"})",
      "rationale");
  const auto rep = align_and_score(same, refs);
  CHECK(rep.pairs.size() == 2);
  CHECK(rep.item_means.at("bleu1").mean == doctest::Approx(1.0));
  CHECK(rep.item_means.at("rougeL").mean == doctest::Approx(1.0));
  CHECK(rep.item_means.at("similarity").mean == doctest::Approx(1.0));

  const auto partial = parse_rationales(
      R"({"audio_id":"a","t":0,"rationale":"a user asks"}
{"audio_id":"b","t":4,"rationale":"unmatched"})",
      "rationale");
  const auto p = align_and_score(partial, refs);
  REQUIRE(p.pairs.size() == 1);
  CHECK(p.orphan_predictions.size() == 1);
  CHECK(p.orphan_references.size() == 1);
  const auto c = tokenize("a user asks"), r = tokenize("the user asks a question");
  CHECK(p.pairs[0].bleu1 == doctest::Approx(oracles::bleu1(c.tokens, r.tokens)).epsilon(1e-12));
  CHECK(p.pairs[0].rougeL == doctest::Approx(oracles::rougeL(c.tokens, r.tokens)).epsilon(1e-12));
}

TEST_CASE("mean and 95% interval") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto ci = mean_ci(v);
  const double sd = std::sqrt(5.0 / 3.0);
  CHECK(ci.mean == 2.5);
  CHECK(ci.upper - ci.mean == doctest::Approx(1.96 * sd / 2.0));
}
