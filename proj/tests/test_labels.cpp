#include <doctest.h>

#include <cmath>
#include <random>

#include "duplex/behavior_labels.hpp"

using namespace duplex;

TEST_CASE("low label priority") {
  const std::vector<LowAct> bt{LowAct::Backchannel, LowAct::TurnTaking};
  const std::vector<LowAct> it{LowAct::TurnTaking, LowAct::Interruption};
  const std::vector<LowAct> ib{LowAct::Interruption, LowAct::Backchannel, LowAct::Continuation};
  CHECK(resolve_low_label(bt) == LowAct::Backchannel);
  CHECK(resolve_low_label({}) == LowAct::Continuation);
  CHECK(resolve_low_label(it) == LowAct::Interruption);
  CHECK(resolve_low_label(ib) == LowAct::Backchannel);
}

TEST_CASE("inverse-frequency weights") {
  const std::vector<std::size_t> uniform{25, 25, 25, 25};
  for (double w : inverse_frequency(uniform)) CHECK(w == doctest::Approx(1.0));

  const std::vector<std::size_t> counts{97, 149, 54, 548};
  const auto w = inverse_frequency(counts);
  // oracle: raw N / count, then scaled so that sum count * w = N
  const double n = 848.0;
  std::vector<double> raw;
  for (auto c : counts) raw.push_back(n / static_cast<double>(c));
  double mean = 0;
  for (std::size_t c = 0; c < 4; ++c) mean += static_cast<double>(counts[c]) * raw[c] / n;
  for (std::size_t c = 0; c < 4; ++c) CHECK(w[c] == doctest::Approx(raw[c] / mean).epsilon(1e-12));
  CHECK(w[0] == doctest::Approx(2.19).epsilon(0.01));
  CHECK(w[1] == doctest::Approx(1.43).epsilon(0.01));
  CHECK(w[2] == doctest::Approx(3.93).epsilon(0.01));
  CHECK(w[3] == doctest::Approx(0.39).epsilon(0.02));

  std::vector<std::size_t> absent;
  const std::vector<std::size_t> gap{10, 0, 30, 60};
  const auto g = inverse_frequency(gap, &absent);
  CHECK(absent == std::vector<std::size_t>{1});
  CHECK(g[1] == *std::max_element(g.begin(), g.end()));
  CHECK(g[1] == g[0]);
}

TEST_CASE("weighted cross-entropy") {
  const std::size_t n = 7;
  LabelTimeline tl;
  for (std::size_t t = 0; t < n; ++t) tl.push_back(static_cast<HighAct>(t % 4), static_cast<LowAct>((t + 1) % 4));
  const auto unit = ClassWeights::uniform();

  Eigen::MatrixXd uni = Eigen::MatrixXd::Constant(n, 4, 0.25);
  CHECK(weighted_ce_loss(uni, uni, tl, unit) == doctest::Approx(n * 2 * std::log(4.0)).epsilon(1e-12));

  Eigen::MatrixXd hi = Eigen::MatrixXd::Zero(n, 4), lo = hi;
  for (std::size_t t = 0; t < n; ++t) {
    hi(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t % 4)) = 1.0;
    lo(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>((t + 1) % 4)) = 1.0;
  }
  CHECK(weighted_ce_loss(hi, lo, tl, unit) == 0.0);

  // random fixture against a naive loop, with missing labels and non-unit weights
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<SecondLabel> secs;
  Eigen::MatrixXd ph(20, 4), pl(20, 4);
  for (int t = 0; t < 20; ++t) {
    for (int c = 0; c < 4; ++c) {
      ph(t, c) = u(rng);
      pl(t, c) = u(rng);
    }
    ph.row(t) /= ph.row(t).sum();
    pl.row(t) /= pl.row(t).sum();
    SecondLabel s{t, {}, {}};
    if (t % 3) s.hi = static_cast<HighAct>(rng() % 4);
    if (t % 5) s.lo = static_cast<LowAct>(rng() % 4);
    secs.push_back(s);
  }
  ClassWeights w = unit;
  w.hi = {0.5, 1.5, 2.0, 0.7};
  w.lo = {3.0, 0.2, 1.1, 0.9};
  w.alpha = 0.8;
  w.beta = 1.3;
  double oracle = 0;
  for (int t = 0; t < 20; ++t) {
    const auto& s = secs[static_cast<std::size_t>(t)];
    if (s.hi) oracle -= w.alpha * w.hi[static_cast<std::size_t>(*s.hi)] * std::log(ph(t, static_cast<int>(*s.hi)));
    if (s.lo) oracle -= w.beta * w.lo[static_cast<std::size_t>(*s.lo)] * std::log(pl(t, static_cast<int>(*s.lo)));
  }
  CHECK(std::abs(weighted_ce_loss(ph, pl, LabelTimeline(secs), w) - oracle) < 1e-9);
}

TEST_CASE("event distribution") {
  const std::vector<std::size_t> counts{97, 149, 54, 548};
  const auto pct = event_distribution(counts);
  CHECK(std::round(pct[0] * 10) / 10 == doctest::Approx(11.4));
  CHECK(std::round(pct[1] * 10) / 10 == doctest::Approx(17.6));
  CHECK(std::round(pct[2] * 10) / 10 == doctest::Approx(6.4));
  CHECK(std::round(pct[3] * 10) / 10 == doctest::Approx(64.6));

  LabelTimeline single;
  for (int t = 0; t < 5; ++t) single.push_back(std::nullopt, LowAct::Backchannel);
  const auto one = event_distribution(single);
  CHECK(one[static_cast<std::size_t>(LowAct::Backchannel)] == 100.0);

  std::mt19937_64 rng(12);
  LabelTimeline tl;
  std::array<double, 4> naive{};
  double labeled = 0;
  for (int t = 0; t < 300; ++t) {
    std::optional<LowAct> lo;
    if (rng() % 7) {
      lo = static_cast<LowAct>(rng() % 4);
      naive[static_cast<std::size_t>(*lo)] += 1;
      labeled += 1;
    }
    tl.push_back(std::nullopt, lo);
  }
  const auto got = event_distribution(tl);
  for (std::size_t c = 0; c < 4; ++c) CHECK(got[c] == doctest::Approx(100.0 * naive[c] / labeled).epsilon(1e-12));
}

TEST_CASE("three-class scheme drops Interruption") {
  CHECK(low_class_count(LowScheme::ThreeClass) == 3);
  CHECK_FALSE(low_class_index(LowAct::Interruption, LowScheme::ThreeClass).has_value());
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(low_class_index(low_act_from_index(c, LowScheme::ThreeClass), LowScheme::ThreeClass) == c);
  }
}

TEST_CASE("timeline JSONL round trip") {
  LabelTimeline tl;
  tl.push_back(HighAct::Directive, LowAct::TurnTaking);
  tl.push_back(std::nullopt, LowAct::Continuation);
  tl.push_back(HighAct::Acknowledgment, std::nullopt);
  const auto back = parse_timelines(format_timeline("x", tl));
  REQUIRE(back.count("x") == 1);
  CHECK(back.at("x") == tl);
  CHECK(parse_high_act("Constatives") == HighAct::Constative);
  CHECK(parse_low_act("backchannel") == LowAct::Backchannel);
  CHECK_FALSE(parse_low_act("laughter").has_value());
}
