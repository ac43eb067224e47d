#include <doctest.h>

#include <cmath>

#include "cli/commands.hpp"
#include "duplex/corpus_stitcher.hpp"
#include "duplex/jsonl.hpp"
#include "duplex/wav.hpp"
#include "support/fixtures.hpp"

using namespace duplex;
namespace fs = std::filesystem;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "duplex");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("stats on a stereo file") {
  const auto dir = fixtures::temp_dir("cli_stats");
  std::mt19937_64 rng(1);
  write_duplex(dir / "a.wav", fixtures::random_stream(rng, 8000, 20.0));
  REQUIRE(run({"stats", (dir / "a.wav").string(), "--out", (dir / "s.json").string(), "--events-out",
               (dir / "e.jsonl").string()}) == 0);
  const auto s = json::parse(read_text(dir / "s.json"));
  const std::string dump = s.dump();
  for (const char* kind : {"IPU", "Pause", "Gap", "Overlap"}) CHECK(dump.find(kind) != std::string::npos);
  CHECK_FALSE(read_jsonl(dir / "e.jsonl").empty());
  CHECK(run({"stats", (dir / "missing.wav").string()}) != 0);
}

TEST_CASE("train, infer and evaluate on a toy manifest") {
  const auto dir = fixtures::temp_dir("cli_train");
  const auto manifest = fixtures::write_toy_dataset(dir, {fixtures::toy_separable(30, 1), fixtures::toy_separable(20, 2)});
  const std::vector<std::string> train{"train", "--manifest", manifest.string(), "--window-s", "5", "--epochs", "5",
                                       "--lr", "0.05", "--context", "ema"};
  auto a = train, b = train;
  a.insert(a.end(), {"--out", (dir / "a.json").string()});
  b.insert(b.end(), {"--out", (dir / "b.json").string()});
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  CHECK(read_text(dir / "a.json") == read_text(dir / "b.json"));
  CHECK(fs::exists(dir / "a.json.trace.json"));

  REQUIRE(run({"infer", "--manifest", manifest.string(), "--checkpoint", (dir / "a.json").string(), "--out",
               (dir / "pred.jsonl").string(), "--window-s", "5"}) == 0);
  const auto preds = read_jsonl(dir / "pred.jsonl");
  CHECK(preds.size() == 50);
  for (const auto& p : preds) {
    CHECK(p.at("p_hi").size() == 4);
    CHECK(p.at("p_lo").size() == 4);
  }

  REQUIRE(run({"eval", "--mode", "labels", "--pred", (dir / "pred.jsonl").string(), "--ref",
               (dir / "labels.jsonl").string(), "--out", (dir / "eval.json").string()}) == 0);
  const auto rep = json::parse(read_text(dir / "eval.json"));
  CHECK(rep.contains("hi"));
  CHECK(rep.at("orphan_predictions").empty());
  CHECK(rep.at("orphan_references").empty());

  // three-class training drops Interruption from the low head
  REQUIRE(run({"train", "--manifest", manifest.string(), "--window-s", "5", "--epochs", "2", "--classes-lo", "3",
               "--out", (dir / "c3.json").string()}) == 0);
  CHECK(params_from_json(read_text(dir / "c3.json")).low_classes() == 3);

  CHECK(run({"train", "--manifest", manifest.string(), "--out", (dir / "x.json").string(), "--context", "lstm"}) != 0);
  CHECK(run({"train", "--manifest", manifest.string(), "--out", (dir / "x.json").string(), "--window-s", "-1"}) != 0);
}

TEST_CASE("graph corpus files") {
  const auto dir = fixtures::temp_dir("cli_graph");
  write_text(dir / "triples.jsonl",
             R"({"audio_id":"d","t":0,"subject":"we","relation":"need","object":"a plan"}
{"audio_id":"d","t":2,"subject":"a plan","relation":"is","object":"ready"}
)");
  LabelTimeline tl;
  for (int t = 0; t < 3; ++t) tl.push_back(HighAct::Directive, LowAct::Continuation);
  write_text(dir / "labels.jsonl", format_timeline("d", tl));
  REQUIRE(run({"graph", "--triples", (dir / "triples.jsonl").string(), "--labels", (dir / "labels.jsonl").string(),
               "--out-dir", (dir / "out").string(), "--window-s", "2"}) == 0);
  const auto index = read_jsonl(dir / "out" / "preproc_index.jsonl");
  REQUIRE(index.size() == 3);
  for (const auto& r : index) {
    CHECK(fs::exists(dir / "out" / r.at("nodes_path").get<std::string>()));
    CHECK(fs::exists(dir / "out" / r.at("adj_path").get<std::string>()));
  }
  // second 2 sees triples from (0, 2]: only the t=2 triple
  const auto g = deserialize(read_text(dir / "out" / index[2].at("nodes_path").get<std::string>()),
                             read_text(dir / "out" / index[2].at("adj_path").get<std::string>()));
  CHECK(g.size() == 4);
  CHECK(g.nodes[0].label == "a plan");
}

TEST_CASE("ablation grid") {
  const auto dir = fixtures::temp_dir("cli_ablate");
  const auto manifest = fixtures::write_toy_dataset(dir, {fixtures::toy_separable(30, 1)});
  REQUIRE(run({"ablate", "--manifest", manifest.string(), "--out", (dir / "grid.csv").string(), "--windows", "3,6",
               "--lookaheads", "0,2", "--seeds", "1,2,3", "--epochs", "2", "--jobs", "2"}) == 0);
  const auto csv = read_text(dir / "grid.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(fs::exists(dir / "grid.csv.status.csv"));
  CHECK(csv.find("macro_f1_hi_mean,macro_f1_hi_std") != std::string::npos);

  const auto ms = cli::mean_std({0.2, 0.4, 0.9});
  CHECK(ms.mean == doctest::Approx(0.5));
  CHECK(ms.std == doctest::Approx(std::sqrt((0.09 + 0.01 + 0.16) / 2.0)));
  CHECK(cli::mean_std({0.3}).std == 0.0);
}

TEST_CASE("stitch end to end") {
  const auto dir = fixtures::temp_dir("cli_stitch");
  write_text(dir / "script.txt",
             "(1) speaker1: I think we [backchannel] should go {Constatives}\n"
             "(2) speaker2(backchannel): mhm {Acknowledgments}\n"
             "(3) speaker2: sure {Commissives}\n");
  std::string clips;
  for (int k = 1; k <= 3; ++k) {
    const auto c = fixtures::tone(8000, k == 2 ? 400 : 1500, 200.0 + 50 * k, 0.4);
    wav::write_pcm16(dir / ("c" + std::to_string(k) + ".wav"), {8000, 1, wav::SampleFormat::Pcm16, c.samples});
    clips += R"({"index": )" + std::to_string(k) + R"(, "path": "c)" + std::to_string(k) + R"(.wav"})" + "\n";
  }
  write_text(dir / "clips.jsonl", clips);
  REQUIRE(run({"stitch", "--script", (dir / "script.txt").string(), "--clips", (dir / "clips.jsonl").string(),
               "--out", (dir / "out.wav").string(), "--labels-out", (dir / "labels.jsonl").string(), "--plan-out",
               (dir / "plan.json").string()}) == 0);
  const auto audio = load_duplex(dir / "out.wav").audio;
  CHECK(audio.frames() == static_cast<std::size_t>((1500 + 200 + 1500) * 8));
  const auto labels = read_timelines(dir / "labels.jsonl");
  REQUIRE(labels.count("dialogue") == 1);
  CHECK(labels.at("dialogue").size() == 3);
  CHECK(json::parse(read_text(dir / "plan.json")).dump().find("backchannel") != std::string::npos);
}

TEST_CASE("subcommand and config handling") {
  CHECK(run({}) != 0);
  CHECK(run({"bogus"}) != 0);
  const auto dir = fixtures::temp_dir("cli_config");
  const auto manifest = fixtures::write_toy_dataset(dir, {fixtures::toy_separable(10, 1)});
  write_text(dir / "cfg.toml", "[train]\nepochs = 1\nwindow-s = 3\n");
  CHECK(run({"--config", (dir / "cfg.toml").string(), "train", "--manifest", manifest.string(), "--out",
             (dir / "m.json").string()}) == 0);
}
