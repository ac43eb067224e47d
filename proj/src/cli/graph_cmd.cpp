#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "duplex/jsonl.hpp"
#include "duplex/thought_graph.hpp"

namespace duplex::cli {

int cmd_graph(const GraphOptions& opt) {
  if (!(opt.window_s > 0.0)) throw std::invalid_argument("--window-s must be positive");
  const auto w = static_cast<int>(std::llround(opt.window_s));

  std::map<std::string, std::map<int, std::vector<Triple>>> triples;
  for (const auto& r : read_jsonl(opt.triples)) {
    Triple tr{require(r, "subject").get<std::string>(), r.value("relation", std::string()),
              require(r, "object").get<std::string>()};
    triples[require(r, "audio_id").get<std::string>()][require(r, "t").get<int>()].push_back(std::move(tr));
  }
  std::map<std::string, LabelTimeline> labels;
  if (opt.labels) labels = read_timelines(*opt.labels);
  std::map<std::string, Transcript> transcripts;
  if (opt.transcripts) transcripts = parse_transcripts(read_text(*opt.transcripts));
  std::map<std::pair<std::string, int>, std::string> rationales;
  if (opt.rationales) {
    for (const auto& r : read_jsonl(*opt.rationales)) {
      rationales[{require(r, "audio_id").get<std::string>(), require(r, "t").get<int>()}] =
          require(r, "rationale_gt").get<std::string>();
    }
  }

  std::set<std::string> ids;
  for (const auto& [id, _] : triples) ids.insert(id);
  for (const auto& [id, _] : labels) ids.insert(id);

  std::string index;
  std::size_t flagged = 0;
  for (const auto& id : ids) {
    std::set<int> seconds;
    if (auto it = triples.find(id); it != triples.end()) {
      for (const auto& [t, _] : it->second) seconds.insert(t);
    }
    if (auto it = labels.find(id); it != labels.end()) {
      for (const auto& s : it->second) seconds.insert(s.t);
    }
    for (int t : seconds) {
      // triples and words visible to second t: (t - W, t]
      std::vector<Triple> visible;
      std::string text_window;
      for (int u = t - w + 1; u <= t; ++u) {
        if (auto it = triples.find(id); it != triples.end()) {
          if (auto jt = it->second.find(u); jt != it->second.end()) {
            visible.insert(visible.end(), jt->second.begin(), jt->second.end());
          }
        }
        if (auto it = transcripts.find(id); it != transcripts.end() && u >= 0 &&
                                            static_cast<std::size_t>(u) < it->second.size()) {
          const auto& words = it->second[static_cast<std::size_t>(u)];
          if (!words.empty()) text_window += (text_window.empty() ? "" : " ") + words;
        }
      }
      ThoughtGraph g = build_text_graph(visible);
      bool sa_missing = true;
      if (auto it = labels.find(id); it != labels.end() && t >= 0 && static_cast<std::size_t>(t) < it->second.size()) {
        const auto& s = it->second[static_cast<std::size_t>(t)];
        if (s.hi && s.lo) {
          g = augment_with_speech_acts(g, *s.hi, *s.lo);
          sa_missing = false;
        }
      }
      if (sa_missing) {
        ++flagged;
        std::cerr << "warning: " << id << " t=" << t << ": no complete label, speech-act nodes omitted\n";
      }
      const GraphFiles files = serialize(g);
      const fs::path rel_nodes = fs::path("graphs") / id / (std::to_string(t) + ".nodes.json");
      const fs::path rel_adj = fs::path("graphs") / id / (std::to_string(t) + ".adj.json");
      write_text(opt.out_dir / rel_nodes, files.nodes_json);
      write_text(opt.out_dir / rel_adj, files.adjacency_json);

      json rec{{"audio_id", id},         {"t", t},
               {"text_window", text_window}, {"nodes_path", rel_nodes.generic_string()},
               {"adj_path", rel_adj.generic_string()}};
      auto rt = rationales.find({id, t});
      rec["rationale_gt"] = rt != rationales.end() ? json(rt->second) : json(nullptr);
      if (sa_missing) rec["sa_missing"] = true;
      index += rec.dump() + "\n";
    }
  }
  write_text(opt.out_dir / "preproc_index.jsonl", index);
  if (flagged > 0) std::cerr << flagged << " graph(s) built without speech-act nodes\n";
  return 0;
}

void register_graph(CLI::App& app) {
  auto opt = std::make_shared<GraphOptions>();
  auto* sub = app.add_subcommand("graph", "build per-second thought graphs and the corpus index");
  sub->add_option("--triples", opt->triples, "triples JSONL {audio_id, t, subject, relation, object}")->required();
  sub->add_option("--labels", opt->labels, "timeline JSONL for speech-act nodes");
  sub->add_option("--transcripts", opt->transcripts, "transcript JSONL for text_window");
  sub->add_option("--rationales", opt->rationales, "ground-truth rationale JSONL {audio_id, t, rationale_gt}");
  sub->add_option("--out-dir", opt->out_dir)->required();
  sub->add_option("--window-s", opt->window_s)->capture_default_str();
  sub->callback([opt] { command_status() = cmd_graph(*opt); });
}

}  // namespace duplex::cli
