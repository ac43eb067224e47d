#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "duplex/jsonl.hpp"
#include "duplex/rationale_metrics.hpp"

namespace duplex::cli {

namespace {

std::vector<std::string> high_names() {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < kHighClasses; ++c) names.emplace_back(to_string(static_cast<HighAct>(c)));
  return names;
}

std::vector<std::string> low_names(LowScheme scheme) {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < low_class_count(scheme); ++c) names.emplace_back(to_string(low_act_from_index(c, scheme)));
  return names;
}

Eigen::VectorXd to_vector(const json& arr) {
  const auto v = arr.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json eval_labels(const EvalOptions& opt) {
  if (opt.predictions.size() != 1) throw std::invalid_argument("labels mode takes exactly one prediction file");
  std::map<std::pair<std::string, int>, json> preds;
  for (auto& r : read_jsonl(opt.predictions.front())) {
    preds[{require(r, "audio_id").get<std::string>(), require(r, "t").get<int>()}] = r;
  }
  const auto refs = read_timelines(opt.reference);

  std::vector<ScoredPrediction> hi, lo;
  std::optional<Eigen::Index> k;
  json orphan_refs = json::array();
  std::map<std::pair<std::string, int>, bool> used;
  for (const auto& [id, timeline] : refs) {
    for (const auto& s : timeline) {
      auto it = preds.find({id, s.t});
      if (it == preds.end()) {
        orphan_refs.push_back({{"audio_id", id}, {"t", s.t}});
        continue;
      }
      used[it->first] = true;
      const json& p = it->second;
      if (s.hi) {
        Eigen::VectorXd v = to_vector(require(p, "p_hi"));
        if (v.size() != static_cast<Eigen::Index>(kHighClasses)) throw FormatError("p_hi must have 4 entries");
        hi.push_back({static_cast<std::size_t>(*s.hi), std::move(v)});
      }
      if (s.lo) {
        Eigen::VectorXd v = to_vector(require(p, "p_lo"));
        if (v.size() != 3 && v.size() != 4) throw FormatError("p_lo must have 3 or 4 entries");
        if (k && *k != v.size()) throw FormatError("p_lo length varies between records");
        k = v.size();
        const LowScheme scheme = v.size() == 3 ? LowScheme::ThreeClass : LowScheme::FourClass;
        if (auto idx = low_class_index(*s.lo, scheme)) lo.push_back({*idx, std::move(v)});
      }
    }
  }
  json orphan_preds = json::array();
  for (const auto& [key, _] : preds) {
    if (!used.count(key)) orphan_preds.push_back({{"audio_id", key.first}, {"t", key.second}});
  }
  if (hi.empty() && lo.empty()) throw std::runtime_error("no (audio_id, t) pairs joined predictions to references");

  json out{{"mode", "labels"}, {"orphan_predictions", orphan_preds}, {"orphan_references", orphan_refs}};
  if (!hi.empty()) out["hi"] = json::parse(report_to_json(classification_report(hi, kHighClasses, high_names())));
  if (!lo.empty()) {
    const LowScheme scheme = *k == 3 ? LowScheme::ThreeClass : LowScheme::FourClass;
    out["lo"] = json::parse(report_to_json(classification_report(lo, low_class_count(scheme), low_names(scheme))));
  }
  if (!hi.empty()) std::cout << "high-level\n" << report_to_text(classification_report(hi, kHighClasses, high_names()));
  if (!lo.empty()) {
    const LowScheme scheme = *k == 3 ? LowScheme::ThreeClass : LowScheme::FourClass;
    std::cout << "\nlow-level\n" << report_to_text(classification_report(lo, low_class_count(scheme), low_names(scheme)));
  }
  return out;
}

json eval_rationales(const EvalOptions& opt) {
  if (opt.predictions.empty()) throw std::invalid_argument("no prediction files");
  std::vector<std::vector<RationaleRecord>> runs;
  for (const auto& p : opt.predictions) runs.push_back(parse_rationales(read_text(p), "rationale"));
  const auto refs = parse_rationales(read_text(opt.reference), "rationale_gt");
  const AlignmentReport report = align_and_score(runs, refs);
  std::cout << alignment_to_text(report);
  return json::parse(alignment_to_json(report));
}

}  // namespace

int cmd_eval(const EvalOptions& opt) {
  json out;
  if (opt.mode == "labels") {
    out = eval_labels(opt);
  } else if (opt.mode == "rationales") {
    out = eval_rationales(opt);
  } else {
    throw std::invalid_argument("unknown eval mode '" + opt.mode + "'");
  }
  if (opt.out) write_text(*opt.out, out.dump(1));
  return 0;
}

void register_eval(CLI::App& app) {
  auto opt = std::make_shared<EvalOptions>();
  auto* sub = app.add_subcommand("eval", "score predictions against references");
  sub->add_option("--mode", opt->mode)->check(CLI::IsMember({"labels", "rationales"}))->capture_default_str();
  sub->add_option("--pred", opt->predictions, "prediction JSONL (repeat for several seeds in rationales mode)")
      ->required();
  sub->add_option("--ref", opt->reference, "reference timeline or rationale JSONL")->required();
  sub->add_option("--out", opt->out, "JSON report");
  sub->callback([opt] { command_status() = cmd_eval(*opt); });
}

}  // namespace duplex::cli
