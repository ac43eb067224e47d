#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "duplex/jsonl.hpp"
#include "duplex/rationale_metrics.hpp"

namespace duplex::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CellMetrics {
  double macro_f1_hi = kNaN, macro_f1_lo = kNaN, micro_f1_hi = kNaN, micro_f1_lo = kNaN;
  double macro_auc_hi = kNaN, macro_auc_lo = kNaN;
};

struct Cell {
  std::size_t grid = 0;  // index into the (L, W, context) rows
  std::uint64_t seed = 0;
  fs::path dir;
  bool ok = false;
  std::string message;
  CellMetrics metrics;
};

struct GridPoint {
  double lookahead_s, window_s;
  std::string context;
};

struct WindowData {
  std::vector<TrainingSequence> train;
  std::vector<TrainingSequence> eval;
  double context_s = 0.0;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

fs::path cell_root(const AblateOptions& opt) {
  if (opt.cache_dir) return *opt.cache_dir;
  if (const char* env = std::getenv("DUPLEX_CACHE_DIR"); env && *env) return fs::path(env);
  return opt.out.parent_path() / (opt.out.stem().string() + "_cells");
}

CellMetrics run_cell(const WindowData& data, const ClassWeights& weights, const TrainConfig& config,
                     const fs::path& dir) {
  const TrainResult result = train(data.train, weights, config);
  write_text(dir / "checkpoint.json", params_to_json(result.params));
  const HeadPredictions preds = collect_predictions(result.params, data.eval);
  CellMetrics m;
  json metrics{{"loss_trace", result.loss_trace}};
  if (!preds.hi.empty()) {
    const auto r = classification_report(preds.hi, kHighClasses);
    m.macro_f1_hi = r.macro_f1;
    m.micro_f1_hi = r.micro_f1;
    m.macro_auc_hi = r.macro_auc.value_or(kNaN);
    metrics["hi"] = json::parse(report_to_json(r));
  }
  if (!preds.lo.empty()) {
    const auto r = classification_report(preds.lo, low_class_count(config.scheme));
    m.macro_f1_lo = r.macro_f1;
    m.micro_f1_lo = r.micro_f1;
    m.macro_auc_lo = r.macro_auc.value_or(kNaN);
    metrics["lo"] = json::parse(report_to_json(r));
  }
  write_text(dir / "metrics.json", metrics.dump(1));
  return m;
}

}  // namespace

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  if (values.empty()) return {kNaN, kNaN};
  const double n = static_cast<double>(values.size());
  for (double v : values) r.mean += v;
  r.mean /= n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / (n - 1.0));
  }
  return r;
}

AblateResult run_ablation(const AblateOptions& opt) {
  opt.detector.validate();
  if (opt.windows.empty() || opt.lookaheads.empty() || opt.contexts.empty() || opt.seeds.empty()) {
    throw std::invalid_argument("every ablation axis needs at least one value");
  }
  for (double w : opt.windows) {
    if (!(w > 0.0)) throw std::invalid_argument("window sizes must be positive");
  }
  for (double l : opt.lookaheads) {
    if (!(l >= 0.0)) throw std::invalid_argument("look-ahead values must be non-negative");
  }
  for (const auto& c : opt.contexts) parse_context_mode(c);

  const auto entries = load_manifest(opt.manifest);
  auto train_entries = select_split(entries, "train");
  std::vector<ManifestEntry> eval_entries;
  for (const auto& e : entries) {
    if (e.split == "test") eval_entries.push_back(e);
  }
  if (eval_entries.empty()) eval_entries = train_entries;
  if (train_entries.empty()) throw std::invalid_argument("no training entries in the manifest");
  const auto train_items = load_items(train_entries, true);
  const auto eval_items = load_items(eval_entries, true);

  std::vector<LabelTimeline> timelines;
  for (const auto& it : train_items) timelines.push_back(*it.labels);
  const LowScheme scheme = opt.detector.scheme();
  const ClassWeights weights =
      opt.detector.unweighted ? ClassWeights::uniform(scheme) : inverse_frequency_weights(timelines, scheme);

  // grid rows in table order: L outer, W inner, then context
  std::vector<double> ls = opt.lookaheads, ws = opt.windows;
  std::sort(ls.begin(), ls.end());
  std::sort(ws.begin(), ws.end());
  std::vector<GridPoint> grid;
  for (double l : ls) {
    for (double w : ws) {
      for (const auto& c : opt.contexts) grid.push_back({l, w, c});
    }
  }

  std::map<std::pair<double, double>, WindowData> windows;
  for (double l : ls) {
    for (double w : ws) {
      WindowData d;
      double seconds = 0.0;
      for (const auto& it : train_items) {
        auto s = item_sequences(it, w, l);
        d.train.insert(d.train.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
      }
      for (const auto& it : eval_items) {
        auto s = item_sequences(it, w, l);
        d.eval.insert(d.eval.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
        d.context_s += mean_context_s(it, w, l) * static_cast<double>(it.seconds);
        seconds += static_cast<double>(it.seconds);
      }
      if (seconds > 0.0) d.context_s /= seconds;
      windows[{l, w}] = std::move(d);
    }
  }

  const fs::path root = cell_root(opt);
  std::vector<Cell> cells;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (auto seed : opt.seeds) {
      Cell c;
      c.grid = g;
      c.seed = seed;
      c.dir = root / ("L" + num(grid[g].lookahead_s) + "_W" + num(grid[g].window_s) + "_" + grid[g].context) /
              ("seed" + std::to_string(seed));
      cells.push_back(std::move(c));
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      Cell& c = cells[k];
      const GridPoint& gp = grid[c.grid];
      try {
        DetectorOptions d = opt.detector;
        d.context = gp.context;
        d.seed = c.seed;
        d.window_s = gp.window_s;
        d.lookahead_s = gp.lookahead_s;
        c.metrics = run_cell(windows.at({gp.lookahead_s, gp.window_s}), weights, d.train_config(), c.dir);
        c.ok = true;
        write_text(c.dir / "status", "ok\n");
      } catch (const std::exception& e) {
        c.message = e.what();
        try {
          write_text(c.dir / "status", "failed: " + c.message + "\n");
        } catch (const std::exception&) {
        }
      }
    }
  };
  const auto jobs = static_cast<std::size_t>(std::max(1, opt.jobs));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < std::min(jobs, cells.size()); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  AblateResult result;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    AblationRow row;
    row.lookahead_s = grid[g].lookahead_s;
    row.window_s = grid[g].window_s;
    row.context = grid[g].context;
    row.context_s = windows.at({row.lookahead_s, row.window_s}).context_s;
    std::vector<double> f_hi, f_lo, mi_hi, mi_lo, auc_hi, auc_lo;
    for (const auto& c : cells) {
      if (c.grid != g) continue;
      if (!c.ok) {
        ++row.runs_failed;
        result.all_ok = false;
        continue;
      }
      ++row.runs_ok;
      f_hi.push_back(c.metrics.macro_f1_hi);
      f_lo.push_back(c.metrics.macro_f1_lo);
      mi_hi.push_back(c.metrics.micro_f1_hi);
      mi_lo.push_back(c.metrics.micro_f1_lo);
      auc_hi.push_back(c.metrics.macro_auc_hi);
      auc_lo.push_back(c.metrics.macro_auc_lo);
    }
    row.macro_f1_hi = mean_std(f_hi);
    row.macro_f1_lo = mean_std(f_lo);
    row.micro_f1_hi = mean_std(mi_hi);
    row.micro_f1_lo = mean_std(mi_lo);
    row.macro_auc_hi = mean_std(auc_hi);
    row.macro_auc_lo = mean_std(auc_lo);
    result.rows.push_back(std::move(row));
  }

  std::string status = "L,W,context,seed,status,message,dir\n";
  for (const auto& c : cells) {
    std::string msg = c.message;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    status += num(grid[c.grid].lookahead_s) + "," + num(grid[c.grid].window_s) + "," + grid[c.grid].context + "," +
              std::to_string(c.seed) + "," + (c.ok ? "ok" : "failed") + ",\"" + msg + "\"," + c.dir.string() + "\n";
  }
  write_text(fs::path(opt.out.string() + ".status.csv"), status);
  return result;
}

std::string ablation_csv(const AblateResult& result) {
  std::string out =
      "L,W,context,macro_f1_hi_mean,macro_f1_hi_std,macro_f1_lo_mean,macro_f1_lo_std,"
      "micro_f1_hi_mean,micro_f1_hi_std,micro_f1_lo_mean,micro_f1_lo_std,"
      "macro_auc_hi_mean,macro_auc_hi_std,macro_auc_lo_mean,macro_auc_lo_std,context_s,runs_ok,runs_failed\n";
  for (const auto& r : result.rows) {
    out += num(r.lookahead_s) + "," + num(r.window_s) + "," + r.context;
    for (const MeanStd* m : {&r.macro_f1_hi, &r.macro_f1_lo, &r.micro_f1_hi, &r.micro_f1_lo, &r.macro_auc_hi,
                             &r.macro_auc_lo}) {
      out += "," + fmt(m->mean) + "," + fmt(m->std);
    }
    out += "," + fmt(r.context_s) + "," + std::to_string(r.runs_ok) + "," + std::to_string(r.runs_failed) + "\n";
  }
  return out;
}

int cmd_ablate(const AblateOptions& opt) {
  const AblateResult result = run_ablation(opt);
  write_text(opt.out, ablation_csv(result));

  std::ostringstream table;
  table << std::fixed << std::setprecision(4);
  table << std::setw(4) << "L" << std::setw(6) << "W" << std::setw(11) << "context" << std::setw(19)
        << "macro-F1 hi" << std::setw(19) << "macro-F1 lo" << std::setw(19) << "micro-F1 lo" << std::setw(19)
        << "macro-AUC lo" << std::setw(11) << "context_s" << "\n";
  auto cell = [](const MeanStd& m) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << m.mean << "+-" << m.std;
    return os.str();
  };
  for (const auto& r : result.rows) {
    table << std::setw(4) << num(r.lookahead_s) << std::setw(6) << num(r.window_s) << std::setw(11) << r.context
          << std::setw(19) << cell(r.macro_f1_hi) << std::setw(19) << cell(r.macro_f1_lo) << std::setw(19)
          << cell(r.micro_f1_lo) << std::setw(19) << cell(r.macro_auc_lo) << std::setw(11) << r.context_s << "\n";
  }
  std::cout << table.str();
  if (!result.all_ok) std::cerr << "some cells failed; see " << opt.out.string() << ".status.csv\n";
  return result.all_ok ? 0 : 2;
}

void register_ablate(CLI::App& app) {
  auto opt = std::make_shared<AblateOptions>();
  auto* sub = app.add_subcommand("ablate", "window x look-ahead grid of train + eval runs");
  sub->add_option("--manifest", opt->manifest)->required();
  sub->add_option("--out", opt->out, "grid CSV")->required();
  sub->add_option("--windows", opt->windows, "W values in seconds")->delimiter(',')->capture_default_str();
  sub->add_option("--lookaheads", opt->lookaheads, "L values in seconds")->delimiter(',')->capture_default_str();
  sub->add_option("--contexts", opt->contexts)->delimiter(',')->capture_default_str();
  sub->add_option("--seeds", opt->seeds)->delimiter(',')->capture_default_str();
  sub->add_option("--jobs", opt->jobs)->capture_default_str();
  sub->add_option("--cache-dir", opt->cache_dir, "cell working directories (default: $DUPLEX_CACHE_DIR)");
  add_detector_flags(*sub, opt->detector, false);
  sub->callback([opt] { command_status() = cmd_ablate(*opt); });
}

}  // namespace duplex::cli
