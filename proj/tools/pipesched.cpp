// pipesched command-line driver.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pipesched/checkpoint.hpp"
#include "pipesched/deploy.hpp"
#include "pipesched/embedding.hpp"
#include "pipesched/evaluate.hpp"
#include "pipesched/exact.hpp"
#include "pipesched/graph_io.hpp"
#include "pipesched/heuristic.hpp"
#include "pipesched/inference.hpp"
#include "pipesched/sampler.hpp"
#include "pipesched/schedule.hpp"
#include "pipesched/train.hpp"

namespace fs = std::filesystem;
using namespace pipesched;

namespace {

// Writes through a sibling temp file so a failed run never leaves a partial
// artifact behind.
void write_atomically(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

RepairOptions parse_co_stage(const std::string& s) {
  return {s == "all" ? CoStageScope::kAllFanouts : CoStageScope::kNone};
}

std::vector<ComputeDag> load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(dir.string() + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(dir.string() + ": no graph files");
  std::vector<ComputeDag> graphs;
  for (const auto& f : files) graphs.push_back(load_graph(f));
  return graphs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pipeline-stage scheduling for computational DAGs"};
  app.require_subcommand(1);

  // sample
  auto* sample = app.add_subcommand("sample", "Write random DAGs");
  SamplerConfig scfg;
  int count = 1;
  std::string sample_out;
  sample->add_option("--nodes", scfg.num_nodes, "Nodes per graph")->required();
  sample->add_option("--degree", scfg.max_degree, "Maximum in-degree")->required();
  sample->add_option("--count", count, "Number of graphs")->check(CLI::PositiveNumber);
  sample->add_option("--seed", scfg.seed, "Master seed");
  sample->add_option("--min-bytes", scfg.min_bytes);
  sample->add_option("--max-bytes", scfg.max_bytes);
  sample->add_option("--out", sample_out, "Output directory")->required();

  // embed
  auto* embed = app.add_subcommand("embed", "Print a graph's embedding rows as JSON");
  std::string embed_graph_path, embed_out;
  int embed_degree = 6;
  embed->add_option("--graph", embed_graph_path)->required()->check(CLI::ExistingFile);
  embed->add_option("--degree", embed_degree, "Parent slots per row");
  embed->add_option("--out", embed_out, "Output file")->required();

  // schedule
  auto* schedule = app.add_subcommand("schedule", "Schedule one graph");
  std::string graph_path, method = "exact", checkpoint_path, schedule_out, co_stage = "none";
  int stages = 4, time_limit_ms = 0;
  schedule->add_option("--graph", graph_path)->required()->check(CLI::ExistingFile);
  schedule->add_option("--stages", stages)->required();
  schedule->add_option("--method", method)->check(CLI::IsMember({"exact", "heuristic", "rl"}));
  schedule->add_option("--checkpoint", checkpoint_path, "Policy checkpoint (rl)");
  schedule->add_option("--co-stage", co_stage, "Repair co-stage rule (rl)")->check(CLI::IsMember({"all", "none"}));
  schedule->add_option("--time-limit-ms", time_limit_ms, "Exact solver limit, 0 = none");
  schedule->add_option("--out", schedule_out)->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a policy");
  std::string config_path, train_checkpoint, train_metrics;
  train_cmd->add_option("--config", config_path)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--checkpoint", train_checkpoint, "Overrides the config's checkpoint path");
  train_cmd->add_option("--metrics", train_metrics, "Overrides the config's metrics path");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare a policy with the exact and list schedulers");
  std::string dataset_dir, eval_checkpoint, eval_out, eval_co_stage = "none";
  int eval_stages = 4, eval_limit_ms = 0;
  eval_cmd->add_option("--dataset", dataset_dir)->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--stages", eval_stages)->required();
  eval_cmd->add_option("--checkpoint", eval_checkpoint)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--co-stage", eval_co_stage)->check(CLI::IsMember({"all", "none"}));
  eval_cmd->add_option("--time-limit-ms", eval_limit_ms, "Exact solver limit per graph, 0 = none");
  eval_cmd->add_option("--out", eval_out)->required();

  // oracle-check
  auto* oracle = app.add_subcommand("oracle-check", "Compare exact and brute-force objectives");
  int max_nodes = 8, trials = 200, oracle_degree = 3;
  std::uint64_t oracle_seed = 0;
  oracle->add_option("--max-nodes", max_nodes)->check(CLI::Range(3, kBruteForceMaxNodes));
  oracle->add_option("--trials", trials)->check(CLI::PositiveNumber);
  oracle->add_option("--degree", oracle_degree)->check(CLI::PositiveNumber);
  oracle->add_option("--seed", oracle_seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) {
      check(scfg);
      fs::create_directories(sample_out);
      const std::uint64_t master = scfg.seed;
      for (int i = 0; i < count; ++i) {
        SamplerConfig c = scfg;
        c.seed = derive_seed(master, 0, static_cast<std::uint64_t>(i));
        char name[32];
        std::snprintf(name, sizeof name, "graph_%05d.json", i);
        write_atomically(fs::path(sample_out) / name, graph_to_json(sample_dag(c)).dump(1) + "\n");
      }
      std::cout << "wrote " << count << " graphs to " << sample_out << "\n";
    } else if (*embed) {
      const GraphEmbedding emb = embed_graph(load_graph(embed_graph_path), embed_degree);
      nlohmann::json rows = nlohmann::json::array();
      for (int r = 0; r < emb.num_rows; ++r) {
        std::vector<std::int64_t> row(emb.width());
        for (int c = 0; c < emb.width(); ++c) row[c] = emb.at(r, c);
        rows.push_back(row);
      }
      write_atomically(embed_out, nlohmann::json{{"max_degree", emb.max_degree}, {"rows", rows}}.dump() + "\n");
    } else if (*schedule) {
      const ComputeDag dag = load_graph(graph_path);
      ScheduleResult result;
      if (method == "exact") {
        result = exact_schedule(dag, stages, {std::chrono::milliseconds(time_limit_ms)});
      } else if (method == "heuristic") {
        result = list_schedule(dag, stages);
      } else {
        if (checkpoint_path.empty()) throw ConfigError("--method rl needs --checkpoint");
        const nn::PolicyParams params = nn::load_params(checkpoint_path);
        const RlScheduleResult rl = rl_schedule(dag, stages, params, parse_co_stage(co_stage));
        if (rl.repaired.stage_shortfall > 0)
          std::cerr << "warning: repair left " << rl.repaired.stage_shortfall << " stage(s) empty\n";
        result = {rl.repaired.schedule, rl.objective};
      }
      write_atomically(schedule_out, schedule_to_json(result).dump(1) + "\n");
      const CostReport cost = cost_model(result.schedule, dag);
      std::cout << "peak_stage_memory " << result.objective.peak_stage_memory << "\n"
                << "proxy_latency " << cost_to_json(cost).dump() << "\n";
    } else if (*train_cmd) {
      std::ifstream in(config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(config_path + ": " + e.what());
      }
      const TrainConfig cfg = train_config_from_json(j);
      const fs::path base = fs::path(config_path).parent_path();
      auto resolve = [&](const std::string& flag, const char* key, const char* fallback) {
        if (!flag.empty()) return fs::path(flag);
        return base / fs::path(j.contains(key) ? j.at(key).get<std::string>() : fallback);
      };
      const fs::path ckpt = resolve(train_checkpoint, "checkpoint", "checkpoint.json");
      const fs::path metrics = resolve(train_metrics, "metrics", "metrics.jsonl");
      std::string lines;
      TrainHooks hooks;
      hooks.on_epoch = [&](const EpochMetrics& m) { lines += metrics_to_json(m).dump() + "\n"; };
      hooks.log = [](const std::string& s) { std::cerr << s << "\n"; };
      const TrainResult r = train(cfg, hooks);
      write_atomically(metrics, lines);
      write_atomically(ckpt, nn::params_to_json(r.baseline).dump() + "\n");
      std::cout << "checkpoint " << ckpt.string() << " val_reward " << r.baseline_val_reward << "\n";
    } else if (*eval_cmd) {
      const nn::PolicyParams params = nn::load_params(eval_checkpoint);
      EvalOptions opts;
      opts.repair = parse_co_stage(eval_co_stage);
      opts.exact.time_limit = std::chrono::milliseconds(eval_limit_ms);
      const EvalReport report = evaluate(params, load_dataset(dataset_dir), eval_stages, opts);
      write_atomically(eval_out, eval_report_to_json(report).dump(1) + "\n");
      std::cout << "graphs " << report.graphs.size() << " mean_reward " << report.mean_reward << " mean_gap_pct "
                << report.mean_gap_pct << " feasibility " << report.feasibility_rate << "\n";
    } else if (*oracle) {
      int mismatches = 0, checked = 0;
      for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = derive_seed(oracle_seed, 0, static_cast<std::uint64_t>(t));
        const int nodes = 3 + static_cast<int>(seed % static_cast<std::uint64_t>(max_nodes - 2));
        const int n = 2 + static_cast<int>((seed >> 20) % static_cast<std::uint64_t>(std::min(3, nodes - 1)));
        const ComputeDag dag = sample_dag({nodes, std::min(oracle_degree, nodes - 1), 1, 1000, seed});
        ++checked;
        const Bytes a = exact_schedule(dag, n).objective.peak_stage_memory;
        const Bytes b = brute_force_schedule(dag, n).objective.peak_stage_memory;
        if (a != b) {
          ++mismatches;
          std::cout << "mismatch on " << dag.name << " n=" << n << ": exact " << a << " brute force " << b << "\n";
        }
      }
      std::cout << checked << " graphs checked, " << mismatches << " mismatches\n";
      return mismatches == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
