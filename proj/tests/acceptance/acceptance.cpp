// Acceptance run: one PASS/FAIL line per criterion, with the measured values.
// Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "pipesched/checkpoint.hpp"
#include "pipesched/deploy.hpp"
#include "pipesched/evaluate.hpp"
#include "pipesched/exact.hpp"
#include "pipesched/graph_io.hpp"
#include "pipesched/heuristic.hpp"
#include "pipesched/inference.hpp"
#include "pipesched/reward.hpp"
#include "pipesched/sampler.hpp"
#include "pipesched/train.hpp"

using namespace pipesched;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(clock_type::time_point t) {
  return std::chrono::duration<double>(clock_type::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void oracle_correctness() {
  const auto start = clock_type::now();
  std::mt19937_64 rng(20240101);
  int mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + t % 3;
    const int nodes = std::uniform_int_distribution<int>(n, 8)(rng);
    const int degree = std::uniform_int_distribution<int>(1, std::min(4, nodes - 1))(rng);
    const ComputeDag dag = sample_dag({nodes, degree, 1, 1000, rng()});
    if (exact_schedule(dag, n).objective.peak_stage_memory != brute_force_schedule(dag, n).objective.peak_stage_memory)
      ++mismatches;
  }
  const double secs = seconds_since(start);
  report("oracle correctness", mismatches == 0 && secs < 60,
         fmt("200 graphs, |V|<=8, n in {2,3,4}: %d mismatches in %.2f s", mismatches, secs));
}

void gradient_fidelity() {
  const auto start = clock_type::now();
  double worst = 0;
  std::string worst_name;
  for (const auto& t : pipesched::testing::gradient_check(1)) {
    if (t.relative_error > worst) {
      worst = t.relative_error;
      worst_name = t.name;
    }
  }
  const double secs = seconds_since(start);
  report("gradient fidelity", worst <= 1e-4 && secs < 30,
         fmt("|V|=4, d=8, 17 tensors: max relative error %.2e (%s) in %.2f s", worst, worst_name.c_str(), secs));
}

void decoding_validity() {
  const nn::PolicyParams p = nn::init_params({32, 6}, 77);
  std::mt19937_64 rng(78);
  int permutations = 0, feasible_co = 0, feasible_dep = 0;
  const int episodes = 10000;
  for (int e = 0; e < episodes; ++e) {
    const int nodes = 2 + e % 29;
    const int degree = std::min(nodes - 1, 1 + e % 6);
    const ComputeDag dag = sample_dag({nodes, degree, 1024, 4 << 20, rng()});
    const auto trace =
        nn::decode_sequence(nn::encode(embed_graph(dag, 6), p), p, nn::DecodeMode::kSample, &rng);
    std::vector<int> seen(nodes, 0);
    bool perm = static_cast<int>(trace.sequence.size()) == nodes;
    for (NodeIndex v : trace.sequence) perm = perm && v >= 0 && v < nodes && !seen[v]++;
    permutations += perm;
    if (!perm) continue;
    const int n = 1 + e % std::min(nodes, 6);
    const Schedule raw = seq_to_schedule(trace.sequence, dag, n);
    feasible_co += dependency_feasible(repair_schedule(raw, dag, {CoStageScope::kAllFanouts}).schedule, dag);
    feasible_dep += dependency_feasible(repair_schedule(raw, dag, {CoStageScope::kNone}).schedule, dag);
  }
  report("decoding validity", permutations == episodes && feasible_co == episodes && feasible_dep == episodes,
         fmt("%d sampled episodes, |V| 2..30: %d permutations, %d feasible after repair (co-stage), "
             "%d feasible after repair (dependency only)",
             episodes, permutations, feasible_co, feasible_dep));
}

void reward_identities() {
  std::mt19937_64 rng(5);
  int self_ok = 0, bounded = 0;
  for (int t = 0; t < 1000; ++t) {
    const int len = 1 + static_cast<int>(rng() % 40);
    std::vector<int> s(len), u(len);
    for (int& x : s) x = static_cast<int>(rng() % 6);
    s[rng() % len] = 1 + static_cast<int>(rng() % 5);  // nonzero
    for (int& x : u) x = static_cast<int>(rng() % 6);
    self_ok += std::abs(cosine_reward(s, s) - 1.0) <= 1e-12;
    const double r = cosine_reward(s, u);
    bounded += r >= 0.0 && r <= 1.0 + 1e-12;
  }
  const double r = cosine_reward(std::vector<int>{0, 1, 1, 2}, std::vector<int>{0, 1, 2, 2});
  const double expected = 7.0 / (std::sqrt(6.0) * 3.0);
  report("reward identities", self_ok == 1000 && bounded == 1000 && std::abs(r - expected) <= 1e-9,
         fmt("R(S,S)=1 on %d/1000, R in [0,1] on %d/1000, R([0,1,1,2],[0,1,2,2]) = %.12f (expected %.12f)", self_ok,
             bounded, r, expected));
}

TrainConfig desk_config() {
  TrainConfig c;
  c.epochs = 30;
  c.learning_rate = 1e-3;
  c.batch_size = 128;
  c.degrees = {3};
  c.graphs_per_degree = 5000;
  c.num_nodes = 10;
  c.num_stages = 3;
  c.hidden_dim = 64;
  c.validation_size = 256;
  c.seed = 2024;
  return c;
}

std::vector<ComputeDag> held_out(int count, int nodes, int degree, std::uint64_t seed) {
  std::vector<ComputeDag> g;
  for (int i = 0; i < count; ++i)
    g.push_back(sample_dag({nodes, degree, 1024, 4 << 20, derive_seed(seed, 99, static_cast<std::uint64_t>(i))}));
  return g;
}

nn::PolicyParams desk_learning() {
  const TrainConfig cfg = desk_config();
  const auto start = clock_type::now();
  const TrainResult trained = train(cfg);
  const double train_secs = seconds_since(start);

  const std::vector<ComputeDag> test = held_out(500, cfg.num_nodes, 3, 777);
  const EvalReport after = evaluate(trained.baseline, test, cfg.num_stages);
  const nn::PolicyParams untrained = nn::init_params({cfg.hidden_dim, cfg.max_degree()}, 12345);
  const EvalReport before = evaluate(untrained, test, cfg.num_stages);
  const double secs = seconds_since(start);

  const bool pass = after.mean_reward >= 0.95 && after.mean_gap_pct <= 10.0 && before.mean_gap_pct >= 25.0 &&
                    after.feasibility_rate == 1.0 && secs <= 1800;
  report("desk-scale learning", pass,
         fmt("5000 graphs |V|=10 deg<=3 n=3 d=64 30 epochs lr %.0e: held-out (500) mean reward %.4f (need >= 0.95), "
             "gap %.2f%% (need <= 10%%), untrained gap %.2f%% (need >= 25%%), feasibility %.3f, "
             "val reward %.4f -> %.4f, train %.0f s, total %.0f s",
             cfg.learning_rate, after.mean_reward, after.mean_gap_pct, before.mean_gap_pct, after.feasibility_rate,
             trained.initial_val_reward, trained.baseline_val_reward, train_secs, secs));
  return trained.baseline;
}

void solving_time(const nn::PolicyParams& params) {
  const std::vector<ComputeDag> graphs = held_out(50, 100, params.config.max_degree, 4242);
  const ExactOptions cap{std::chrono::milliseconds(120000)};
  int ordered = 0, censored = 0;
  double rl_total = 0, exact_total = 0;
  std::vector<double> ratios;
  for (const ComputeDag& dag : graphs) {
    auto t = clock_type::now();
    const auto h = list_schedule(dag, 4);
    const double heur = seconds_since(t);
    t = clock_type::now();
    const auto rl = rl_schedule(dag, 4, params);
    const double rl_s = seconds_since(t);
    t = clock_type::now();
    double exact_s;
    try {
      exact_schedule(dag, 4, cap);
      exact_s = seconds_since(t);
    } catch (const OracleTimeout&) {
      exact_s = seconds_since(t);  // a lower bound on the true time
      ++censored;
    }
    (void)h;
    (void)rl;
    ordered += heur <= rl_s && rl_s <= exact_s;
    rl_total += rl_s;
    exact_total += exact_s;
    ratios.push_back(exact_s / rl_s);
  }
  std::sort(ratios.begin(), ratios.end());
  const double speedup = exact_total / rl_total;
  report("solving-time ordering", speedup >= 10.0 && ordered >= 45,
         fmt("50 graphs |V|=100 n=4: exact/RL time %.0fx overall (median %.0fx, min %.0fx), "
             "heuristic <= RL <= exact on %d/50, mean RL %.2f ms, mean exact %.2f s, %d exact runs capped at 120 s",
             speedup, ratios[25], ratios.front(), ordered, 1e3 * rl_total / 50, exact_total / 50, censored));
}

void baseline_sanity() {
  int violations = 0, infeasible = 0;
  for (int i = 0; i < 500; ++i) {
    const ComputeDag dag =
        sample_dag({30, 1 + i % 6, 1024, 4 << 20, derive_seed(31337, 1, static_cast<std::uint64_t>(i))});
    const int n = 2 + i % 5;
    const auto h = list_schedule(dag, n);
    infeasible += !is_valid_schedule(h.schedule, dag);
    violations += h.objective.peak_stage_memory < exact_schedule(dag, n).objective.peak_stage_memory;
  }
  report("baseline sanity", violations == 0 && infeasible == 0,
         fmt("500 graphs |V|=30 n 2..6: %d graphs where list schedule beats exact, %d infeasible", violations,
             infeasible));
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pipesched_acceptance";
  fs::create_directories(dir);
  TrainConfig c = desk_config();
  c.epochs = 2;
  c.graphs_per_degree = 300;
  c.validation_size = 32;
  std::vector<std::string> ckpts;
  for (int run = 0; run < 2; ++run) {
    const fs::path p = dir / ("ckpt" + std::to_string(run) + ".json");
    nn::save_params(train(c).baseline, p);
    ckpts.push_back(file_bytes(p));
  }
  const nn::PolicyParams params = nn::load_params(dir / "ckpt0.json");
  int same = 0, total = 0;
  for (int g = 0; g < 5; ++g) {
    const ComputeDag dag = sample_dag({30, 3, 1024, 4 << 20, derive_seed(c.seed, 8, static_cast<std::uint64_t>(g))});
    for (int run = 0; run < 2; ++run) {
      const RlScheduleResult rl = rl_schedule(dag, 4, params);
      save_schedule({rl.repaired.schedule, rl.objective}, dir / ("rl" + std::to_string(run) + ".json"));
      save_schedule(exact_schedule(dag, 4), dir / ("ex" + std::to_string(run) + ".json"));
      save_schedule(list_schedule(dag, 4), dir / ("li" + std::to_string(run) + ".json"));
    }
    for (const char* m : {"rl", "ex", "li"}) {
      same += file_bytes(dir / (std::string(m) + "0.json")) == file_bytes(dir / (std::string(m) + "1.json"));
      ++total;
    }
  }

  // The same through the command line: train twice from one config, then
  // schedule one graph twice per method.
  nlohmann::json cfg_json = train_config_to_json(c);
  cfg_json["checkpoint"] = "cli_ckpt.json";
  std::ofstream(dir / "train.json") << cfg_json.dump();
  save_graph(sample_dag({30, 3, 1024, 4 << 20, derive_seed(c.seed, 9, 0)}), dir / "g.json");
  const std::string cli = PIPESCHED_CLI;
  auto sh = [](const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()) == 0; };
  bool cli_ok = true;
  int cli_same = 0, cli_total = 0;
  std::vector<std::string> cli_ckpts;
  for (int run = 0; run < 2; ++run) {
    cli_ok = cli_ok && sh(cli + " train --config " + (dir / "train.json").string());
    cli_ckpts.push_back(file_bytes(dir / "cli_ckpt.json"));
    for (const char* m : {"rl", "exact", "heuristic"}) {
      const fs::path out = dir / (std::string("cli_") + m + std::to_string(run) + ".json");
      cli_ok = cli_ok && sh(cli + " schedule --graph " + (dir / "g.json").string() + " --stages 4 --method " + m +
                            " --checkpoint " + (dir / "cli_ckpt.json").string() + " --out " + out.string());
    }
  }
  for (const char* m : {"rl", "exact", "heuristic"}) {
    const std::string a = file_bytes(dir / (std::string("cli_") + m + "0.json"));
    cli_same += !a.empty() && a == file_bytes(dir / (std::string("cli_") + m + "1.json"));
    ++cli_total;
  }
  fs::remove_all(dir);
  const bool ckpt_same = ckpts[0] == ckpts[1] && !ckpts[0].empty();
  const bool cli_ckpt_same = cli_ckpts[0] == cli_ckpts[1] && !cli_ckpts[0].empty();
  report("determinism", ckpt_same && same == total && cli_ok && cli_ckpt_same && cli_same == cli_total,
         fmt("in process: checkpoints from two seeded runs %s (%zu bytes), %d/%d schedule files byte-identical; "
             "cli: train checkpoints %s, %d/%d schedule files byte-identical%s",
             ckpt_same ? "identical" : "differ", ckpts[0].size(), same, total,
             cli_ckpt_same ? "identical" : "differ", cli_same, cli_total, cli_ok ? "" : ", a command failed"));
}

}  // namespace

int main() {
  oracle_correctness();
  gradient_fidelity();
  decoding_validity();
  reward_identities();
  baseline_sanity();
  determinism();
  const nn::PolicyParams trained = desk_learning();
  solving_time(trained);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
