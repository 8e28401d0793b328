#pragma once

// REINFORCE training of the pointer network against exact-scheduler labels,
// with a greedy rollout baseline.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "pipesched/embedding.hpp"
#include "pipesched/error.hpp"
#include "pipesched/exact.hpp"
#include "pipesched/policy.hpp"
#include "pipesched/reward.hpp"
#include "pipesched/sampler.hpp"
#include "pipesched/schedule.hpp"

namespace pipesched {

struct TrainConfig {
  int epochs = 300;
  double learning_rate = 1e-4;
  int batch_size = 128;
  std::vector<int> degrees{2, 3, 4, 5, 6};
  int graphs_per_degree = 200000;
  int num_nodes = 30;
  int num_stages = 4;
  int hidden_dim = 256;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  /// Fixed graphs used to decide baseline promotion.
  int validation_size = 256;
  Bytes min_bytes = 1024;
  Bytes max_bytes = 4 * 1024 * 1024;
  /// Per-graph limit for the label oracle; 0 disables it.
  int oracle_time_limit_ms = 10000;
  /// Divergence is checked from this epoch on.
  int warmup_epochs = 1;
  /// Weight of the per-step entropy bonus; 0 is plain REINFORCE.
  double entropy_weight = 0.0;

  [[nodiscard]] int max_degree() const { return *std::max_element(degrees.begin(), degrees.end()); }
  [[nodiscard]] int dataset_size() const { return static_cast<int>(degrees.size()) * graphs_per_degree; }
};

inline void check(const TrainConfig& c) {
  auto positive = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("train config: ") + what + " must be positive");
  };
  positive(c.epochs > 0, "epochs");
  positive(c.learning_rate > 0, "learning_rate");
  positive(c.batch_size > 0, "batch_size");
  positive(c.graphs_per_degree > 0, "graphs_per_degree");
  positive(c.num_stages > 0, "num_stages");
  positive(c.hidden_dim > 0, "hidden_dim");
  positive(c.epsilon > 0, "epsilon");
  positive(c.validation_size > 0, "validation_size");
  if (c.entropy_weight < 0) throw ConfigError("train config: entropy_weight must be >= 0");
  if (c.degrees.empty()) throw ConfigError("train config: degrees must be nonempty");
  for (int d : c.degrees)
    if (d < 1 || d > c.num_nodes - 1) throw ConfigError("train config: degree " + std::to_string(d) + " is out of range");
  if (c.num_stages > c.num_nodes) throw ConfigError("train config: num_stages exceeds num_nodes");
  check(SamplerConfig{c.num_nodes, c.degrees.front(), c.min_bytes, c.max_bytes, 0});
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"degrees", c.degrees},
          {"graphs_per_degree", c.graphs_per_degree},
          {"num_nodes", c.num_nodes},
          {"num_stages", c.num_stages},
          {"hidden_dim", c.hidden_dim},
          {"epsilon", c.epsilon},
          {"seed", c.seed},
          {"validation_size", c.validation_size},
          {"min_bytes", c.min_bytes},
          {"max_bytes", c.max_bytes},
          {"oracle_time_limit_ms", c.oracle_time_limit_ms},
          {"warmup_epochs", c.warmup_epochs},
          {"entropy_weight", c.entropy_weight}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  const nlohmann::json known = train_config_to_json(c);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key) && key != "checkpoint" && key != "metrics")
      throw ConfigError("train config: unknown key '" + key + "'");
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) j.at(key).get_to(field);
    };
    get("epochs", c.epochs);
    get("learning_rate", c.learning_rate);
    get("batch_size", c.batch_size);
    get("degrees", c.degrees);
    get("graphs_per_degree", c.graphs_per_degree);
    get("num_nodes", c.num_nodes);
    get("num_stages", c.num_stages);
    get("hidden_dim", c.hidden_dim);
    get("epsilon", c.epsilon);
    get("seed", c.seed);
    get("validation_size", c.validation_size);
    get("min_bytes", c.min_bytes);
    get("max_bytes", c.max_bytes);
    get("oracle_time_limit_ms", c.oracle_time_limit_ms);
    get("warmup_epochs", c.warmup_epochs);
    get("entropy_weight", c.entropy_weight);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  check(c);
  return c;
}

/// Worker count: PIPESCHED_THREADS if set, else the hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("PIPESCHED_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Callers
/// keep results per index so the outcome does not depend on scheduling.
inline void parallel_for(int count, const std::function<void(int)>& body) {
  const int workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

enum SeedStream : std::uint64_t { kTrainGraphs = 1, kValidationGraphs = 2, kShuffle = 3, kEpisodes = 4, kInit = 5 };

inline constexpr int kGradChunk = 8;

inline void add_into(nn::PolicyParams& acc, const nn::PolicyParams& g) {
  std::vector<const nn::Mat*> src;
  g.for_each([&](const char*, const nn::Mat& m) { src.push_back(&m); });
  std::size_t k = 0;
  acc.for_each([&](const char*, nn::Mat& m) { m += *src[k++]; });
}

}  // namespace detail

/// Graph `index` of the training set; degrees are laid out in blocks.
inline ComputeDag training_graph(const TrainConfig& c, int index) {
  const int degree = c.degrees[index / c.graphs_per_degree];
  return sample_dag({c.num_nodes, degree, c.min_bytes, c.max_bytes,
                     derive_seed(c.seed, detail::kTrainGraphs, static_cast<std::uint64_t>(index))});
}

/// Held-out graph `index`; degrees cycle through cfg.degrees.
inline ComputeDag validation_graph(const TrainConfig& c, int index) {
  const int degree = c.degrees[index % c.degrees.size()];
  return sample_dag({c.num_nodes, degree, c.min_bytes, c.max_bytes,
                     derive_seed(c.seed, detail::kValidationGraphs, static_cast<std::uint64_t>(index))});
}

/// Oracle stage vector rho(gamma) the policy is rewarded against.
inline std::vector<int> label_target(const ComputeDag& dag, int n, ExactOptions opts = {}) {
  const ScheduleResult exact = exact_schedule(dag, n, opts);
  return seq_to_schedule(label_sequence(exact.schedule, dag), dag, n).stage_of;
}

/// R = cosine(rho(gamma), rho(pi)).
inline double episode_reward(const std::vector<int>& target, const std::vector<NodeIndex>& pi,
                             const ComputeDag& dag, int n, double epsilon) {
  return cosine_reward(target, seq_to_schedule(pi, dag, n).stage_of, epsilon);
}

/// Hand-rolled Adam with the usual moment defaults.
class Adam {
 public:
  Adam(const nn::PolicyParams& like, double lr) : m_(like.zeros_like()), v_(like.zeros_like()), lr_(lr) {}

  void step(nn::PolicyParams& params, const nn::PolicyParams& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_), c2 = 1.0 - std::pow(kBeta2, t_);
    std::vector<nn::Mat*> p, g, m, v;
    params.for_each([&](const char*, nn::Mat& x) { p.push_back(&x); });
    const_cast<nn::PolicyParams&>(grad).for_each([&](const char*, nn::Mat& x) { g.push_back(&x); });
    m_.for_each([&](const char*, nn::Mat& x) { m.push_back(&x); });
    v_.for_each([&](const char*, nn::Mat& x) { v.push_back(&x); });
    for (std::size_t k = 0; k < p.size(); ++k) {
      *m[k] = kBeta1 * *m[k] + (1.0 - kBeta1) * *g[k];
      *v[k] = kBeta2 * *v[k] + (1.0 - kBeta2) * g[k]->cwiseProduct(*g[k]);
      p[k]->array() -= lr_ * (m[k]->array() / c1) / ((v[k]->array() / c2).sqrt() + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  nn::PolicyParams m_, v_;
  double lr_;
  int t_ = 0;
};

struct EpochMetrics {
  int epoch = 0;
  /// Mean reward of the sampled training episodes.
  double mean_reward = 0.0;
  /// Greedy reward of the candidate on the validation set.
  double val_reward = 0.0;
  bool baseline_promoted = false;
  double wall_ms = 0.0;
  int skipped = 0;
};

inline nlohmann::json metrics_to_json(const EpochMetrics& m) {
  return {{"epoch", m.epoch},
          {"mean_reward", m.mean_reward},
          {"val_reward", m.val_reward},
          {"baseline_promoted", m.baseline_promoted},
          {"wall_ms", m.wall_ms}};
}

struct TrainResult {
  nn::PolicyParams params;
  /// Best validation policy; this is what gets checkpointed.
  nn::PolicyParams baseline;
  double initial_val_reward = 0.0;
  double baseline_val_reward = 0.0;
  std::vector<EpochMetrics> history;
  /// Training graphs dropped because the oracle timed out.
  int oracle_timeouts = 0;
};

struct TrainHooks {
  std::function<void(const EpochMetrics&)> on_epoch;
  std::function<void(const std::string&)> log;
};

/// Mean greedy reward over graphs with known targets.
inline double greedy_reward(const nn::PolicyParams& params, const std::vector<ComputeDag>& graphs,
                            const std::vector<std::vector<int>>& targets, int n, double epsilon) {
  std::vector<double> r(graphs.size(), 0.0);
  parallel_for(static_cast<int>(graphs.size()), [&](int i) {
    const GraphEmbedding emb = embed_graph(graphs[i], params.config.max_degree);
    const auto trace = nn::decode_sequence(nn::encode(emb, params), params, nn::DecodeMode::kGreedy);
    r[i] = episode_reward(targets[i], trace.sequence, graphs[i], n, epsilon);
  });
  double s = 0.0;
  for (double x : r) s += x;
  return graphs.empty() ? 0.0 : s / static_cast<double>(graphs.size());
}

inline TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  check(cfg);
  const int n = cfg.num_stages;
  const int size = cfg.dataset_size();
  const ExactOptions oracle{std::chrono::milliseconds(cfg.oracle_time_limit_ms)};
  auto log = [&](const std::string& s) {
    if (hooks.log) hooks.log(s);
  };

  TrainResult out;
  out.params = nn::init_params({cfg.hidden_dim, cfg.max_degree()}, derive_seed(cfg.seed, detail::kInit));
  out.baseline = out.params;

  // Validation graphs; ones the oracle cannot label in time are dropped.
  std::vector<ComputeDag> val_graphs;
  std::vector<std::vector<int>> val_targets;
  {
    std::vector<std::optional<std::vector<int>>> t(cfg.validation_size);
    std::vector<ComputeDag> g(cfg.validation_size);
    parallel_for(cfg.validation_size, [&](int i) {
      g[i] = validation_graph(cfg, i);
      try {
        t[i] = label_target(g[i], n, oracle);
      } catch (const OracleTimeout&) {
      }
    });
    for (int i = 0; i < cfg.validation_size; ++i)
      if (t[i]) {
        val_graphs.push_back(std::move(g[i]));
        val_targets.push_back(std::move(*t[i]));
      }
    if (val_graphs.empty()) throw OracleTimeout("oracle timed out on every validation graph");
  }
  out.initial_val_reward = greedy_reward(out.params, val_graphs, val_targets, n, cfg.epsilon);
  out.baseline_val_reward = out.initial_val_reward;
  log("epoch 0 val_reward " + std::to_string(out.initial_val_reward));

  // Memoized per training graph: label status and target, baseline reward.
  enum : char { kUnknown, kLabelled, kTimedOut };
  std::vector<char> status(size, kUnknown);
  std::vector<std::vector<int>> targets(size);
  std::vector<double> baseline_reward(size, std::numeric_limits<double>::quiet_NaN());

  Adam adam(out.params, cfg.learning_rate);
  std::vector<int> order(size);
  std::uint64_t episode = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, detail::kShuffle, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double reward_sum = 0.0;
    int reward_count = 0, skipped = 0;
    for (int begin = 0; begin < size; begin += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, size - begin);
      std::vector<double> reward(count, 0.0);
      std::vector<char> used(count, 0), signal(count, 0);
      // Gradients are summed in fixed chunks of consecutive batch slots, and
      // chunks are reduced in order, so the update does not depend on the
      // thread count.
      const int chunks = (count + detail::kGradChunk - 1) / detail::kGradChunk;
      std::vector<nn::PolicyParams> chunk_sum(chunks);

      parallel_for(chunks, [&](int c) {
        chunk_sum[c] = out.params.zeros_like();
        for (int b = c * detail::kGradChunk; b < std::min(count, (c + 1) * detail::kGradChunk); ++b) {
          const int idx = order[begin + b];
          const ComputeDag dag = training_graph(cfg, idx);
          if (status[idx] == kUnknown) {
            try {
              targets[idx] = label_target(dag, n, oracle);
              status[idx] = kLabelled;
            } catch (const OracleTimeout&) {
              status[idx] = kTimedOut;
            }
          }
          if (status[idx] != kLabelled) continue;
          const GraphEmbedding emb = embed_graph(dag, cfg.max_degree());
          if (std::isnan(baseline_reward[idx])) {
            const auto greedy =
                nn::decode_sequence(nn::encode(emb, out.baseline), out.baseline, nn::DecodeMode::kGreedy);
            baseline_reward[idx] = episode_reward(targets[idx], greedy.sequence, dag, n, cfg.epsilon);
          }
          std::mt19937_64 rng(derive_seed(cfg.seed, detail::kEpisodes, episode + static_cast<std::uint64_t>(b)));
          auto trace = nn::decode_sequence(nn::encode(emb, out.params), out.params, nn::DecodeMode::kSample, &rng);
          trace.reward = episode_reward(targets[idx], trace.sequence, dag, n, cfg.epsilon);
          // (1 - R) - b(G) with b(G) = 1 - R_baseline
          const double advantage = baseline_reward[idx] - trace.reward;
          // Minimizing cost - entropy_weight * H.
          signal[b] = advantage != 0.0 || cfg.entropy_weight != 0.0;
          if (signal[b])
            detail::add_into(chunk_sum[c], nn::backward(emb, trace, advantage, out.params, -cfg.entropy_weight));
          reward[b] = trace.reward;
          used[b] = 1;
        }
      });
      episode += static_cast<std::uint64_t>(count);

      nn::PolicyParams mean = out.params.zeros_like();
      for (const auto& g : chunk_sum) detail::add_into(mean, g);
      int used_count = 0;
      for (int b = 0; b < count; ++b) {
        if (!used[b]) {
          ++skipped;
          continue;
        }
        reward_sum += reward[b];
        ++reward_count;
        ++used_count;
      }
      // A batch without any learning signal leaves the parameters (and the
      // optimizer moments) untouched.
      if (used_count == 0 || std::none_of(signal.begin(), signal.end(), [](char c) { return c != 0; })) continue;
      mean.for_each([&](const char*, nn::Mat& m) { m /= used_count; });
      adam.step(out.params, mean);
      if (!out.params.all_finite()) throw NumericalError("parameters became non-finite at epoch " + std::to_string(epoch));
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.mean_reward = reward_count ? reward_sum / reward_count : 0.0;
    m.skipped = skipped;
    m.val_reward = greedy_reward(out.params, val_graphs, val_targets, n, cfg.epsilon);
    if (m.val_reward > out.baseline_val_reward) {
      out.baseline = out.params;
      out.baseline_val_reward = m.val_reward;
      std::fill(baseline_reward.begin(), baseline_reward.end(), std::numeric_limits<double>::quiet_NaN());
      m.baseline_promoted = true;
    }
    m.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    out.history.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);
    log("epoch " + std::to_string(epoch) + " mean_reward " + std::to_string(m.mean_reward) + " val_reward " +
        std::to_string(m.val_reward) + (m.baseline_promoted ? " promoted" : ""));

    if (epoch > cfg.warmup_epochs && m.mean_reward < 0.01)
      throw NumericalError("training diverged: mean reward " + std::to_string(m.mean_reward) + " at epoch " +
                           std::to_string(epoch));
  }
  out.oracle_timeouts = static_cast<int>(std::count(status.begin(), status.end(), kTimedOut));
  if (out.oracle_timeouts > 0) log(std::to_string(out.oracle_timeouts) + " training graphs skipped on oracle timeout");
  return out;
}

}  // namespace pipesched
