#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "pipesched/embedding.hpp"
#include "pipesched/graph.hpp"
#include "pipesched/graph_io.hpp"
#include "pipesched/sampler.hpp"

using namespace pipesched;
using pipesched::testing::chain;
using pipesched::testing::diamond;
using pipesched::testing::make_dag;

TEST(AsapLevels, Chain) { EXPECT_EQ(asap_levels(chain({1, 1, 1})), (std::vector<int>{1, 2, 3})); }

TEST(AsapLevels, Diamond) { EXPECT_EQ(asap_levels(diamond()), (std::vector<int>{1, 2, 2, 3})); }

TEST(AsapLevels, ParentChildPair) {
  // N_i at level 1 feeding N_j puts N_j at level 2.
  const auto lv = asap_levels(make_dag({1, 1}, {{0, 1}}));
  EXPECT_EQ(lv[0], 1);
  EXPECT_EQ(lv[1], 2);
}

TEST(AsapLevels, CycleNamesBackEdge) {
  const ComputeDag dag = make_dag({1, 1, 1}, {{0, 1}, {1, 2}, {2, 1}});
  try {
    asap_levels(dag);
    FAIL() << "expected CyclicGraph";
  } catch (const CyclicGraph& e) {
    const std::string msg = e.what();
    EXPECT_TRUE(msg.find("1") != std::string::npos && msg.find("2") != std::string::npos) << msg;
  }
}

// Decreasing any node's level must break an edge constraint.
TEST(AsapLevels, MinimalLeveling) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ComputeDag dag = sample_dag({8, 3, 1, 10, seed});
    const auto lv = asap_levels(dag);
    const Adjacency adj = make_adjacency(dag);
    for (NodeIndex v = 0; v < dag.size(); ++v) {
      for (const Edge& e : dag.edges) ASSERT_LT(lv[e.parent], lv[e.child]);
      if (lv[v] == 1) continue;
      bool broken = false;
      for (NodeIndex p : adj.parents[v]) broken = broken || lv[p] >= lv[v] - 1;
      EXPECT_TRUE(broken) << "node " << v << " could sit lower";
    }
  }
}

TEST(HashNodeId, DeterministicAndNonNegative) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> len(1, 24), ch(32, 126);
  for (int i = 0; i < 10000; ++i) {
    std::string s(len(rng), ' ');
    for (char& c : s) c = static_cast<char>(ch(rng));
    const auto id = hash_node_id(s);
    EXPECT_EQ(id, hash_node_id(s));
    EXPECT_GE(id, 0);
  }
}

TEST(HashNodeId, DistinctWithinGraphEvenForRepeatedNames) {
  ComputeDag dag;
  for (int i = 0; i < 50; ++i) dag.nodes.push_back({i % 2 ? "conv" : "add", 0, 1});
  assign_node_ids(dag);
  std::set<std::int32_t> ids;
  for (const auto& n : dag.nodes) ids.insert(n.node_id);
  EXPECT_EQ(ids.size(), dag.nodes.size());
}

TEST(EmbedGraph, SourceRowPadding) {
  const ComputeDag dag = diamond(5);
  const GraphEmbedding emb = embed_graph(dag, 3);
  EXPECT_EQ(emb.width(), 2 * 3 + 3);
  EXPECT_EQ(emb.at(0, emb.level_col()), 1);
  for (int s = 0; s < 3; ++s) {
    EXPECT_EQ(emb.at(0, emb.parent_level_col(s)), 0);
    EXPECT_EQ(emb.at(0, emb.parent_id_col(s)), -1);
  }
  // middle node: one real parent, two padded slots
  EXPECT_EQ(emb.at(1, emb.parent_level_col(0)), 1);
  EXPECT_EQ(emb.at(1, emb.parent_id_col(0)), dag.nodes[0].node_id);
  EXPECT_EQ(emb.at(1, emb.parent_level_col(1)), 0);
  EXPECT_EQ(emb.at(1, emb.parent_id_col(1)), -1);
}

TEST(EmbedGraph, SingleNode) {
  const ComputeDag dag = make_dag({42}, {});
  const GraphEmbedding emb = embed_graph(dag, 2);
  const std::vector<std::int64_t> expected{1, 0, 0, -1, -1, dag.nodes[0].node_id, 42};
  EXPECT_EQ(emb.values, expected);
}

TEST(EmbedGraph, DiamondSinkCarriesBothParents) {
  const ComputeDag dag = diamond(3);
  const GraphEmbedding emb = embed_graph(dag, 2);
  const auto lv = asap_levels(dag);
  EXPECT_EQ(emb.at(3, emb.level_col()), 3);
  EXPECT_EQ(emb.at(3, emb.parent_level_col(0)), lv[1]);
  EXPECT_EQ(emb.at(3, emb.parent_level_col(1)), lv[2]);
  EXPECT_EQ(emb.at(3, emb.parent_level_col(0)), 2);
  EXPECT_EQ(emb.at(3, emb.parent_id_col(0)), dag.nodes[1].node_id);
  EXPECT_EQ(emb.at(3, emb.parent_id_col(1)), dag.nodes[2].node_id);
  EXPECT_EQ(emb.at(3, emb.memory_col()), 3);
}

TEST(EmbedGraph, DegreeOverflowNamesNode) {
  try {
    embed_graph(diamond(), 1);
    FAIL();
  } catch (const DegreeOverflow& e) {
    EXPECT_NE(std::string(e.what()).find("node 3"), std::string::npos) << e.what();
  }
}

TEST(EmbedGraph, SampledGraphsFitTheirDegree) {
  for (int d = 1; d <= 6; ++d)
    for (std::uint64_t s = 0; s < 50; ++s) EXPECT_NO_THROW(embed_graph(sample_dag({30, d, 1, 100, s}), d));
}

TEST(SampleDag, TwoNodes) {
  const ComputeDag dag = sample_dag({2, 1, 1, 10, 99});
  ASSERT_EQ(dag.edges.size(), 1u);
  EXPECT_EQ(dag.edges[0], (Edge{0, 1}));
}

TEST(SampleDag, Deterministic) {
  const SamplerConfig cfg{30, 4, 1024, 4 << 20, 1234};
  EXPECT_EQ(graph_to_json(sample_dag(cfg)).dump(), graph_to_json(sample_dag(cfg)).dump());
}

TEST(SampleDag, ConfigErrors) {
  EXPECT_THROW(sample_dag({1, 1, 1, 2, 0}), ConfigError);
  EXPECT_THROW(sample_dag({5, 0, 1, 2, 0}), ConfigError);
  EXPECT_THROW(sample_dag({5, 2, 3, 2, 0}), ConfigError);
}

TEST(SampleDag, MaxDegreeAttainedNeverExceeded) {
  int observed = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const ComputeDag dag = sample_dag({30, 6, 1, 100, s});
    const int d = max_in_degree(dag);
    EXPECT_EQ(d, 6);
    observed = std::max(observed, d);
  }
  EXPECT_EQ(observed, 6);
}

TEST(SampleDag, StructuralInvariants) {
  for (std::uint64_t s = 0; s < 300; ++s) {
    const ComputeDag dag = sample_dag({20, 3, 10, 20, s});
    EXPECT_NO_THROW(validate(dag));
    const Adjacency adj = make_adjacency(dag);
    for (NodeIndex v = 1; v < dag.size(); ++v) EXPECT_GE(adj.parents[v].size(), 1u);
    for (NodeIndex v = 0; v < dag.size(); ++v) EXPECT_FALSE(adj.parents[v].empty() && adj.children[v].empty());
    for (const auto& n : dag.nodes) {
      EXPECT_GE(n.memory_bytes, 10);
      EXPECT_LE(n.memory_bytes, 20);
    }
  }
}

TEST(SampleDag, MeanMemoryNearMidpoint) {
  double sum = 0;
  long count = 0;
  for (std::uint64_t s = 0; s < 10000; ++s)
    for (const auto& n : sample_dag({10, 3, 1024, 4 << 20, s}).nodes) {
      sum += static_cast<double>(n.memory_bytes);
      ++count;
    }
  const double mid = (1024.0 + (4 << 20)) / 2.0;
  EXPECT_NEAR(sum / count, mid, 0.02 * mid);
}

class GraphFile : public ::testing::Test {
 protected:
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "pipesched_graph_io";
  void SetUp() override { std::filesystem::create_directories(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }
  std::filesystem::path write(const std::string& text) {
    const auto p = dir / "g.json";
    std::ofstream(p) << text;
    return p;
  }
};

TEST_F(GraphFile, RoundTrip) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const ComputeDag dag = sample_dag({12, 3, 1, 1 << 20, s});
    const auto p = dir / "rt.json";
    save_graph(dag, p);
    EXPECT_EQ(load_graph(p), dag);
  }
}

TEST_F(GraphFile, OutOfRangeEdgeIsParseError) {
  const auto p = write(R"({"name":"x","nodes":[{"op":"a","memory_bytes":1}],"edges":[[0,1]]})");
  try {
    load_graph(p);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("edges[0][1]"), std::string::npos) << e.what();
  }
}

TEST_F(GraphFile, MalformedJsonReportsLine) {
  const auto p = write("{\n\"nodes\": [\n,\n]}");
  try {
    load_graph(p);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST_F(GraphFile, FieldErrors) {
  EXPECT_THROW(load_graph(write(R"({"nodes":[{"op":"a"}],"edges":[]})")), ParseError);
  EXPECT_THROW(load_graph(write(R"({"nodes":[{"op":"a","memory_bytes":-1}],"edges":[]})")), ParseError);
  EXPECT_THROW(load_graph(write(R"({"nodes":[{"op":"a","memory_bytes":1}],"edges":[[0,0]]})")), ParseError);
  EXPECT_THROW(load_graph(write(R"({"nodes":[{"op":"a","memory_bytes":1},{"op":"b","memory_bytes":1}],)"
                                R"("edges":[[0,1],[1,0]]})")),
               CyclicGraph);
  EXPECT_THROW(load_graph(dir / "missing.json"), ParseError);
}
