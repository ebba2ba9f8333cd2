#include <gtest/gtest.h>

#include <set>

#include "fixtures.hpp"

using namespace fragmig;
using fixtures::make_net;

TEST(Topology, NsfnetShape) {
  const auto net = nsfnet();
  EXPECT_EQ(net.node_count(), 14u);
  EXPECT_EQ(net.link_count(), 22u);
  for (const auto& n : net.nodes()) {
    EXPECT_DOUBLE_EQ(n.capacity[kCpu], 32.0);
    EXPECT_DOUBLE_EQ(n.capacity[kMem], 64.0);
  }
  for (const auto& l : net.links()) {
    EXPECT_DOUBLE_EQ(l.capacity[kBandwidth], 5.0);
    EXPECT_GE(l.delay_ms, 1.0);
    EXPECT_LE(l.delay_ms, 5.0);
  }
}

TEST(Topology, NsfnetDataFileMatchesBuiltin) {
  const auto from_file = parse_topology(read_file(std::string(FRAGMIG_SOURCE_DIR) + "/data/nsfnet.json"));
  EXPECT_EQ(from_file.fingerprint(), nsfnet().fingerprint());
}

TEST(Topology, JsonRoundTrip) {
  const auto net = nsfnet();
  const auto back = load_topology(to_json(net));
  EXPECT_EQ(back.fingerprint(), net.fingerprint());
}

TEST(Topology, RejectsSelfLoop) {
  EXPECT_THROW(make_net({{1, 1}, {1, 1}}, {{0, 0, 1, 1}, {0, 1, 1, 1}}), InvariantError);
}

TEST(Topology, RejectsDuplicateLink) {
  EXPECT_THROW(make_net({{1, 1}, {1, 1}}, {{0, 1, 1, 1}, {1, 0, 1, 1}}), InvariantError);
}

TEST(Topology, RejectsDisconnectedGraph) {
  EXPECT_THROW(make_net({{1, 1}, {1, 1}, {1, 1}}, {{0, 1, 1, 1}}), InvariantError);
}

TEST(Topology, RejectsNonPositiveCapacityNamingTheField) {
  try {
    make_net({{1, 1}, {0, 1}}, {{0, 1, 1, 1}});
    FAIL() << "expected an error";
  } catch (const InvariantError& e) {
    EXPECT_NE(std::string(e.what()).find("nodes[1]"), std::string::npos) << e.what();
  }
  EXPECT_THROW(make_net({{1, 1}, {1, 1}}, {{0, 1, -1, 1}}), InvariantError);
  EXPECT_THROW(make_net({{1, 1}, {1, 1}}, {{0, 1, 1, 0}}), InvariantError);
}

TEST(Topology, ParseErrorsNameTheField) {
  EXPECT_THROW(parse_topology("{not json"), ParseError);
  EXPECT_THROW(parse_topology(R"({"nodes": []})"), ParseError);
  try {
    parse_topology(R"({"nodes":[{"id":0,"cpu":1,"mem":1},{"id":1,"cpu":1}],"links":[{"u":0,"v":1,"bandwidth":1,"delay_ms":1}]})");
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("nodes[1]"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_topology(R"({"nodes":[{"id":0,"cpu":1,"mem":1},{"id":5,"cpu":1,"mem":1}],"links":[]})"),
               InvariantError);
  EXPECT_THROW(parse_topology(R"({"nodes":[{"id":0,"cpu":1,"mem":1},{"id":1,"cpu":1,"mem":1}],"links":[{"u":0,"v":7,"bandwidth":1,"delay_ms":1}]})"),
               InvariantError);
}

TEST(Topology, HopDistancesMatchFloydWarshall) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    auto net = fixtures::random_connected(rng, 3 + trial % 6, 0.3);
    auto ref = fixtures::ref_hops(net);
    for (NodeId n = 0; n < net.node_count(); ++n) EXPECT_EQ(net.hop_distances(n), ref[n]);
  }
}

TEST(Topology, KHopNeighborsOnLine) {
  auto net = fixtures::line_net(5);
  EXPECT_EQ(k_hop_neighbors(net, 2, 0), (std::vector<NodeId>{2}));
  EXPECT_EQ(k_hop_neighbors(net, 2, 1), (std::vector<NodeId>{1, 3}));
  EXPECT_EQ(k_hop_neighbors(net, 2, 2), (std::vector<NodeId>{0, 4}));
  EXPECT_TRUE(k_hop_neighbors(net, 2, 3).empty());
}

TEST(Topology, KHopPathsMatchBruteForceEnumeration) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    auto net = fixtures::random_connected(rng, 2 + trial % 7, 0.4);
    for (NodeId n = 0; n < net.node_count(); ++n)
      for (std::size_t k = 1; k <= 4; ++k) {
        std::set<std::vector<NodeId>> got, want;
        for (const auto& p : k_hop_paths(net, n, k)) {
          EXPECT_EQ(p.hops(), k);
          EXPECT_EQ(p.front(), n);
          got.insert(p.nodes);
        }
        for (const auto& p : fixtures::ref_paths(net, n, k)) want.insert(p);
        EXPECT_EQ(got, want) << "trial " << trial << " node " << n << " k " << k;
      }
  }
}

TEST(Topology, PathTableIsDelaySortedAndValid) {
  const auto net = nsfnet();
  PathTable table(net);
  for (NodeId s = 0; s < net.node_count(); ++s)
    for (NodeId d = 0; d < net.node_count(); ++d) {
      const auto& ps = table.paths(s, d);
      ASSERT_FALSE(ps.empty());
      EXPECT_LE(ps.size(), PathTable::kDefaultPerPairCap);
      if (s == d) {
        EXPECT_EQ(ps.front().hops(), 0u);
        EXPECT_EQ(ps.front().delay_ms, 0.0);
      }
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const auto& p = ps[i];
        EXPECT_EQ(p.front(), s);
        EXPECT_EQ(p.back(), d);
        EXPECT_EQ(p.nodes.size(), p.links.size() + 1);
        double delay = 0;
        for (std::size_t h = 0; h < p.links.size(); ++h) {
          const auto& l = net.link(p.links[h]);
          EXPECT_TRUE((l.u == p.nodes[h] && l.v == p.nodes[h + 1]) || (l.v == p.nodes[h] && l.u == p.nodes[h + 1]));
          delay += l.delay_ms;
        }
        EXPECT_DOUBLE_EQ(p.delay_ms, delay);
        EXPECT_EQ(std::set<NodeId>(p.nodes.begin(), p.nodes.end()).size(), p.nodes.size());
        if (i > 0) { EXPECT_LE(ps[i - 1].delay_ms, p.delay_ms); }
      }
    }
}

TEST(Topology, MultiHopGraphMatchesPathExistence) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    auto net = fixtures::random_connected(rng, 3 + trial % 6, 0.3);
    for (std::size_t k = 1; k <= 3; ++k) {
      auto g = derive_multi_hop_graph(net, k);
      for (NodeId a = 0; a < net.node_count(); ++a)
        for (NodeId b = 0; b < net.node_count(); ++b) {
          if (a == b) continue;
          bool want = false;
          for (const auto& p : fixtures::ref_paths(net, a, k)) want = want || p.back() == b;
          EXPECT_EQ(g.has_edge(a, b), want) << "k=" << k << " " << a << "-" << b;
        }
    }
  }
}

TEST(Topology, MultiHopGraphExamples) {
  auto line = fixtures::line_net(3);
  auto g2 = derive_multi_hop_graph(line, 2);
  EXPECT_TRUE(g2.has_edge(0, 2));
  EXPECT_FALSE(g2.has_edge(0, 1));
  auto tri = fixtures::triangle();
  auto t2 = derive_multi_hop_graph(tri, 2);
  EXPECT_TRUE(t2.has_edge(0, 1));  // 0-2-1
  EXPECT_EQ(derive_multi_hop_graph(tri, 1).edges.size(), 3u);
}

TEST(Topology, CompleteGraphAndScaling) {
  auto k5 = complete_graph(5, {32, 64}, {5}, 1);
  EXPECT_EQ(k5.link_count(), 10u);
  EXPECT_EQ(k5.diameter(), 1u);
  auto scaled = scale_capacities(nsfnet(), 2.0, 0.5, 3.0);
  EXPECT_DOUBLE_EQ(scaled.node(3).capacity[kCpu], 64.0);
  EXPECT_DOUBLE_EQ(scaled.node(3).capacity[kMem], 32.0);
  EXPECT_DOUBLE_EQ(scaled.link(3).capacity[kBandwidth], 15.0);
  EXPECT_EQ(scaled.structure_fingerprint(), nsfnet().structure_fingerprint());
  EXPECT_NE(scaled.fingerprint(), nsfnet().fingerprint());
}
