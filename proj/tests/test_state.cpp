#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace fragmig;
using fixtures::install;
using fixtures::make_sfc;

namespace {

// Exhaustive search over placements and table paths for a feasible embedding.
bool brute_force_feasible(const Network& net, const PathTable& table, const SfcRequest& sfc, double rho) {
  const std::size_t N = net.node_count(), V = sfc.vnfs.size(), L = sfc.links.size();
  std::vector<NodeId> place(V, 0);
  std::function<bool(std::size_t, std::vector<LinkVec>&)> links_rec;
  auto check_nodes = [&] {
    std::vector<NodeVec> u(N, NodeVec{});
    for (std::size_t v = 0; v < V; ++v) u[place[v]] += demand_at(sfc.vnfs[v], 0);
    for (NodeId n = 0; n < N; ++n)
      for (std::size_t i = 0; i < kNodeDims; ++i)
        if (u[n][i] > rho * net.node(n).capacity[i]) return false;
    return true;
  };
  links_rec = [&](std::size_t li, std::vector<LinkVec>& lu) -> bool {
    if (li == L) {
      for (LinkId e = 0; e < net.link_count(); ++e)
        if (lu[e][0] > rho * net.link(e).capacity[0]) return false;
      return true;
    }
    const auto& l = sfc.links[li];
    for (const auto& p : table.paths(place[l.src], place[l.dst])) {
      if (p.delay_ms + sfc.vnfs[l.dst].processing_delay_ms > l.deadline_ms) continue;
      auto next = lu;
      for (LinkId e : p.links) next[e] += demand_at(l, 0);
      if (links_rec(li + 1, next)) return true;
    }
    return false;
  };
  std::size_t total = 1;
  for (std::size_t v = 0; v < V; ++v) total *= N;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t v = 0; v < V; ++v) {
      place[v] = c % N;
      c /= N;
    }
    if (!check_nodes()) continue;
    std::vector<LinkVec> lu(net.link_count(), LinkVec{});
    if (links_rec(0, lu)) return true;
  }
  return false;
}

}  // namespace

TEST(NodeUtilization, EmptyIsZero) {
  auto net = fixtures::line_net(2);
  NetworkState s(net);
  EXPECT_EQ(s.node_utilization(0, kCpu), 0.0);
  EXPECT_EQ(s.link_utilization(0, kBandwidth), 0.0);
}

TEST(NodeUtilization, SumsAndMigration) {
  auto net = fixtures::line_net(2);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{2, 1}}, {}), {0});
  install(s, table, make_sfc(2, {{3, 1}}, {}), {0});
  EXPECT_DOUBLE_EQ(s.node_utilization(0, kCpu), 5.0);
  MigrationAction a{{2, 0}, 0, 1, {}};
  s.apply_migration(a, 1.0);
  EXPECT_DOUBLE_EQ(s.node_utilization(0, kCpu), 2.0);
  EXPECT_DOUBLE_EQ(s.node_utilization(1, kCpu), 3.0);
  EXPECT_FALSE(s.consistency_error());
}

TEST(LinkUtilization, SumsAndMultiHop) {
  auto net = fixtures::line_net(3);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{1, 1}, {1, 1}}, {0.1}), {0, 1});
  install(s, table, make_sfc(2, {{1, 1}, {1, 1}}, {0.2}), {0, 1});
  EXPECT_NEAR(s.link_utilization(0, kBandwidth), 0.3, 1e-12);
  EXPECT_EQ(s.link_utilization(1, kBandwidth), 0.0);
  install(s, table, make_sfc(3, {{1, 1}, {1, 1}}, {0.5}), {0, 2});
  EXPECT_NEAR(s.link_utilization(0, kBandwidth), 0.8, 1e-12);
  EXPECT_NEAR(s.link_utilization(1, kBandwidth), 0.5, 1e-12);
}

TEST(Release, LifetimeOneReleasedAtSlotOne) {
  auto net = fixtures::line_net(2);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{1, 1}}, {}, 0, 1), {0});
  EXPECT_EQ(s.release_expired(0), 0u);
  EXPECT_EQ(s.release_expired(1), 1u);
  EXPECT_TRUE(s.active().empty());
  EXPECT_EQ(s.node_utilization(0, kCpu), 0.0);
}

TEST(Release, AllExpiredEmptiesEverything) {
  auto net = fixtures::line_net(3);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{1, 1}, {2, 2}}, {0.3}, 0, 4), {0, 2});
  install(s, table, make_sfc(2, {{1, 1}}, {}, 0, 2), {1});
  EXPECT_EQ(s.release_expired(10), 2u);
  for (NodeId n = 0; n < 3; ++n) EXPECT_TRUE(s.vnfs_on(n).empty());
  for (LinkId e = 0; e < 2; ++e) EXPECT_TRUE(s.links_on(e).empty());
}

TEST(Migration, InfeasibleLeavesStateUnchanged) {
  auto net = fixtures::line_net(2);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{10, 1}}, {}), {0});
  install(s, table, make_sfc(2, {{10, 1}}, {}), {1});
  auto before = s.snapshot_json();
  MigrationAction a{{1, 0}, 0, 1, {}};
  EXPECT_THROW(s.apply_migration(a, 0.5), InfeasibleMigration);
  EXPECT_EQ(s.snapshot_json(), before);
}

TEST(Migration, UpstreamLinkFollowsNewHost) {
  auto net = fixtures::line_net(3);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{1, 1}, {1, 1}}, {0.2}), {0, 1});
  MigrationAction a{{1, 1}, 1, 2, {{0, table.paths(0, 2).front()}}};
  s.apply_migration(a, 1.0);
  const auto& route = s.route({1, 0});
  EXPECT_EQ(route.front(), s.host({1, 0}));
  EXPECT_EQ(route.back(), s.host({1, 1}));
  EXPECT_NEAR(s.link_utilization(1, kBandwidth), 0.2, 1e-12);
  EXPECT_FALSE(s.consistency_error());
}

TEST(Migration, RouteViolatingDeadlineRejected) {
  auto net = fixtures::line_net(3, {32, 64}, 5, 10);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{1, 1}, {1, 1}}, {0.2}, 0, 10, 15), {0, 1});
  MigrationAction a{{1, 1}, 1, 2, {{0, table.paths(0, 2).front()}}};
  auto why = s.check_migration(a, 1.0);
  ASSERT_TRUE(why.has_value());
  EXPECT_NE(why->find("deadline"), std::string::npos);
}

TEST(Conservation, RandomMigrationsKeepTotals) {
  std::mt19937_64 rng(3);
  auto net = fixtures::random_connected(rng, 6, 0.4);
  PathTable table(net);
  NetworkState s(net);
  WorkloadGenerator gen(WorkloadConfig{}, 5);
  for (int t = 0; t < 3; ++t)
    for (auto& sfc : gen.arrivals(0)) deploy_sfc(s, sfc, table, 1.0);
  auto total = [&] {
    NodeVec sum{};
    for (NodeId n = 0; n < net.node_count(); ++n) sum += s.node_util(n);
    return sum;
  };
  const auto before = s.total_vnf_demand();
  for (std::size_t i = 0; i < kNodeDims; ++i) EXPECT_NEAR(total()[i], before[i], 1e-9);
  std::size_t applied = 0;
  for (int trial = 0; trial < 200; ++trial) {
    if (s.active().empty()) break;
    auto it = s.active().begin();
    std::advance(it, static_cast<long>(rng() % s.active().size()));
    const auto& entry = it->second;
    const VnfRef r{it->first, static_cast<std::uint32_t>(rng() % entry.placement.size())};
    const NodeId to = rng() % net.node_count();
    if (to == s.host(r)) continue;
    MigrationAction a{r, s.host(r), to, {}};
    for (auto lr : s.adjacent_links(r)) {
      const auto& l = s.vnf_link(lr);
      NodeId src = l.src == r.vnf ? to : entry.placement[l.src];
      NodeId dst = l.dst == r.vnf ? to : entry.placement[l.dst];
      a.routes.emplace_back(lr.link, table.paths(src, dst).front());
    }
    if (s.check_migration(a, 1.0)) continue;
    s.apply_migration(a, 1.0);
    ++applied;
    for (std::size_t i = 0; i < kNodeDims; ++i) EXPECT_NEAR(total()[i], before[i], 1e-9);
    ASSERT_FALSE(s.consistency_error()) << *s.consistency_error();
  }
  EXPECT_GT(applied, 0u);
}

TEST(SetClock, UtilizationFollowsDemandSeries) {
  auto net = fixtures::line_net(2);
  PathTable table(net);
  NetworkState s(net);
  auto sfc = make_sfc(1, {{1, 1}}, {}, 0, 3);
  sfc.vnfs[0].demand.samples = {{1, 1}, {4, 1}, {2, 1}};
  install(s, table, sfc, {0});
  s.set_clock(1);
  EXPECT_EQ(s.node_utilization(0, kCpu), 4.0);
  s.set_clock(2);
  EXPECT_EQ(s.node_utilization(0, kCpu), 2.0);
}

TEST(DetectOverloads, StrictThresholdAndResource) {
  auto net = fixtures::line_net(2);
  PathTable table(net);
  NetworkState s(net);
  EXPECT_TRUE(detect_overloads(s, 0.5).empty());
  install(s, table, make_sfc(1, {{16, 1}}, {}), {0});
  EXPECT_TRUE(detect_overloads(s, 0.5).empty());
  install(s, table, make_sfc(2, {{1, 1}}, {}), {0});
  auto o = detect_overloads(s, 0.5);
  ASSERT_EQ(o.nodes.size(), 1u);
  EXPECT_EQ(o.nodes[0].node, 0u);
  EXPECT_EQ(o.nodes[0].resource, kCpu);
}

TEST(DetectOverloads, LinkOverload) {
  auto net = fixtures::line_net(2);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{1, 1}, {1, 1}}, {3}), {0, 1});
  auto o = detect_overloads(s, 0.5);
  ASSERT_EQ(o.links.size(), 1u);
  EXPECT_EQ(o.links[0].link, 0u);
}

TEST(Deploy, SingleVnfGoesToLeastLoaded) {
  auto net = fixtures::line_net(3);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{4, 4}}, {}), {0});
  install(s, table, make_sfc(2, {{2, 2}}, {}), {1});
  auto r = deploy_sfc(s, make_sfc(3, {{1, 1}}, {}), table, 0.5);
  ASSERT_TRUE(r.accepted);
  EXPECT_EQ(r.placement[0], 2u);
}

TEST(Deploy, OversizedRejectedStateUnchanged) {
  auto net = fixtures::line_net(3);
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{4, 4}}, {}), {0});
  auto before = s.snapshot_json();
  auto r = deploy_sfc(s, make_sfc(3, {{17, 1}}, {}), table, 0.5);
  EXPECT_FALSE(r.accepted);
  EXPECT_EQ(s.snapshot_json(), before);
}

TEST(Deploy, MatchesBruteForceOnSmallInstances) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u01(0, 1);
  int accepted = 0, rejected = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const std::size_t n = 2 + rng() % 2;
    auto net = fixtures::random_connected(rng, n, 0.5, {10, 10}, 2);
    PathTable table(net);
    NetworkState s(net);
    const std::size_t nv = 1 + rng() % 3;
    std::vector<NodeVec> d;
    std::vector<double> bw;
    for (std::size_t i = 0; i < nv; ++i) d.push_back({u01(rng) * 8, u01(rng) * 8});
    for (std::size_t i = 0; i + 1 < nv; ++i) bw.push_back(u01(rng) * 2.5);
    auto sfc = make_sfc(1, d, bw, 0, 5, 2 + u01(rng) * 10, u01(rng) * 2);
    const bool expect = brute_force_feasible(net, table, sfc, 1.0);
    auto r = deploy_sfc(s, sfc, table, 1.0);
    ASSERT_EQ(r.accepted, expect) << "trial " << trial;
    if (r.accepted) {
      ++accepted;
      EXPECT_FALSE(s.consistency_error());
      EXPECT_TRUE(detect_overloads(s, 1.0).empty());
    } else {
      ++rejected;
      EXPECT_TRUE(s.active().empty());
    }
  }
  EXPECT_GT(accepted, 50);
  EXPECT_GT(rejected, 50);
}

TEST(Deploy, DuplicateIdThrows) {
  auto net = fixtures::line_net(2);
  PathTable table(net);
  NetworkState s(net);
  ASSERT_TRUE(deploy_sfc(s, make_sfc(1, {{1, 1}}, {}), table, 0.5).accepted);
  EXPECT_THROW(deploy_sfc(s, make_sfc(1, {{1, 1}}, {}), table, 0.5), InvariantError);
}

TEST(SelectPath, CoLocatedIsEmpty) {
  auto net = fixtures::triangle();
  PathTable table(net);
  NetworkState s(net);
  auto p = select_path(table, net, s.link_utils(), 0.5, {1}, 1, 1, 10);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->hops(), 0u);
  EXPECT_EQ(p->delay_ms, 0.0);
}

TEST(SelectPath, SaturatedDirectLinkUsesDetour) {
  auto net = fixtures::triangle();
  PathTable table(net);
  std::vector<LinkVec> util(3, LinkVec{0});
  util[*net.link_between(0, 1)] = {2.4};
  auto p = select_path(table, net, util, 0.5, {0.5}, 0, 1, 10);
  ASSERT_TRUE(p);
  EXPECT_EQ(p->hops(), 2u);
  EXPECT_EQ(p->nodes, (std::vector<NodeId>{0, 2, 1}));
}

TEST(SelectPath, DeadlineFailure) {
  auto net = fixtures::triangle();
  PathTable table(net);
  std::vector<LinkVec> util(3, LinkVec{0});
  EXPECT_FALSE(select_path(table, net, util, 0.5, {0.1}, 0, 1, 0.5));
}

TEST(SelectPath, ExcludedLinkSkipped) {
  auto net = fixtures::triangle();
  PathTable table(net);
  std::vector<LinkVec> util(3, LinkVec{0});
  auto p = select_path(table, net, util, 0.5, {0.1}, 0, 1, 10, net.link_between(0, 1));
  ASSERT_TRUE(p);
  EXPECT_EQ(p->hops(), 2u);
}

TEST(Reroute, MovesBandwidth) {
  auto net = fixtures::triangle();
  PathTable table(net);
  NetworkState s(net);
  install(s, table, make_sfc(1, {{1, 1}, {1, 1}}, {1.0}), {0, 1});
  const LinkId direct = *net.link_between(0, 1);
  EXPECT_DOUBLE_EQ(s.link_utilization(direct, 0), 1.0);
  s.reroute({1, 0}, table.paths(0, 1)[1], 0.5);
  EXPECT_DOUBLE_EQ(s.link_utilization(direct, 0), 0.0);
  EXPECT_DOUBLE_EQ(s.link_utilization(*net.link_between(0, 2), 0), 1.0);
  EXPECT_FALSE(s.consistency_error());
}
