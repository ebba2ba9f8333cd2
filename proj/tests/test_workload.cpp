#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace fragmig;

namespace {

constexpr const char* kHeader =
    "Timestamp [ms];\tCPU cores;\tCPU capacity provisioned [MHZ];\tCPU usage [MHZ];\tCPU usage [%];\t"
    "Memory capacity provisioned [KB];\tMemory usage [KB];\tDisk read throughput [KB/s];\t"
    "Disk write throughput [KB/s];\tNetwork received throughput [KB/s];\tNetwork transmitted throughput [KB/s]\n";

std::string row(double cpu_mhz, double mem_kb, double net_kbs) {
  return "0;\t4;\t10000;\t" + std::to_string(cpu_mhz) + ";\t10;\t8000000;\t" + std::to_string(mem_kb) +
         ";\t0;\t0;\t0;\t" + std::to_string(net_kbs) + "\n";
}

}  // namespace

TEST(TraceIngest, ConvertsCpuToGhz) {
  std::string text = kHeader + row(1000, 1048576, 1024) + row(2000, 2097152, 2048) + row(1500, 524288, 512);
  auto ingest = ingest_trace_text(text);
  ASSERT_EQ(ingest.series.size(), 3u);
  EXPECT_DOUBLE_EQ(ingest.series.cpu_ghz[0], 1.0);
  EXPECT_DOUBLE_EQ(ingest.series.cpu_ghz[1], 2.0);
  EXPECT_DOUBLE_EQ(ingest.series.cpu_ghz[2], 1.5);
  EXPECT_DOUBLE_EQ(ingest.series.mem_gb[0], 1.0);
  EXPECT_DOUBLE_EQ(ingest.series.mem_gb[2], 0.5);
  EXPECT_DOUBLE_EQ(ingest.series.net_mbps[1], 2.0);
  EXPECT_EQ(ingest.skipped_rows, 0u);
}

TEST(TraceIngest, MissingMemoryColumnIsNamed) {
  std::string text = "Timestamp [ms];CPU usage [MHZ];Network transmitted throughput [KB/s]\n0;1000;10\n";
  try {
    ingest_trace_text(text);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("memory usage"), std::string::npos);
  }
}

TEST(TraceIngest, MalformedRowIsSkipped) {
  std::string text = kHeader;
  for (int i = 0; i < 10; ++i) text += i == 4 ? "0;\t4;\t10000;\tabc;\t10\n" : row(1000 + i, 1000, 10);
  auto ingest = ingest_trace_text(text);
  EXPECT_EQ(ingest.series.size(), 9u);
  EXPECT_EQ(ingest.skipped_rows, 1u);
}

TEST(TraceIngest, CommaSeparatedAccepted) {
  auto ingest = ingest_trace_text("CPU usage [MHZ],Memory usage [KB],Network transmitted throughput [KB/s]\n500,0,0\n");
  EXPECT_DOUBLE_EQ(ingest.series.cpu_ghz[0], 0.5);
}

TEST(TraceIngest, EmptyFileRejected) { EXPECT_THROW(ingest_trace_text(""), DataError); }

TEST(GenerateSfc, SameSeedSameRequest) {
  WorkloadConfig cfg;
  Rng a(7), b(7);
  EXPECT_EQ(generate_sfc(a, cfg, 3, 1), generate_sfc(b, cfg, 3, 1));
}

TEST(GenerateSfc, FixedChainLengthThree) {
  WorkloadConfig cfg;
  cfg.min_chain = cfg.max_chain = 3;
  Rng rng(1);
  auto sfc = generate_sfc(rng, cfg, 0, 0);
  EXPECT_EQ(sfc.vnfs.size(), 3u);
  ASSERT_EQ(sfc.links.size(), 2u);
  EXPECT_EQ(sfc.links[0].src, 0u);
  EXPECT_EQ(sfc.links[0].dst, 1u);
  EXPECT_EQ(sfc.links[1].src, 1u);
  EXPECT_EQ(sfc.links[1].dst, 2u);
}

TEST(GenerateSfc, DefaultRangesOverManyDraws) {
  WorkloadConfig cfg;
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto sfc = generate_sfc(rng, cfg, i, static_cast<SfcId>(i));
    EXPECT_GE(sfc.latency_limit_ms, 20.0);
    EXPECT_LE(sfc.latency_limit_ms, 50.0);
    EXPECT_GE(sfc.lifetime, 1);
    EXPECT_LE(sfc.lifetime, 100);
    EXPECT_TRUE(is_dag(sfc));
    for (const auto& v : sfc.vnfs) {
      EXPECT_EQ(v.demand.samples.size(), static_cast<std::size_t>(sfc.lifetime));
      for (const auto& d : v.demand.samples) EXPECT_TRUE(d[0] >= 0 && d[1] >= 0);
    }
  }
}

TEST(GenerateSfc, BranchingShapesStayAcyclic) {
  WorkloadConfig cfg;
  cfg.shape = ChainShape::branching;
  cfg.min_chain = 4;
  cfg.max_chain = 6;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto sfc = generate_sfc(rng, cfg, 0, static_cast<SfcId>(i));
    EXPECT_TRUE(is_dag(sfc));
    for (const auto& l : sfc.links) EXPECT_LT(l.src, l.dst);
  }
}

TEST(GenerateSfc, TraceModeRequiresTraces) {
  WorkloadConfig cfg;
  cfg.mode = DemandMode::trace;
  Rng rng(1);
  EXPECT_THROW(generate_sfc(rng, cfg, 0, 0), ConfigError);
}

TEST(GenerateSfc, TraceModeDrawsFromSeries) {
  WorkloadConfig cfg;
  cfg.mode = DemandMode::trace;
  TraceSeries tr{"t", {1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  Rng rng(3);
  auto sfc = generate_sfc(rng, cfg, 0, 0, {tr});
  for (const auto& v : sfc.vnfs)
    for (const auto& d : v.demand.samples) {
      EXPECT_TRUE(d[0] == 1 || d[0] == 2 || d[0] == 3);
      EXPECT_DOUBLE_EQ(d[1], d[0] + 3);
    }
}

TEST(DemandAt, OffsetsAndWrap) {
  Vnf v;
  v.start_slot = 5;
  v.demand.samples = {{1, 0}, {2, 0}, {3, 0}};
  EXPECT_EQ(demand_at(v, 5)[0], 1);
  EXPECT_EQ(demand_at(v, 6)[0], 2);
  EXPECT_EQ(demand_at(v, 7)[0], 3);
  EXPECT_EQ(demand_at(v, 8)[0], 1);
}

TEST(DemandAt, ConstantTrace) {
  VnfLink l;
  l.demand.samples = {{0.4}};
  for (int t = 0; t < 50; ++t) EXPECT_EQ(demand_at(l, t)[0], 0.4);
}

TEST(WorkloadGenerator, DeterministicStreams) {
  WorkloadConfig cfg;
  WorkloadGenerator a(cfg, 42), b(cfg, 42);
  for (int t = 0; t < 20; ++t) EXPECT_EQ(a.arrivals(t), b.arrivals(t));
}

TEST(WorkloadGenerator, PoissonMeanNearRate) {
  WorkloadConfig cfg;
  cfg.arrival_rate = 4;
  WorkloadGenerator gen(cfg, 9);
  double total = 0;
  const int slots = 2000;
  for (int t = 0; t < slots; ++t) total += static_cast<double>(gen.arrivals(t).size());
  // standard error of the mean is sqrt(4/2000) ~ 0.045
  EXPECT_NEAR(total / slots, 4.0, 0.2);
}

TEST(WorkloadGenerator, IdsAreUnique) {
  WorkloadGenerator gen(WorkloadConfig{}, 1);
  std::set<SfcId> ids;
  std::size_t n = 0;
  for (int t = 0; t < 20; ++t)
    for (auto& s : gen.arrivals(t)) {
      ids.insert(s.id);
      ++n;
    }
  EXPECT_EQ(ids.size(), n);
}

TEST(WorkloadConfig, ValidateRejectsBadRanges) {
  WorkloadConfig cfg;
  cfg.min_chain = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.arrival_rate = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.max_lifetime = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.synthetic.cpu_hi = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(WorkloadConfig, JsonRoundTrip) {
  WorkloadConfig cfg;
  cfg.arrival_rate = 3.5;
  cfg.shape = ChainShape::branching;
  nlohmann::json j = cfg;
  auto back = j.get<WorkloadConfig>();
  EXPECT_EQ(back.arrival_rate, 3.5);
  EXPECT_EQ(back.shape, ChainShape::branching);
  EXPECT_EQ(j["shape"], "branching");
}
