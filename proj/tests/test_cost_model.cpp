#include <random>

#include "doctest.h"
#include "gcnbench/cost_model.hpp"
#include "gcnbench/error.hpp"
#include "gcnbench/sampler.hpp"

using namespace gcnbench;

namespace {

constexpr std::uint64_t kPapersV = 111'059'956;
constexpr std::uint64_t kPapersE = 1'615'685'872;

// Every layer at the 256-wide embedding the papers examples talk about.
WorkloadSpec papers_batchwise() {
  WorkloadSpec w;
  w.num_vertices = kPapersV;
  w.avg_degree = 30.0;
  w.layer_dims = {256, 256, 256, 256};
  w.batch_size = 64;
  w.mode = SamplingMode::BatchWise;
  return w;
}

WorkloadSpec papers_layerwise() {
  WorkloadSpec w = papers_batchwise();
  w.mode = SamplingMode::LayerWise;
  w.batch_size = 1'000'000;
  w.expanded_override = 15'000'000;
  return w;
}

DeviceModel device(std::uint64_t capacity, std::uint64_t element_size = 4) {
  return DeviceModel{capacity, 32e9, element_size};
}

}  // namespace

TEST_CASE("batch-wise expansion") {
  CHECK(est_batchwise_expansion(papers_batchwise()) == 1'728'000);
  CHECK(1'728'000 == 64 * 30 * 30 * 30);

  WorkloadSpec w;
  w.num_vertices = 1000;
  w.avg_degree = 2.0;
  w.layer_dims = {4, 4, 4, 4};
  w.batch_size = 10;
  CHECK(est_batchwise_expansion(w) == 80);

  w.batch_size = 1000;
  w.avg_degree = 123.0;
  CHECK(est_batchwise_expansion(w) == 1000);
  w.layer_dims = {4};
  CHECK_THROWS_AS(w.validate(), Error);
}

TEST_CASE("num_batches") {
  CHECK(num_batches(kPapersV, 64) == 1'735'312);
  CHECK(num_batches(10, 10) == 1);
  CHECK(num_batches(10, 3) == 4);
  try {
    num_batches(10, 0);
    FAIL("expected config error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("batch-wise movement") {
  const CostReport r = est_batchwise_movement(papers_batchwise(), DeviceModel::a100_pcie4());
  CHECK(r.bytes_per_batch == 1'728'000ULL * 256 * 4 + 64ULL * 256 * 4);
  // Published "~4GB per batch" within a factor of three.
  CHECK(static_cast<double>(r.bytes_per_batch) * 3 >= 4e9);
  CHECK(static_cast<double>(r.bytes_per_batch) <= 4e9 * 3);
  CHECK(r.num_batches == 1'735'312);
  CHECK(r.total_movement >= 2'000'000'000'000'000ULL);
  CHECK(r.total_movement <= 6'000'000'000'000'000ULL);
  CHECK(r.est_transfer_seconds == doctest::Approx(static_cast<double>(r.total_movement) / 32e9));

  WorkloadSpec single;
  single.num_vertices = 100;
  single.avg_degree = 3.0;
  single.layer_dims = {1, 1};
  single.batch_size = 100;
  const CostReport s = est_batchwise_movement(single, device(1ULL << 30));
  CHECK(s.num_batches == 1);
  CHECK(s.total_movement == 100 * 4 + 100 * 4);
}

TEST_CASE("layer-wise footprint and movement") {
  WorkloadSpec w = papers_layerwise();
  CHECK(est_layerwise_footprint(w, DeviceModel::a100_pcie4()).activation_bytes ==
        30'720'000'000ULL);

  w.layer_dims = {1, 1};
  w.expanded_override = 1;
  const DeviceFootprint tiny = est_layerwise_footprint(w, device(1000));
  CHECK(tiny.activation_bytes == 8);
  CHECK(tiny.total() == 8 + tiny.weight_bytes);
  CHECK(tiny.weight_bytes == 4);

  w.layer_dims = {128, 256};
  w.expanded_override = 1'000'000;
  CHECK(est_layerwise_footprint(w, device(1ULL << 40)).activation_bytes == 1'536'000'000ULL);

  const CostReport r = est_layerwise_movement(papers_layerwise(), DeviceModel::a100_pcie4());
  CHECK(r.num_batches == 112);
  CHECK(static_cast<double>(r.total_movement) >= 2e12);
  CHECK(static_cast<double>(r.total_movement) <= 8e12);

  SUBCASE("one layer, one batch equals the full upload and download") {
    WorkloadSpec one;
    one.num_vertices = 500;
    one.avg_degree = 4.0;
    one.layer_dims = {16, 8};
    one.batch_size = 500;
    one.mode = SamplingMode::LayerWise;
    CHECK(est_layerwise_movement(one, device(1ULL << 30)).total_movement == 500 * (16 + 8) * 4);
  }

  SUBCASE("halving the batch size") {
    WorkloadSpec a;
    a.num_vertices = 100'000;
    a.avg_degree = 12.0;
    a.layer_dims = {64, 128, 32};
    a.mode = SamplingMode::LayerWise;
    for (std::uint64_t b = 50'000; b >= 2; b /= 2) {
      a.batch_size = b;
      const CostReport big = est_layerwise_movement(a, device(1ULL << 40));
      a.batch_size = b / 2;
      const CostReport small = est_layerwise_movement(a, device(1ULL << 40));
      CHECK(small.num_batches >= 2 * big.num_batches - 1);
      CHECK(small.num_batches >= big.num_batches);
      CHECK(small.bytes_per_batch <= big.bytes_per_batch);
    }
  }
}

TEST_CASE("host footprint") {
  WorkloadSpec w;
  w.num_vertices = 1'000'000;
  w.avg_degree = 5.0;
  w.layer_dims = {128, 256};
  CHECK(est_host_footprint(w, SamplingMode::LayerWise) == 1'000'000ULL * 384 * 4);
  CHECK(est_host_footprint(w, SamplingMode::BatchWise) == 1'000'000ULL * 128 * 4);

  w.layer_dims = {128, 0};
  CHECK_THROWS_AS(est_host_footprint(w, SamplingMode::LayerWise), Error);

  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    w.layer_dims = {1 + rng() % 300, 1 + rng() % 300, 1 + rng() % 300};
    CHECK(est_host_footprint(w, SamplingMode::LayerWise) >=
          est_host_footprint(w, SamplingMode::BatchWise));
  }
}

TEST_CASE("max_batch_size") {
  const WorkloadSpec papers = papers_batchwise();
  const std::uint64_t at64 = device_footprint(papers, DeviceModel::a100_pcie4(), SamplingMode::BatchWise);
  CHECK(max_batch_size(papers, device(at64), SamplingMode::BatchWise) == 64);

  CHECK(max_batch_size(papers, device(~0ULL), SamplingMode::BatchWise) == kPapersV);

  try {
    max_batch_size(papers, device(1000), SamplingMode::BatchWise);
    FAIL("expected infeasibility");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }
}

TEST_CASE("property: max_batch_size is maximal") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    WorkloadSpec w;
    w.num_vertices = 1 + rng() % 5'000'000;
    w.avg_degree = 1.0 + static_cast<double>(rng() % 4000) / 100.0;
    const std::size_t layers = 1 + rng() % 3;
    w.layer_dims.clear();
    for (std::size_t l = 0; l <= layers; ++l) w.layer_dims.push_back(1 + rng() % 512);
    const SamplingMode mode = trial % 2 ? SamplingMode::LayerWise : SamplingMode::BatchWise;
    DeviceModel dev = device(1);
    auto footprint = [&](std::uint64_t b) {
      WorkloadSpec probe = w;
      probe.batch_size = b;
      return device_footprint(probe, dev, mode);
    };
    const std::uint64_t lo = footprint(1);
    const std::uint64_t hi = footprint(w.num_vertices);
    dev.memory_capacity = lo + rng() % (2 * (hi - lo) + 1);
    const std::uint64_t b = max_batch_size(w, dev, mode);
    CAPTURE(trial);
    CHECK(footprint(b) <= dev.memory_capacity);
    CHECK((b == w.num_vertices || footprint(b + 1) > dev.memory_capacity));
  }
}

TEST_CASE("layer-wise moves less than batch-wise at each mode's largest batch") {
  const DeviceModel a100 = DeviceModel::a100_pcie4();
  WorkloadSpec bw = papers_batchwise();
  bw.batch_size = max_batch_size(bw, a100, SamplingMode::BatchWise);
  WorkloadSpec lw = papers_batchwise();
  lw.mode = SamplingMode::LayerWise;
  lw.batch_size = max_batch_size(lw, a100, SamplingMode::LayerWise);
  CHECK(est_layerwise_movement(lw, a100).total_movement <
        est_batchwise_movement(bw, a100).total_movement);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    WorkloadSpec w;
    w.num_vertices = 10'000 + rng() % 10'000'000;
    w.avg_degree = 2.0 + static_cast<double>(rng() % 3000) / 100.0;
    w.layer_dims = {1 + rng() % 256, 1 + rng() % 256, 1 + rng() % 256};
    if (rng() % 2) w.layer_dims.push_back(1 + rng() % 256);
    const DeviceModel dev = device(1'000'000 + rng() % 40'000'000'000ULL);
    WorkloadSpec b = w;
    WorkloadSpec l = w;
    l.mode = SamplingMode::LayerWise;
    try {
      b.batch_size = max_batch_size(b, dev, SamplingMode::BatchWise);
      l.batch_size = max_batch_size(l, dev, SamplingMode::LayerWise);
    } catch (const Error&) {
      continue;
    }
    if (b.batch_size == w.num_vertices) continue;  // nothing to compare when all fits
    CAPTURE(trial);
    CHECK(est_layerwise_movement(l, dev).total_movement <
          est_batchwise_movement(b, dev).total_movement);
  }
}

TEST_CASE("full-graph offload") {
  // Adjacency 8e8 + 4 * 600,000,002 bytes plus features 8 * 99,999,999 bytes = 4 GB.
  const GraphStats s = stats_from_counts(99'999'999, 600'000'002);
  const std::vector<std::size_t> unit{1, 1};
  const CostReport r = est_fullgraph_offload(s, unit, DeviceModel::a100_pcie4());
  CHECK(r.total_movement == 4'000'000'000ULL);
  CHECK(r.est_transfer_seconds == 0.125);

  const std::vector<std::size_t> zero{0, 4};
  CHECK_THROWS_AS(est_fullgraph_offload(s, zero, DeviceModel::a100_pcie4()), Error);

  const GraphStats papers = stats_from_counts(kPapersV, kPapersE);
  const std::vector<std::size_t> wide{256, 256, 256};
  CHECK(fullgraph_footprint(papers, wide) > 100'000'000'000ULL);
  try {
    est_fullgraph_offload(papers, wide, DeviceModel::a100_pcie4());
    FAIL("expected capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capacity);
  }
}

TEST_CASE("reports scale linearly in element size") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    WorkloadSpec w;
    w.num_vertices = 1 + rng() % 1'000'000;
    w.avg_degree = 1.0 + static_cast<double>(rng() % 2000) / 100.0;
    w.layer_dims = {1 + rng() % 300, 1 + rng() % 300, 1 + rng() % 300};
    w.batch_size = 1 + rng() % w.num_vertices;
    for (std::uint64_t k : {2ULL, 3ULL}) {
      const CostReport b4 = est_batchwise_movement(w, device(1, 4));
      const CostReport bk = est_batchwise_movement(w, device(1, 4 * k));
      CHECK(bk.total_movement == k * b4.total_movement);
      CHECK(bk.bytes_per_batch == k * b4.bytes_per_batch);
      CHECK(bk.peak_device_footprint == k * b4.peak_device_footprint);
      const CostReport l4 = est_layerwise_movement(w, device(1, 4));
      const CostReport lk = est_layerwise_movement(w, device(1, 4 * k));
      CHECK(lk.total_movement == k * l4.total_movement);
      CHECK(lk.peak_device_footprint == k * l4.peak_device_footprint);
      CHECK(est_host_footprint(w, SamplingMode::LayerWise, 4 * k) ==
            k * est_host_footprint(w, SamplingMode::LayerWise, 4));
    }
  }
}

TEST_CASE("estimates agree with measured sampler traces") {
  std::mt19937_64 rng(123);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t v = 500 + rng() % 9500;
    const std::size_t e = v * (2 + rng() % 8);
    const CsrGraph g = gen_random_graph(GraphModel::ErdosRenyi, v, e, rng());
    const std::size_t layers = 1 + rng() % 3;
    std::vector<std::size_t> dims{8};
    for (std::size_t l = 0; l < layers; ++l) dims.push_back(4 + l);
    const GcnModel m = make_model(dims, rng());
    const SamplingConfig cfg{SamplingMode::BatchWise, 1 + rng() % 40};

    std::vector<TraceRecord> records;
    RunContext ctx;
    ctx.on_batch = [&](const TraceRecord& r) { records.push_back(r); };
    run_batchwise(g, gen_features(v, 8, rng()), m, cfg, &ctx);

    double measured = 0.0;
    for (const auto& r : records) {
      measured += static_cast<double>(r.num_expanded);
      CHECK(r.bytes_in + r.bytes_out ==
            batch_transfer_bytes(r.num_expanded, r.num_targets, dims.front(), dims.back(), 4));
    }
    measured /= static_cast<double>(records.size());

    const WorkloadSpec w = workload_from_stats(compute_stats(g), dims, cfg.batch_size,
                                               SamplingMode::BatchWise);
    const double analytic = static_cast<double>(est_batchwise_expansion(w));
    CAPTURE(trial);
    CHECK(analytic <= 10.0 * measured);
    CHECK(measured <= 10.0 * analytic);
  }
}

TEST_CASE("json round trip and human units") {
  const CostReport r = est_batchwise_movement(papers_batchwise(), DeviceModel::a100_pcie4());
  CHECK(cost_report_from_json(nlohmann::json::parse(to_json(r).dump())) == r);
  CHECK(to_json(r)["human"]["total_movement"].get<std::string>().find("PB") != std::string::npos);
  CHECK(human_bytes(1.77e9) == "1.77 GB");
  CHECK(human_bytes(512) == "512 B");
}
