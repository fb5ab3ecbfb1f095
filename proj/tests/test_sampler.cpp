#include <random>
#include <set>

#include "doctest.h"
#include "gcnbench/cost_model.hpp"
#include "gcnbench/error.hpp"
#include "gcnbench/sampler.hpp"
#include "oracles.hpp"

using namespace gcnbench;

namespace {

std::set<VertexId> as_set(const std::vector<VertexId>& v) { return {v.begin(), v.end()}; }

constexpr Aggregation kModes[] = {Aggregation::Sum, Aggregation::Mean, Aggregation::SymNorm};

GcnModel model_with_layers(std::size_t layers, std::size_t in, std::uint64_t seed,
                           Aggregation agg = Aggregation::Sum, bool self_loops = false) {
  std::vector<std::size_t> dims{in};
  for (std::size_t l = 0; l < layers; ++l) dims.push_back(l + 1 == layers ? 3 : 6);
  return make_model(dims, seed, agg, self_loops);
}

}  // namespace

TEST_CASE("expand: path, zero hops, complete graph") {
  const CsrGraph path = parse_edge_list("0 1\n1 2\n2 3\n");
  const std::vector<VertexId> seed0{0};
  CHECK(expand_neighborhood(path, seed0, 2) == std::vector<VertexId>{0, 1, 2});
  CHECK(as_set(expand_neighborhood(path, seed0, 2)) == oracle::reachable(path, {0}, 2));

  const CsrGraph r = gen_random_graph(GraphModel::Rmat, 100, 600, 1);
  const std::vector<VertexId> seeds{42, 7, 13};
  CHECK(expand_neighborhood(r, seeds, 0) == std::vector<VertexId>{7, 13, 42});

  const CsrGraph complete = gen_random_graph(GraphModel::ErdosRenyi, 10, 100, 1);
  const std::vector<VertexId> three{3};
  CHECK(expand_neighborhood(complete, three, 1).size() == 10);

  CHECK_THROWS_AS(expand_neighborhood(path, std::vector<VertexId>{9}, 1), Error);
}

TEST_CASE("expand: matches brute-force reachability, sets nested and capped") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t v = 2 + rng() % 150;
    const CsrGraph g = gen_random_graph(trial % 2 ? GraphModel::Rmat : GraphModel::ErdosRenyi, v,
                                        rng() % std::min<std::size_t>(v * 3, v * v), rng());
    std::vector<VertexId> seeds;
    for (int i = 0; i < 3; ++i) seeds.push_back(static_cast<VertexId>(rng() % v));
    const auto sets = expand_layers(g, seeds, 4);
    REQUIRE(sets.size() == 5);
    for (std::size_t k = 0; k < sets.size(); ++k) {
      CHECK(as_set(sets[k]) == oracle::reachable(g, seeds, k));
      CHECK(std::is_sorted(sets[k].begin(), sets[k].end()));
      CHECK(sets[k].size() <= v);
      if (k > 0) {
        CHECK(sets[k - 1].size() <= sets[k].size());
        CHECK(std::includes(sets[k].begin(), sets[k].end(), sets[k - 1].begin(), sets[k - 1].end()));
      }
    }
  }
}

TEST_CASE("plans: partition arithmetic") {
  const CsrGraph g = gen_random_graph(GraphModel::ErdosRenyi, 10, 20, 2);
  const GcnModel m1 = model_with_layers(1, 4, 1);
  const auto plans = plan_batchwise(g, {SamplingMode::BatchWise, 4}, m1);
  REQUIRE(plans.size() == 3);
  CHECK(plans[0].targets == std::vector<VertexId>{0, 1, 2, 3});
  CHECK(plans[1].targets == std::vector<VertexId>{4, 5, 6, 7});
  CHECK(plans[2].targets == std::vector<VertexId>{8, 9});

  const SamplingConfig papers{SamplingMode::BatchWise, 64};
  CHECK(papers.num_batches(111'059'956) == 1'735'312);
  CHECK(num_batches(111'059'956, 64) == 1'735'312);

  CHECK_THROWS_AS((SamplingConfig{SamplingMode::BatchWise, 0}.validate()), Error);
}

TEST_CASE("plans: star graph two hops") {
  std::string text;
  for (int leaf = 1; leaf <= 9; ++leaf) text += std::to_string(leaf) + " 0\n";
  const CsrGraph star = parse_edge_list(text);
  const std::vector<VertexId> targets{1};
  CHECK(expand_neighborhood(star, targets, 2) == std::vector<VertexId>{0, 1});

  const BatchPlanner planner(star, {SamplingMode::BatchWise, 1}, model_with_layers(2, 4, 1));
  const MiniBatchPlan p = planner.plan(1);
  CHECK(p.targets == std::vector<VertexId>{1});
  CHECK(p.global_ids == std::vector<VertexId>{0, 1});
  CHECK(p.to_local(1) == 1);
  CHECK_THROWS_AS(p.to_local(5), Error);
}

TEST_CASE("plans: layer-wise occurrences, isolated target, partition") {
  const CsrGraph g = gen_random_graph(GraphModel::ErdosRenyi, 10, 30, 3);
  const GcnModel m3 = model_with_layers(3, 4, 1);
  const SamplingConfig cfg{SamplingMode::LayerWise, 5};
  std::size_t occurrences = 0;
  for (std::size_t layer = 0; layer < 3; ++layer) {
    occurrences += plan_layerwise(g, cfg, layer, m3).size();
  }
  CHECK(occurrences == 6);

  RunContext ctx;
  std::size_t traced = 0;
  ctx.on_batch = [&](const TraceRecord&) { ++traced; };
  run_layerwise(g, gen_features(10, 4, 1), m3, cfg, &ctx);
  CHECK(traced == 6);

  const CsrGraph isolated = parse_edge_list("0 1\n", 3);
  const auto iso_plans = plan_layerwise(isolated, {SamplingMode::LayerWise, 1}, 0, m3);
  CHECK(iso_plans[2].global_ids == std::vector<VertexId>{2});

  const CsrGraph big = gen_random_graph(GraphModel::Rmat, 1000, 5000, 5);
  const auto parts = plan_layerwise(big, {SamplingMode::LayerWise, 250}, 0, m3);
  REQUIRE(parts.size() == 4);
  std::set<VertexId> seen;
  std::size_t total = 0;
  for (const auto& p : parts) {
    total += p.targets.size();
    seen.insert(p.targets.begin(), p.targets.end());
  }
  CHECK(total == 1000);
  CHECK(seen.size() == 1000);
}

TEST_CASE("plans: subgraph edges only on aggregated rows and match the graph") {
  const CsrGraph g = gen_random_graph(GraphModel::Rmat, 300, 2000, 6);
  const GcnModel m = model_with_layers(2, 4, 1, Aggregation::Mean);
  for (const auto& p : plan_batchwise(g, {SamplingMode::BatchWise, 40}, m)) {
    const auto& inner = p.layer_vertex_sets[p.layer_vertex_sets.size() - 2];
    for (VertexId local = 0; local < p.expanded_size(); ++local) {
      const VertexId global = p.global_ids[local];
      const bool aggregated = std::binary_search(inner.begin(), inner.end(), global);
      std::vector<VertexId> mapped;
      for (VertexId u : p.subgraph.neighbors(local)) mapped.push_back(p.global_ids[u]);
      if (aggregated) {
        const auto full = g.neighbors(global);
        CHECK(mapped == std::vector<VertexId>(full.begin(), full.end()));
      } else {
        CHECK(mapped.empty());
      }
    }
  }
}

TEST_CASE("run_batchwise: matches full-graph inference") {
  SUBCASE("single batch") {
    const CsrGraph g = gen_random_graph(GraphModel::ErdosRenyi, 80, 400, 1);
    const FeatureMatrix x = gen_features(80, 5, 2);
    const GcnModel m = model_with_layers(2, 5, 3, Aggregation::SymNorm, true);
    CHECK(run_batchwise(g, x, m, {SamplingMode::BatchWise, 80}) == full_graph_inference(g, x, m));
  }
  SUBCASE("V=500, b=37, D=3") {
    const CsrGraph g = gen_random_graph(GraphModel::ErdosRenyi, 500, 2500, 11);
    const FeatureMatrix x = gen_features(500, 8, 12);
    for (Aggregation agg : kModes) {
      const GcnModel m = model_with_layers(3, 8, 13, agg);
      CHECK(oracle::max_abs_diff(run_batchwise(g, x, m, {SamplingMode::BatchWise, 37}),
                                 full_graph_inference(g, x, m)) <= 1e-5);
    }
  }
  SUBCASE("edgeless graph") {
    const CsrGraph g = CsrGraph::from_edges(40, {});
    const FeatureMatrix x = gen_features(40, 4, 3);
    const GcnModel m = model_with_layers(2, 4, 4, Aggregation::Mean, true);
    CHECK(oracle::max_abs_diff(run_batchwise(g, x, m, {SamplingMode::BatchWise, 7}),
                               oracle::gcn_reference(g, x, m)) <= 1e-5);
  }
}

TEST_CASE("run_layerwise: matches full-graph inference and writes checkpoints") {
  SUBCASE("single layer, one batch") {
    const CsrGraph g = gen_random_graph(GraphModel::Rmat, 64, 300, 1);
    const FeatureMatrix x = gen_features(64, 5, 2);
    const GcnModel m = model_with_layers(1, 5, 3);
    CHECK(run_layerwise(g, x, m, {SamplingMode::LayerWise, 64}) == full_graph_inference(g, x, m));
  }
  SUBCASE("V=500, b=64, D=3") {
    const CsrGraph g = gen_random_graph(GraphModel::Rmat, 500, 3000, 21);
    const FeatureMatrix x = gen_features(500, 8, 22);
    for (Aggregation agg : kModes) {
      const GcnModel m = model_with_layers(3, 8, 23, agg, agg == Aggregation::SymNorm);
      RunContext ctx;
      ctx.keep_checkpoints = true;
      const FeatureMatrix out = run_layerwise(g, x, m, {SamplingMode::LayerWise, 64}, &ctx);
      CHECK(oracle::max_abs_diff(out, full_graph_inference(g, x, m)) <= 1e-5);
      CHECK(ctx.checkpoints_written == 3);
      REQUIRE(ctx.checkpoints.size() == 3);
      CHECK(ctx.checkpoints.back().features == out);
    }
  }
}

TEST_CASE("property: exactness over random configurations") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t v = 1 + rng() % 400;
    const CsrGraph g = gen_random_graph(trial % 2 ? GraphModel::Rmat : GraphModel::ErdosRenyi, v,
                                        rng() % std::min<std::size_t>(v * 8, v * v), rng());
    const std::size_t layers = 1 + rng() % 3;
    const GcnModel m = model_with_layers(layers, 1 + rng() % 9, rng(), kModes[rng() % 3], rng() % 2);
    const FeatureMatrix x = gen_features(v, m.in_dim(), rng());
    const std::size_t b = 1 + rng() % v;
    const FeatureMatrix want = full_graph_inference(g, x, m);
    CAPTURE(trial);
    CHECK(oracle::max_abs_diff(run_batchwise(g, x, m, {SamplingMode::BatchWise, b}), want) <= 1e-5);
    CHECK(oracle::max_abs_diff(run_layerwise(g, x, m, {SamplingMode::LayerWise, b}), want) <= 1e-5);
  }
}

TEST_CASE("property: batch order does not matter") {
  const CsrGraph g = gen_random_graph(GraphModel::Rmat, 300, 2000, 31);
  const FeatureMatrix x = gen_features(300, 6, 32);
  const GcnModel m = model_with_layers(2, 6, 33, Aggregation::SymNorm, true);
  const SamplingConfig cfg{SamplingMode::BatchWise, 23};
  const FeatureMatrix forward = run_batchwise(g, x, m, cfg);

  const BatchPlanner planner(g, cfg, m);
  FeatureMatrix reversed(300, forward.dim());
  for (std::size_t b = planner.num_batches(); b-- > 0;) {
    const MiniBatchPlan p = planner.plan(b);
    const FeatureMatrix rows = execute_batch(p, x, m);
    for (std::size_t i = 0; i < p.targets.size(); ++i) {
      std::copy(rows.row(i).begin(), rows.row(i).end(), reversed.row(p.targets[i]).begin());
    }
  }
  CHECK(reversed == forward);
}

TEST_CASE("trace records account for bytes moved") {
  const CsrGraph g = gen_random_graph(GraphModel::ErdosRenyi, 120, 600, 41);
  const GcnModel m = model_with_layers(2, 5, 42);
  std::vector<TraceRecord> records;
  RunContext ctx;
  ctx.on_batch = [&](const TraceRecord& r) { records.push_back(r); };
  run_batchwise(g, gen_features(120, 5, 43), m, {SamplingMode::BatchWise, 30}, &ctx);
  REQUIRE(records.size() == 4);
  for (const auto& r : records) {
    CHECK(r.bytes_in == r.num_expanded * 5 * 4);
    CHECK(r.bytes_out == r.num_targets * 3 * 4);
    CHECK(r.num_expanded >= r.num_targets);
  }
  const auto line = to_json_line(records[0]);
  CHECK(line.find("\"mode\":\"batchwise\"") != std::string::npos);
  CHECK(line.find('\n') == std::string::npos);
}
