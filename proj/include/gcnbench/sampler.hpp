#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcnbench/gcn.hpp"
#include "gcnbench/graph.hpp"
#include "gcnbench/profiler.hpp"

namespace gcnbench {

enum class SamplingMode { BatchWise, LayerWise };

std::string_view to_string(SamplingMode m);
SamplingMode parse_sampling_mode(std::string_view name);

/// Batches are contiguous ascending-id ranges of `batch_size` targets.
struct SamplingConfig {
  SamplingMode mode = SamplingMode::BatchWise;
  std::size_t batch_size = 1;

  void validate() const;
  std::size_t num_batches(std::size_t num_vertices) const;
};

/// Sorted set of vertices reachable from `seeds` within `hops` out-edges.
std::vector<VertexId> expand_neighborhood(const CsrGraph& g, std::span<const VertexId> seeds,
                                          std::size_t hops);

/// The nested sets S_0 = seeds, S_1, ..., S_hops, each sorted ascending.
std::vector<std::vector<VertexId>> expand_layers(const CsrGraph& g,
                                                 std::span<const VertexId> seeds,
                                                 std::size_t hops);

/// One mini-batch: its target vertices, their nested neighborhoods, and the
/// subgraph they need, relabeled to local ids in ascending global order.
///
/// Only rows that are aggregated (every set but the outermost) carry edges
/// in `subgraph`; their neighborhoods are complete. Coefficients use global
/// degrees so the aggregation matches the whole-graph result exactly.
struct MiniBatchPlan {
  SamplingMode mode = SamplingMode::BatchWise;
  std::size_t batch_index = 0;
  std::size_t layer_index = 0;

  std::vector<VertexId> targets;
  std::vector<std::vector<VertexId>> layer_vertex_sets;  // global ids
  std::vector<std::vector<VertexId>> layer_local_rows;   // same sets, local ids
  std::vector<VertexId> global_ids;                      // local id -> global id

  CsrGraph subgraph;
  NormCoefficients coeffs;

  std::size_t expanded_size() const { return global_ids.size(); }
  /// Throws Bounds if `global` is not part of the plan.
  VertexId to_local(VertexId global) const;
};

/// Builds plans on demand so a run never holds more than one subgraph.
class BatchPlanner {
 public:
  BatchPlanner(const CsrGraph& g, const SamplingConfig& cfg, const GcnModel& model);

  std::size_t num_batches() const { return num_batches_; }
  std::size_t hops() const { return hops_; }
  MiniBatchPlan plan(std::size_t batch_index, std::size_t layer_index = 0) const;

 private:
  const CsrGraph& g_;
  SamplingConfig cfg_;
  Aggregation aggregation_;
  bool self_loops_;
  std::size_t hops_;
  std::size_t num_batches_;
  std::vector<std::uint32_t> degrees_;
};

std::vector<MiniBatchPlan> plan_batchwise(const CsrGraph& g, const SamplingConfig& cfg,
                                          const GcnModel& model);
std::vector<MiniBatchPlan> plan_layerwise(const CsrGraph& g, const SamplingConfig& cfg,
                                          std::size_t layer_index, const GcnModel& model);

struct TraceRecord {
  SamplingMode mode = SamplingMode::BatchWise;
  std::size_t layer = 0;
  std::size_t batch_index = 0;
  std::size_t num_targets = 0;
  std::size_t num_expanded = 0;
  std::size_t subgraph_edges = 0;
  std::uint64_t bytes_in = 0;
  std::uint64_t bytes_out = 0;
};

std::string to_json_line(const TraceRecord& r);

struct LayerCheckpoint {
  std::size_t layer_index = 0;
  FeatureMatrix features;
};

/// Optional instrumentation for a sampled run.
struct RunContext {
  Profiler* profiler = nullptr;
  std::function<void(const TraceRecord&)> on_batch;
  bool keep_checkpoints = false;
  std::vector<LayerCheckpoint> checkpoints;
  std::size_t checkpoints_written = 0;
};

/// Gathers `rows` of `x` into a compact matrix.
FeatureMatrix gather_rows(const FeatureMatrix& x, std::span<const VertexId> rows);

/// Runs all layers of `model` for one batch-wise plan. Row i of the result is
/// the output for plan.targets[i].
FeatureMatrix execute_batch(const MiniBatchPlan& plan, const FeatureMatrix& x,
                            const GcnModel& model, Profiler* profiler = nullptr);

FeatureMatrix run_batchwise(const CsrGraph& g, const FeatureMatrix& x, const GcnModel& model,
                            const SamplingConfig& cfg, RunContext* ctx = nullptr);

FeatureMatrix run_layerwise(const CsrGraph& g, const FeatureMatrix& x, const GcnModel& model,
                            const SamplingConfig& cfg, RunContext* ctx = nullptr);

}  // namespace gcnbench
