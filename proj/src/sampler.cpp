#include "gcnbench/sampler.hpp"

#include <algorithm>
#include <cstring>
#include <iterator>

#include "json.hpp"

#include "gcnbench/error.hpp"

namespace gcnbench {

namespace {

std::vector<VertexId> to_local_rows(std::span<const VertexId> set,
                                    std::span<const VertexId> global_ids) {
  // Both sorted and set ⊆ global_ids: a single merge walk.
  std::vector<VertexId> local;
  local.reserve(set.size());
  std::size_t j = 0;
  for (VertexId v : set) {
    while (global_ids[j] != v) ++j;
    local.push_back(static_cast<VertexId>(j));
  }
  return local;
}

VertexId lookup_local(std::span<const VertexId> global_ids, VertexId global) {
  auto it = std::lower_bound(global_ids.begin(), global_ids.end(), global);
  if (it == global_ids.end() || *it != global) {
    throw Error(ErrorKind::Bounds,
                "vertex " + std::to_string(global) + " is not part of the mini-batch");
  }
  return static_cast<VertexId>(it - global_ids.begin());
}

void scatter_contiguous(const FeatureMatrix& rows, std::size_t first_row, FeatureMatrix& dst) {
  if (rows.num_rows() == 0) return;
  std::memcpy(dst.row(first_row).data(), rows.values().data(),
              rows.values().size() * sizeof(float));
}

void check_run_inputs(const CsrGraph& g, const FeatureMatrix& x, const GcnModel& model,
                      const SamplingConfig& cfg, SamplingMode expected) {
  cfg.validate();
  if (cfg.mode != expected) {
    throw Error(ErrorKind::Config, "sampling config mode is " + std::string(to_string(cfg.mode)));
  }
  model.validate();
  if (x.dim() != model.in_dim()) {
    throw Error(ErrorKind::Shape, "features have dim " + std::to_string(x.dim()) +
                                      ", model expects " + std::to_string(model.in_dim()));
  }
  if (x.num_rows() != g.num_vertices()) {
    throw Error(ErrorKind::Shape, "feature rows do not match vertex count");
  }
}

}  // namespace

std::string_view to_string(SamplingMode m) {
  return m == SamplingMode::BatchWise ? "batchwise" : "layerwise";
}

SamplingMode parse_sampling_mode(std::string_view name) {
  if (name == "batchwise" || name == "batch-wise") return SamplingMode::BatchWise;
  if (name == "layerwise" || name == "layer-wise") return SamplingMode::LayerWise;
  throw Error(ErrorKind::Config, "unknown sampling mode '" + std::string(name) + "'");
}

void SamplingConfig::validate() const {
  if (batch_size == 0) throw Error(ErrorKind::Config, "batch size must be >= 1");
}

std::size_t SamplingConfig::num_batches(std::size_t num_vertices) const {
  validate();
  return (num_vertices + batch_size - 1) / batch_size;
}

std::vector<std::vector<VertexId>> expand_layers(const CsrGraph& g,
                                                 std::span<const VertexId> seeds,
                                                 std::size_t hops) {
  std::vector<std::uint8_t> visited(g.num_vertices(), 0);
  std::vector<VertexId> frontier;
  frontier.reserve(seeds.size());
  for (VertexId s : seeds) {
    if (s >= g.num_vertices()) {
      throw Error(ErrorKind::Bounds, "seed " + std::to_string(s) + " outside " +
                                         std::to_string(g.num_vertices()) + " vertices");
    }
    if (!visited[s]) {
      visited[s] = 1;
      frontier.push_back(s);
    }
  }
  std::sort(frontier.begin(), frontier.end());

  std::vector<std::vector<VertexId>> sets;
  sets.reserve(hops + 1);
  sets.push_back(frontier);
  for (std::size_t k = 1; k <= hops; ++k) {
    std::vector<VertexId> discovered;
    for (VertexId v : frontier) {
      for (VertexId u : g.neighbors(v)) {
        if (!visited[u]) {
          visited[u] = 1;
          discovered.push_back(u);
        }
      }
    }
    std::sort(discovered.begin(), discovered.end());
    std::vector<VertexId> next;
    next.reserve(sets.back().size() + discovered.size());
    std::merge(sets.back().begin(), sets.back().end(), discovered.begin(), discovered.end(),
               std::back_inserter(next));
    sets.push_back(std::move(next));
    frontier = std::move(discovered);
  }
  return sets;
}

std::vector<VertexId> expand_neighborhood(const CsrGraph& g, std::span<const VertexId> seeds,
                                          std::size_t hops) {
  return std::move(expand_layers(g, seeds, hops).back());
}

VertexId MiniBatchPlan::to_local(VertexId global) const {
  return lookup_local(global_ids, global);
}

BatchPlanner::BatchPlanner(const CsrGraph& g, const SamplingConfig& cfg, const GcnModel& model)
    : g_(g),
      cfg_(cfg),
      aggregation_(model.aggregation),
      self_loops_(model.self_loops),
      hops_(cfg.mode == SamplingMode::BatchWise ? model.num_layers() : 1),
      num_batches_(cfg.num_batches(g.num_vertices())),
      degrees_(g.degrees()) {
  if (model.num_layers() == 0) throw Error(ErrorKind::Shape, "model has no layers");
}

MiniBatchPlan BatchPlanner::plan(std::size_t batch_index, std::size_t layer_index) const {
  if (batch_index >= num_batches_) {
    throw Error(ErrorKind::Bounds, "batch " + std::to_string(batch_index) + " of " +
                                       std::to_string(num_batches_));
  }
  MiniBatchPlan p;
  p.mode = cfg_.mode;
  p.batch_index = batch_index;
  p.layer_index = layer_index;

  const std::size_t first = batch_index * cfg_.batch_size;
  const std::size_t last = std::min(first + cfg_.batch_size, g_.num_vertices());
  p.targets.resize(last - first);
  for (std::size_t i = 0; i < p.targets.size(); ++i) {
    p.targets[i] = static_cast<VertexId>(first + i);
  }

  p.layer_vertex_sets = expand_layers(g_, p.targets, hops_);
  p.global_ids = p.layer_vertex_sets.back();
  for (const auto& set : p.layer_vertex_sets) {
    p.layer_local_rows.push_back(to_local_rows(set, p.global_ids));
  }

  // Edges only for rows that get aggregated: everything inside the outermost
  // shell, whose neighbors are all present by construction.
  const std::size_t n = p.global_ids.size();
  std::vector<std::uint8_t> aggregated(n, 0);
  for (VertexId r : p.layer_local_rows[hops_ - 1]) aggregated[r] = 1;

  std::vector<EdgeIndex> offsets(n + 1, 0);
  std::vector<VertexId> cols;
  for (std::size_t i = 0; i < n; ++i) {
    if (aggregated[i]) {
      for (VertexId u : g_.neighbors(p.global_ids[i])) {
        cols.push_back(lookup_local(p.global_ids, u));
      }
    }
    offsets[i + 1] = cols.size();
  }
  p.subgraph = CsrGraph::from_parts(std::move(offsets), std::move(cols));

  std::vector<std::uint32_t> local_degrees(n);
  for (std::size_t i = 0; i < n; ++i) local_degrees[i] = degrees_[p.global_ids[i]];
  p.coeffs = build_norm_coefficients(p.subgraph, aggregation_, local_degrees, self_loops_);
  return p;
}

std::vector<MiniBatchPlan> plan_batchwise(const CsrGraph& g, const SamplingConfig& cfg,
                                          const GcnModel& model) {
  if (cfg.mode != SamplingMode::BatchWise) {
    throw Error(ErrorKind::Config, "plan_batchwise needs a batch-wise config");
  }
  BatchPlanner planner(g, cfg, model);
  std::vector<MiniBatchPlan> plans;
  plans.reserve(planner.num_batches());
  for (std::size_t b = 0; b < planner.num_batches(); ++b) plans.push_back(planner.plan(b));
  return plans;
}

std::vector<MiniBatchPlan> plan_layerwise(const CsrGraph& g, const SamplingConfig& cfg,
                                          std::size_t layer_index, const GcnModel& model) {
  if (cfg.mode != SamplingMode::LayerWise) {
    throw Error(ErrorKind::Config, "plan_layerwise needs a layer-wise config");
  }
  if (layer_index >= model.num_layers()) {
    throw Error(ErrorKind::Bounds, "layer index " + std::to_string(layer_index) +
                                       " outside a " + std::to_string(model.num_layers()) +
                                       "-layer model");
  }
  BatchPlanner planner(g, cfg, model);
  std::vector<MiniBatchPlan> plans;
  plans.reserve(planner.num_batches());
  for (std::size_t b = 0; b < planner.num_batches(); ++b) {
    plans.push_back(planner.plan(b, layer_index));
  }
  return plans;
}

std::string to_json_line(const TraceRecord& r) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(r.mode);
  j["layer"] = r.layer;
  j["batch_index"] = r.batch_index;
  j["targets"] = r.num_targets;
  j["expanded"] = r.num_expanded;
  j["subgraph_edges"] = r.subgraph_edges;
  j["bytes_in"] = r.bytes_in;
  j["bytes_out"] = r.bytes_out;
  return j.dump();
}

FeatureMatrix gather_rows(const FeatureMatrix& x, std::span<const VertexId> rows) {
  FeatureMatrix out(rows.size(), x.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

FeatureMatrix execute_batch(const MiniBatchPlan& plan, const FeatureMatrix& x,
                            const GcnModel& model, Profiler* profiler) {
  const std::size_t depth = model.num_layers();
  if (plan.layer_vertex_sets.size() != depth + 1) {
    throw Error(ErrorKind::Internal, "plan depth does not match model depth");
  }
  FeatureMatrix h;
  {
    ScopedTimer t(profiler, KernelCategory::Sampling);
    h = gather_rows(x, plan.global_ids);
  }
  // Layer l computes the set D-1-l from its one-hop-larger superset.
  for (std::size_t l = 0; l < depth; ++l) {
    const bool last = l + 1 == depth;
    const auto& active = plan.layer_local_rows[depth - 1 - l];
    FeatureMatrix out = layer_forward(plan.subgraph, h, plan.coeffs, active, model.layers[l],
                                      !last, l, profiler);
    if (last) return out;
    FeatureMatrix next(plan.expanded_size(), out.dim());
    for (std::size_t i = 0; i < active.size(); ++i) {
      auto src = out.row(i);
      std::copy(src.begin(), src.end(), next.row(active[i]).begin());
    }
    h = std::move(next);
  }
  return h;
}

FeatureMatrix run_batchwise(const CsrGraph& g, const FeatureMatrix& x, const GcnModel& model,
                            const SamplingConfig& cfg, RunContext* ctx) {
  check_run_inputs(g, x, model, cfg, SamplingMode::BatchWise);
  Profiler* profiler = ctx != nullptr ? ctx->profiler : nullptr;

  BatchPlanner planner(g, cfg, model);
  FeatureMatrix result(g.num_vertices(), model.out_dim());
  for (std::size_t b = 0; b < planner.num_batches(); ++b) {
    MiniBatchPlan plan;
    {
      ScopedTimer t(profiler, KernelCategory::Sampling);
      plan = planner.plan(b);
    }
    FeatureMatrix out = execute_batch(plan, x, model, profiler);
    scatter_contiguous(out, plan.targets.front(), result);

    if (ctx != nullptr && ctx->on_batch) {
      ctx->on_batch(TraceRecord{
          .mode = SamplingMode::BatchWise,
          .layer = 0,
          .batch_index = b,
          .num_targets = plan.targets.size(),
          .num_expanded = plan.expanded_size(),
          .subgraph_edges = plan.subgraph.num_edges(),
          .bytes_in = std::uint64_t{plan.expanded_size()} * model.in_dim() * sizeof(float),
          .bytes_out = std::uint64_t{plan.targets.size()} * model.out_dim() * sizeof(float),
      });
    }
  }
  return result;
}

FeatureMatrix run_layerwise(const CsrGraph& g, const FeatureMatrix& x, const GcnModel& model,
                            const SamplingConfig& cfg, RunContext* ctx) {
  check_run_inputs(g, x, model, cfg, SamplingMode::LayerWise);
  Profiler* profiler = ctx != nullptr ? ctx->profiler : nullptr;

  BatchPlanner planner(g, cfg, model);
  FeatureMatrix checkpoint = x;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const auto& w = model.layers[l];
    const bool last = l + 1 == model.num_layers();
    FeatureMatrix next(g.num_vertices(), w.out_dim);
    for (std::size_t b = 0; b < planner.num_batches(); ++b) {
      MiniBatchPlan plan;
      FeatureMatrix local;
      {
        ScopedTimer t(profiler, KernelCategory::Sampling);
        plan = planner.plan(b, l);
        local = gather_rows(checkpoint, plan.global_ids);
      }
      FeatureMatrix out = layer_forward(plan.subgraph, local, plan.coeffs,
                                        plan.layer_local_rows[0], w, !last, l, profiler);
      scatter_contiguous(out, plan.targets.front(), next);

      if (ctx != nullptr && ctx->on_batch) {
        ctx->on_batch(TraceRecord{
            .mode = SamplingMode::LayerWise,
            .layer = l,
            .batch_index = b,
            .num_targets = plan.targets.size(),
            .num_expanded = plan.expanded_size(),
            .subgraph_edges = plan.subgraph.num_edges(),
            .bytes_in = std::uint64_t{plan.expanded_size()} * w.in_dim * sizeof(float),
            .bytes_out = std::uint64_t{plan.targets.size()} * w.out_dim * sizeof(float),
        });
      }
    }
    if (next.num_rows() != g.num_vertices() || next.dim() != w.out_dim) {
      throw Error(ErrorKind::Internal, "checkpoint shape mismatch after layer " +
                                           std::to_string(l));
    }
    checkpoint = std::move(next);
    if (ctx != nullptr) {
      ++ctx->checkpoints_written;
      if (ctx->keep_checkpoints) ctx->checkpoints.push_back({l, checkpoint});
    }
  }
  return checkpoint;
}

}  // namespace gcnbench
