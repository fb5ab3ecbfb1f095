#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcnbench/graph.hpp"
#include "gcnbench/sampler.hpp"
#include "json.hpp"

// Analytical CPU-to-accelerator offload model. All byte quantities are exact
// 64-bit integers; any product that would overflow raises a Capacity error.
namespace gcnbench {

struct DeviceModel {
  std::uint64_t memory_capacity = 0;  // bytes
  double link_bandwidth = 0.0;        // bytes / second
  std::uint64_t element_size = 4;     // bytes per feature / weight value

  void validate() const;

  /// 40 GB device behind a 32 GB/s PCIe 4.0 link.
  static DeviceModel a100_pcie4();
};

struct WorkloadSpec {
  std::uint64_t num_vertices = 0;
  double avg_degree = 0.0;
  std::vector<std::size_t> layer_dims;  // [d_in, d_h1, ..., d_out]
  std::uint64_t batch_size = 1;
  SamplingMode mode = SamplingMode::BatchWise;
  /// Measured or externally known per-batch expansion; replaces the estimate.
  std::optional<std::uint64_t> expanded_override;

  std::size_t num_layers() const { return layer_dims.empty() ? 0 : layer_dims.size() - 1; }
  void validate() const;
};

WorkloadSpec workload_from_stats(const GraphStats& stats, std::span<const std::size_t> dims,
                                 std::uint64_t batch_size, SamplingMode mode);

struct CostReport {
  std::string mode;  // "batchwise", "layerwise" or "full"
  std::uint64_t expanded_vertices_per_batch = 0;
  double uncapped_expansion = 0.0;
  std::uint64_t num_batches = 0;
  std::uint64_t bytes_per_batch = 0;
  std::uint64_t total_movement = 0;
  std::uint64_t peak_device_footprint = 0;
  std::uint64_t weight_bytes = 0;
  std::uint64_t adjacency_bytes = 0;
  double est_transfer_seconds = 0.0;

  friend bool operator==(const CostReport&, const CostReport&) = default;
};

struct DeviceFootprint {
  std::uint64_t activation_bytes = 0;
  std::uint64_t weight_bytes = 0;
  std::uint64_t total() const { return activation_bytes + weight_bytes; }
};

std::uint64_t num_batches(std::uint64_t num_vertices, std::uint64_t batch_size);

/// b * avg_degree^D, before capping.
double batchwise_expansion_uncapped(const WorkloadSpec& w);
/// min(V, ceil(b * avg_degree^D)), or the override.
std::uint64_t est_batchwise_expansion(const WorkloadSpec& w);
/// min(V, ceil(b * avg_degree)), or the override.
std::uint64_t est_layerwise_expansion(const WorkloadSpec& w);

/// Feature upload for the expanded set plus output download for the targets.
std::uint64_t batch_transfer_bytes(std::uint64_t expanded, std::uint64_t targets,
                                   std::uint64_t in_dim, std::uint64_t out_dim,
                                   std::uint64_t element_size);

/// Sum of d_l * d_{l+1} * element_size.
std::uint64_t model_weight_bytes(std::span<const std::size_t> dims, std::uint64_t element_size);

/// Row offsets (8 bytes each) plus column indices (4 bytes each).
std::uint64_t adjacency_bytes(std::uint64_t num_vertices, std::uint64_t num_edges);

CostReport est_batchwise_movement(const WorkloadSpec& w, const DeviceModel& dev);
DeviceFootprint est_layerwise_footprint(const WorkloadSpec& w, const DeviceModel& dev);
CostReport est_layerwise_movement(const WorkloadSpec& w, const DeviceModel& dev);

/// Host memory held between layers: V * (d_l + d_{l+1}) for the widest
/// layer when layer-wise, V * d_in when batch-wise.
std::uint64_t est_host_footprint(const WorkloadSpec& w, SamplingMode mode,
                                 std::uint64_t element_size = 4);

/// Peak device footprint for `w` at its batch size under `mode`.
std::uint64_t device_footprint(const WorkloadSpec& w, const DeviceModel& dev, SamplingMode mode);

/// Largest b whose footprint fits `dev.memory_capacity`; `w.batch_size` and
/// `w.expanded_override` are ignored. Throws Infeasible when b = 1 does not fit.
std::uint64_t max_batch_size(const WorkloadSpec& w, const DeviceModel& dev, SamplingMode mode);

/// Adjacency plus input and output features in a single offload. Throws
/// Capacity when the whole graph does not fit the device.
CostReport est_fullgraph_offload(const GraphStats& stats, std::span<const std::size_t> dims,
                                 const DeviceModel& dev);
std::uint64_t fullgraph_footprint(const GraphStats& stats, std::span<const std::size_t> dims,
                                  std::uint64_t element_size = 4);

/// "1.77 GB", "3.07 PB": decimal units, three significant digits.
std::string human_bytes(double bytes);
std::string human_seconds(double seconds);

nlohmann::ordered_json to_json(const CostReport& r);
CostReport cost_report_from_json(const nlohmann::json& j);

}  // namespace gcnbench
