#include "gcnbench/cost_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "gcnbench/error.hpp"

namespace gcnbench {

namespace {

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw Error(ErrorKind::Capacity, "byte count overflows 64 bits");
  }
  return r;
}

std::uint64_t add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) {
    throw Error(ErrorKind::Capacity, "byte count overflows 64 bits");
  }
  return r;
}

std::uint64_t widest_layer(std::span<const std::size_t> dims) {
  std::uint64_t widest = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    widest = std::max<std::uint64_t>(widest, dims[l] + dims[l + 1]);
  }
  return widest;
}

std::uint64_t capped_ceil(long double estimate, std::uint64_t cap) {
  if (!(estimate < static_cast<long double>(cap))) return cap;
  return static_cast<std::uint64_t>(std::ceil(estimate));
}

void check_dims(std::span<const std::size_t> dims) {
  if (dims.size() < 2) throw Error(ErrorKind::Config, "need at least input and output dims");
  for (auto d : dims) {
    if (d == 0) throw Error(ErrorKind::Config, "layer dims must be >= 1");
  }
}

}  // namespace

void DeviceModel::validate() const {
  if (memory_capacity == 0 || !(link_bandwidth > 0.0) || !std::isfinite(link_bandwidth) ||
      element_size == 0) {
    throw Error(ErrorKind::Config, "device capacity, bandwidth and element size must be > 0");
  }
}

DeviceModel DeviceModel::a100_pcie4() {
  return DeviceModel{.memory_capacity = 40'000'000'000ULL, .link_bandwidth = 32e9,
                     .element_size = 4};
}

void WorkloadSpec::validate() const {
  check_dims(layer_dims);
  if (num_vertices == 0) throw Error(ErrorKind::Config, "workload needs at least one vertex");
  if (!(avg_degree > 0.0) || !std::isfinite(avg_degree)) {
    throw Error(ErrorKind::Config, "average degree must be > 0");
  }
  if (batch_size == 0) throw Error(ErrorKind::Config, "batch size must be >= 1");
}

WorkloadSpec workload_from_stats(const GraphStats& stats, std::span<const std::size_t> dims,
                                 std::uint64_t batch_size, SamplingMode mode) {
  WorkloadSpec w;
  w.num_vertices = stats.num_vertices;
  w.avg_degree = stats.avg_degree;
  w.layer_dims.assign(dims.begin(), dims.end());
  w.batch_size = batch_size;
  w.mode = mode;
  return w;
}

std::uint64_t num_batches(std::uint64_t num_vertices, std::uint64_t batch_size) {
  if (batch_size == 0) throw Error(ErrorKind::Config, "batch size must be >= 1");
  return num_vertices / batch_size + (num_vertices % batch_size != 0 ? 1 : 0);
}

double batchwise_expansion_uncapped(const WorkloadSpec& w) {
  return static_cast<double>(static_cast<long double>(w.batch_size) *
                             std::pow(static_cast<long double>(w.avg_degree),
                                      static_cast<long double>(w.num_layers())));
}

std::uint64_t est_batchwise_expansion(const WorkloadSpec& w) {
  w.validate();
  if (w.expanded_override) return std::min(*w.expanded_override, w.num_vertices);
  const long double estimate =
      static_cast<long double>(w.batch_size) *
      std::pow(static_cast<long double>(w.avg_degree), static_cast<long double>(w.num_layers()));
  return capped_ceil(estimate, w.num_vertices);
}

std::uint64_t est_layerwise_expansion(const WorkloadSpec& w) {
  w.validate();
  if (w.expanded_override) return std::min(*w.expanded_override, w.num_vertices);
  const long double estimate =
      static_cast<long double>(w.batch_size) * static_cast<long double>(w.avg_degree);
  return capped_ceil(estimate, w.num_vertices);
}

std::uint64_t batch_transfer_bytes(std::uint64_t expanded, std::uint64_t targets,
                                   std::uint64_t in_dim, std::uint64_t out_dim,
                                   std::uint64_t element_size) {
  return add(mul(mul(expanded, in_dim), element_size), mul(mul(targets, out_dim), element_size));
}

std::uint64_t model_weight_bytes(std::span<const std::size_t> dims, std::uint64_t element_size) {
  std::uint64_t bytes = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    bytes = add(bytes, mul(mul(dims[l], dims[l + 1]), element_size));
  }
  return bytes;
}

std::uint64_t adjacency_bytes(std::uint64_t num_vertices, std::uint64_t num_edges) {
  return add(mul(num_vertices + 1, sizeof(EdgeIndex)), mul(num_edges, sizeof(VertexId)));
}

CostReport est_batchwise_movement(const WorkloadSpec& w, const DeviceModel& dev) {
  w.validate();
  dev.validate();
  const std::uint64_t es = dev.element_size;
  CostReport r;
  r.mode = "batchwise";
  r.expanded_vertices_per_batch = est_batchwise_expansion(w);
  r.uncapped_expansion = batchwise_expansion_uncapped(w);
  r.num_batches = num_batches(w.num_vertices, w.batch_size);
  const std::uint64_t targets = std::min(w.batch_size, w.num_vertices);
  r.bytes_per_batch = batch_transfer_bytes(r.expanded_vertices_per_batch, targets,
                                           w.layer_dims.front(), w.layer_dims.back(), es);
  r.total_movement = mul(r.bytes_per_batch, r.num_batches);
  r.weight_bytes = model_weight_bytes(w.layer_dims, es);
  r.peak_device_footprint =
      add(mul(mul(r.expanded_vertices_per_batch, widest_layer(w.layer_dims)), es),
          r.weight_bytes);
  r.est_transfer_seconds = static_cast<double>(r.total_movement) / dev.link_bandwidth;
  return r;
}

DeviceFootprint est_layerwise_footprint(const WorkloadSpec& w, const DeviceModel& dev) {
  w.validate();
  dev.validate();
  DeviceFootprint f;
  f.activation_bytes =
      mul(mul(est_layerwise_expansion(w), widest_layer(w.layer_dims)), dev.element_size);
  f.weight_bytes = model_weight_bytes(w.layer_dims, dev.element_size);
  return f;
}

CostReport est_layerwise_movement(const WorkloadSpec& w, const DeviceModel& dev) {
  w.validate();
  dev.validate();
  const std::uint64_t es = dev.element_size;
  CostReport r;
  r.mode = "layerwise";
  r.expanded_vertices_per_batch = est_layerwise_expansion(w);
  r.uncapped_expansion = static_cast<double>(w.batch_size) * w.avg_degree;
  r.num_batches = num_batches(w.num_vertices, w.batch_size);
  const std::uint64_t targets = std::min(w.batch_size, w.num_vertices);
  for (std::size_t l = 0; l + 1 < w.layer_dims.size(); ++l) {
    const std::uint64_t per_batch = batch_transfer_bytes(
        r.expanded_vertices_per_batch, targets, w.layer_dims[l], w.layer_dims[l + 1], es);
    r.bytes_per_batch = std::max(r.bytes_per_batch, per_batch);
    r.total_movement = add(r.total_movement, mul(per_batch, r.num_batches));
  }
  const DeviceFootprint f = est_layerwise_footprint(w, dev);
  r.weight_bytes = f.weight_bytes;
  r.peak_device_footprint = f.total();
  r.est_transfer_seconds = static_cast<double>(r.total_movement) / dev.link_bandwidth;
  return r;
}

std::uint64_t est_host_footprint(const WorkloadSpec& w, SamplingMode mode,
                                 std::uint64_t element_size) {
  check_dims(w.layer_dims);
  if (element_size == 0) throw Error(ErrorKind::Config, "element size must be > 0");
  if (mode == SamplingMode::BatchWise) {
    return mul(mul(w.num_vertices, w.layer_dims.front()), element_size);
  }
  return mul(mul(w.num_vertices, widest_layer(w.layer_dims)), element_size);
}

std::uint64_t device_footprint(const WorkloadSpec& w, const DeviceModel& dev,
                               SamplingMode mode) {
  if (mode == SamplingMode::BatchWise) return est_batchwise_movement(w, dev).peak_device_footprint;
  return est_layerwise_footprint(w, dev).total();
}

std::uint64_t max_batch_size(const WorkloadSpec& w, const DeviceModel& dev, SamplingMode mode) {
  WorkloadSpec probe = w;
  probe.mode = mode;
  probe.expanded_override.reset();
  probe.batch_size = 1;
  probe.validate();
  dev.validate();

  auto fits = [&](std::uint64_t b) {
    probe.batch_size = b;
    return device_footprint(probe, dev, mode) <= dev.memory_capacity;
  };
  if (!fits(1)) {
    throw Error(ErrorKind::Infeasible,
                "a single target vertex needs " +
                    human_bytes(static_cast<double>(device_footprint(probe, dev, mode))) +
                    ", device holds " + human_bytes(static_cast<double>(dev.memory_capacity)));
  }
  // Footprint is non-decreasing in b: find the last b that fits.
  std::uint64_t lo = 1;
  std::uint64_t hi = w.num_vertices;
  if (fits(hi)) return hi;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

std::uint64_t fullgraph_footprint(const GraphStats& stats, std::span<const std::size_t> dims,
                                  std::uint64_t element_size) {
  check_dims(dims);
  return add(add(adjacency_bytes(stats.num_vertices, stats.num_edges),
                 mul(mul(stats.num_vertices, widest_layer(dims)), element_size)),
             model_weight_bytes(dims, element_size));
}

CostReport est_fullgraph_offload(const GraphStats& stats, std::span<const std::size_t> dims,
                                 const DeviceModel& dev) {
  check_dims(dims);
  dev.validate();
  const std::uint64_t es = dev.element_size;
  CostReport r;
  r.mode = "full";
  r.expanded_vertices_per_batch = stats.num_vertices;
  r.uncapped_expansion = static_cast<double>(stats.num_vertices);
  r.num_batches = 1;
  r.adjacency_bytes = adjacency_bytes(stats.num_vertices, stats.num_edges);
  r.weight_bytes = model_weight_bytes(dims, es);
  r.peak_device_footprint = fullgraph_footprint(stats, dims, es);
  if (r.peak_device_footprint > dev.memory_capacity) {
    throw Error(ErrorKind::Capacity,
                "whole graph needs " + human_bytes(static_cast<double>(r.peak_device_footprint)) +
                    " on a " + human_bytes(static_cast<double>(dev.memory_capacity)) +
                    " device; use batchwise or layerwise sampling");
  }
  r.bytes_per_batch = add(r.adjacency_bytes,
                          batch_transfer_bytes(stats.num_vertices, stats.num_vertices,
                                               dims.front(), dims.back(), es));
  r.total_movement = r.bytes_per_batch;
  r.est_transfer_seconds = static_cast<double>(r.total_movement) / dev.link_bandwidth;
  return r;
}

std::string human_bytes(double bytes) {
  static constexpr std::array<const char*, 7> kUnits{"B", "KB", "MB", "GB", "TB", "PB", "EB"};
  std::size_t unit = 0;
  while (bytes >= 1000.0 && unit + 1 < kUnits.size()) {
    bytes /= 1000.0;
    ++unit;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g %s", bytes, kUnits[unit]);
  return buf;
}

std::string human_seconds(double seconds) {
  char buf[32];
  if (seconds < 1e-3) {
    std::snprintf(buf, sizeof(buf), "%.3g us", seconds * 1e6);
  } else if (seconds < 1.0) {
    std::snprintf(buf, sizeof(buf), "%.3g ms", seconds * 1e3);
  } else {
    std::snprintf(buf, sizeof(buf), "%.3g s", seconds);
  }
  return buf;
}

nlohmann::ordered_json to_json(const CostReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode;
  j["expanded_vertices_per_batch"] = r.expanded_vertices_per_batch;
  j["uncapped_expansion"] = r.uncapped_expansion;
  j["num_batches"] = r.num_batches;
  j["bytes_per_batch"] = r.bytes_per_batch;
  j["total_movement"] = r.total_movement;
  j["peak_device_footprint"] = r.peak_device_footprint;
  j["weight_bytes"] = r.weight_bytes;
  j["adjacency_bytes"] = r.adjacency_bytes;
  j["est_transfer_seconds"] = r.est_transfer_seconds;
  j["human"] = {
      {"bytes_per_batch", human_bytes(static_cast<double>(r.bytes_per_batch))},
      {"total_movement", human_bytes(static_cast<double>(r.total_movement))},
      {"peak_device_footprint", human_bytes(static_cast<double>(r.peak_device_footprint))},
      {"est_transfer_seconds", human_seconds(r.est_transfer_seconds)},
  };
  return j;
}

CostReport cost_report_from_json(const nlohmann::json& j) {
  CostReport r;
  r.mode = j.at("mode").get<std::string>();
  r.expanded_vertices_per_batch = j.at("expanded_vertices_per_batch").get<std::uint64_t>();
  r.uncapped_expansion = j.at("uncapped_expansion").get<double>();
  r.num_batches = j.at("num_batches").get<std::uint64_t>();
  r.bytes_per_batch = j.at("bytes_per_batch").get<std::uint64_t>();
  r.total_movement = j.at("total_movement").get<std::uint64_t>();
  r.peak_device_footprint = j.at("peak_device_footprint").get<std::uint64_t>();
  r.weight_bytes = j.at("weight_bytes").get<std::uint64_t>();
  r.adjacency_bytes = j.at("adjacency_bytes").get<std::uint64_t>();
  r.est_transfer_seconds = j.at("est_transfer_seconds").get<double>();
  return r;
}

}  // namespace gcnbench
