#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcnbench/cost_model.hpp"
#include "gcnbench/gcn.hpp"
#include "gcnbench/graph.hpp"
#include "gcnbench/profiler.hpp"
#include "gcnbench/sampler.hpp"
#include "json.hpp"

namespace gcnbench {

enum class RunMode { Full, BatchWise, LayerWise };

std::string_view to_string(RunMode m);
RunMode parse_run_mode(std::string_view name);

struct CharacterizationConfig {
  RunMode mode = RunMode::Full;
  std::size_t batch_size = 1;  // ignored for Full
  std::optional<DeviceModel> device;
  std::size_t reps = 5;
  std::uint64_t seed = 0;  // recorded only; inputs are built by the caller
  /// Receives one record per batch of the first repetition.
  std::function<void(const TraceRecord&)> on_batch;
};

// Everything below except `timing` is a pure function of the inputs.
struct RunMetadata {
  GraphStats graph;
  std::vector<std::size_t> dims;
  std::size_t embedding_dim = 0;
  std::string mode;
  std::string aggregation;
  bool self_loops = false;
  std::uint64_t batch_size = 0;
  std::uint64_t seed = 0;
  std::uint64_t reps = 0;
  bool offload_modeled = false;

  std::uint64_t num_batches = 0;
  std::uint64_t total_expanded = 0;
  std::uint64_t total_subgraph_edges = 0;
  std::uint64_t bytes_moved = 0;
  std::string output_digest;
  std::optional<CostReport> cost;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct BreakdownReport {
  std::array<double, kNumCategories> seconds{};
  std::array<double, kNumCategories> fractions{};
  double total_seconds = 0.0;
  bool precision_warning = false;
  RunMetadata meta;

  double seconds_of(KernelCategory c) const { return seconds[static_cast<std::size_t>(c)]; }
  double fraction_of(KernelCategory c) const { return fractions[static_cast<std::size_t>(c)]; }

  friend bool operator==(const BreakdownReport&, const BreakdownReport&) = default;
};

struct SweepEntry {
  std::size_t embedding_dim = 0;
  bool feasible = true;
  std::string infeasible_reason;
  std::optional<BreakdownReport> breakdown;
  std::optional<CostReport> cost;

  friend bool operator==(const SweepEntry&, const SweepEntry&) = default;
};

struct SweepResult {
  std::vector<SweepEntry> entries;

  friend bool operator==(const SweepResult&, const SweepResult&) = default;
};

/// Hidden layers swept over a fixed input and output width.
struct ModelTemplate {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::size_t num_layers = 2;
  Aggregation aggregation = Aggregation::Sum;
  bool self_loops = false;
  bool with_bias = false;

  std::vector<std::size_t> dims_for(std::size_t hidden) const;
};

/// 64-bit FNV-1a over the raw float bytes, as 16 hex digits.
std::string digest(const FeatureMatrix& m);

/// Times the chosen pipeline `cfg.reps` times and reports the repetition
/// with the median total. Offload seconds are modeled from the device's link
/// bandwidth, never measured.
BreakdownReport run_characterization(const CsrGraph& g, const FeatureMatrix& x,
                                     const GcnModel& model, const CharacterizationConfig& cfg);

/// One entry per hidden dim, weights regenerated from `seed` for each.
SweepResult run_sweep(const CsrGraph& g, const FeatureMatrix& x, const ModelTemplate& tmpl,
                      std::span<const std::size_t> hidden_dims,
                      const CharacterizationConfig& cfg);

/// a.total_seconds / b.total_seconds. Throws Comparison unless both ran the
/// same graph and dims.
double compare_speedup(const BreakdownReport& a, const BreakdownReport& b);

enum class ReportFormat { Json, Csv };
ReportFormat parse_report_format(std::string_view name);

nlohmann::ordered_json to_json(const BreakdownReport& r);
nlohmann::ordered_json to_json(const SweepResult& r);
BreakdownReport breakdown_from_json(const nlohmann::json& j);
SweepResult sweep_from_json(const nlohmann::json& j);

/// One row per (dim, category); infeasible sweep entries emit no rows.
std::string to_csv(const BreakdownReport& r);
std::string to_csv(const SweepResult& r);

void emit_report(const BreakdownReport& r, ReportFormat format,
                 const std::filesystem::path& path);
void emit_report(const SweepResult& r, ReportFormat format, const std::filesystem::path& path);

}  // namespace gcnbench
