#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "gcnbench/graph.hpp"
#include "gcnbench/profiler.hpp"

namespace gcnbench {

enum class Aggregation { Sum, Mean, SymNorm };

std::string_view to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view name);

struct LayerWeights {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<float> weight;  // row-major in_dim x out_dim
  std::optional<std::vector<float>> bias;

  void validate() const;
  float at(std::size_t i, std::size_t j) const { return weight[i * out_dim + j]; }
};

struct GcnModel {
  std::vector<LayerWeights> layers;
  bool self_loops = false;
  Aggregation aggregation = Aggregation::Sum;

  void validate() const;
  std::size_t num_layers() const { return layers.size(); }
  std::size_t in_dim() const { return layers.front().in_dim; }
  std::size_t out_dim() const { return layers.back().out_dim; }
  /// [d_in, d_h1, ..., d_out]
  std::vector<std::size_t> dims() const;
  std::uint64_t weight_bytes() const;
};

/// Seeded uniform weights in [-1/sqrt(in_dim), 1/sqrt(in_dim)].
GcnModel make_model(std::span<const std::size_t> dims, std::uint64_t seed,
                    Aggregation aggregation = Aggregation::Sum, bool self_loops = false,
                    bool with_bias = false);

/// Per-edge aggregation scales, plus a per-row scale for the implicit
/// self-loop term when the model adds self-loops (`self` empty otherwise).
struct NormCoefficients {
  std::vector<float> edge;
  std::vector<float> self;
};

/// Degrees come from `global_degrees[id]` when non-empty, otherwise from `g`.
/// Self-loops count one towards every degree. A zero effective degree yields
/// a zero coefficient.
NormCoefficients build_norm_coefficients(const CsrGraph& g, Aggregation mode,
                                         std::span<const std::uint32_t> global_degrees = {},
                                         bool self_loops = false);

/// out[v] = sum over (v,u) of coeff(v,u) * x[u], accumulated in column order,
/// then the self term if `coeffs->self` is populated.
FeatureMatrix spmm(const CsrGraph& g, const FeatureMatrix& x,
                   const NormCoefficients* coeffs = nullptr, Profiler* profiler = nullptr);

/// Same as `spmm` restricted to `rows`; output row i belongs to rows[i].
FeatureMatrix spmm_rows(const CsrGraph& g, const FeatureMatrix& x,
                        const NormCoefficients* coeffs, std::span<const VertexId> rows,
                        Profiler* profiler = nullptr);

FeatureMatrix dense_mm(const FeatureMatrix& x, const LayerWeights& w,
                       Profiler* profiler = nullptr);

void relu_inplace(FeatureMatrix& x);
FeatureMatrix relu(FeatureMatrix x);

/// One GCN layer over the selected rows (all rows when `rows` is empty):
/// aggregate, transform, then ReLU when `activate`. Throws Numeric naming
/// `layer_index` if the result is not finite.
FeatureMatrix layer_forward(const CsrGraph& g, const FeatureMatrix& h,
                            const NormCoefficients& coeffs, std::span<const VertexId> rows,
                            const LayerWeights& w, bool activate, std::size_t layer_index,
                            Profiler* profiler = nullptr);

FeatureMatrix full_graph_inference(const CsrGraph& g, const FeatureMatrix& x,
                                   const GcnModel& m, Profiler* profiler = nullptr);

/// Shape check for a whole-graph run without allocating. Returns the peak
/// bytes of simultaneously live feature matrices; throws Shape/Capacity on
/// mismatched or overflowing dimensions.
std::uint64_t check_inference_shapes(std::uint64_t num_vertices,
                                     std::span<const std::size_t> dims);

// "GCNM", u32 version, u32 layers, u32 flags (bit 0 self-loops),
// u32 aggregation, then per layer u32 in, u32 out, u32 has_bias, weights, bias.
void save_model(const GcnModel& m, const std::filesystem::path& path);
GcnModel load_model(const std::filesystem::path& path);

/// Caps kernel parallelism; <= 0 restores the runtime default.
void set_num_threads(int n);
/// Applies GCNBENCH_THREADS if set. Returns the value applied, or 0.
int configure_threads_from_env();

}  // namespace gcnbench
