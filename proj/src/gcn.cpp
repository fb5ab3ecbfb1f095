#include "gcnbench/gcn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>

#include "binary_io.hpp"
#include "gcnbench/error.hpp"

#ifdef GCNBENCH_HAVE_OPENMP
#include <omp.h>
#endif

namespace gcnbench {

namespace {

constexpr std::array<char, 4> kModelMagic{'G', 'C', 'N', 'M'};
constexpr std::uint32_t kModelVersion = 1;

using RowIndex = std::ptrdiff_t;

std::string shape_str(std::size_t rows, std::size_t cols) {
  return "(" + std::to_string(rows) + " x " + std::to_string(cols) + ")";
}

void check_coeffs(const CsrGraph& g, const FeatureMatrix& x, const NormCoefficients* coeffs) {
  if (x.num_rows() != g.num_vertices()) {
    throw Error(ErrorKind::Shape, "spmm: features have " + std::to_string(x.num_rows()) +
                                      " rows, graph has " +
                                      std::to_string(g.num_vertices()) + " vertices");
  }
  if (coeffs == nullptr) return;
  if (coeffs->edge.size() != g.num_edges()) {
    throw Error(ErrorKind::Shape, "spmm: " + std::to_string(coeffs->edge.size()) +
                                      " coefficients for " + std::to_string(g.num_edges()) +
                                      " edges");
  }
  if (!coeffs->self.empty() && coeffs->self.size() != g.num_vertices()) {
    throw Error(ErrorKind::Shape, "spmm: self-loop scale length mismatch");
  }
}

// Column-order accumulation for one row; shared by the full and row-subset
// kernels so both paths round identically.
inline void aggregate_row(const CsrGraph& g, const FeatureMatrix& x,
                          const NormCoefficients* coeffs, VertexId v, std::span<float> out) {
  const std::size_t dim = x.dim();
  const auto offsets = g.row_offsets();
  const auto cols = g.col_indices();
  for (EdgeIndex e = offsets[v]; e < offsets[v + 1]; ++e) {
    const float c = coeffs != nullptr ? coeffs->edge[e] : 1.0f;
    const float* src = x.row(cols[e]).data();
    for (std::size_t k = 0; k < dim; ++k) out[k] += c * src[k];
  }
  if (coeffs != nullptr && !coeffs->self.empty()) {
    const float c = coeffs->self[v];
    const float* src = x.row(v).data();
    for (std::size_t k = 0; k < dim; ++k) out[k] += c * src[k];
  }
}

float inv_or_zero(double value) { return value > 0.0 ? static_cast<float>(1.0 / value) : 0.0f; }

}  // namespace

std::string_view to_string(Aggregation a) {
  switch (a) {
    case Aggregation::Sum: return "sum";
    case Aggregation::Mean: return "mean";
    case Aggregation::SymNorm: return "sym-norm";
  }
  return "sum";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "sum") return Aggregation::Sum;
  if (name == "mean") return Aggregation::Mean;
  if (name == "sym-norm" || name == "sym") return Aggregation::SymNorm;
  throw Error(ErrorKind::Config, "unknown aggregation '" + std::string(name) + "'");
}

void LayerWeights::validate() const {
  if (in_dim == 0 || out_dim == 0) {
    throw Error(ErrorKind::Shape, "layer dimensions must be >= 1");
  }
  if (weight.size() != in_dim * out_dim) {
    throw Error(ErrorKind::Shape, "weight length " + std::to_string(weight.size()) +
                                      " does not match " + shape_str(in_dim, out_dim));
  }
  if (bias && bias->size() != out_dim) {
    throw Error(ErrorKind::Shape, "bias length must equal out_dim");
  }
  auto finite = [](float f) { return std::isfinite(f); };
  if (!std::all_of(weight.begin(), weight.end(), finite) ||
      (bias && !std::all_of(bias->begin(), bias->end(), finite))) {
    throw Error(ErrorKind::Numeric, "layer weights must be finite");
  }
}

void GcnModel::validate() const {
  if (layers.empty()) throw Error(ErrorKind::Shape, "model has no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].validate();
    if (i + 1 < layers.size() && layers[i].out_dim != layers[i + 1].in_dim) {
      throw Error(ErrorKind::Shape, "layer " + std::to_string(i) + " out_dim " +
                                        std::to_string(layers[i].out_dim) +
                                        " != layer " + std::to_string(i + 1) + " in_dim " +
                                        std::to_string(layers[i + 1].in_dim));
    }
  }
}

std::vector<std::size_t> GcnModel::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(layers.front().in_dim);
  for (const auto& l : layers) d.push_back(l.out_dim);
  return d;
}

std::uint64_t GcnModel::weight_bytes() const {
  std::uint64_t bytes = 0;
  for (const auto& l : layers) {
    bytes += l.weight.size() * sizeof(float);
    if (l.bias) bytes += l.bias->size() * sizeof(float);
  }
  return bytes;
}

GcnModel make_model(std::span<const std::size_t> dims, std::uint64_t seed,
                    Aggregation aggregation, bool self_loops, bool with_bias) {
  if (dims.size() < 2) throw Error(ErrorKind::Config, "a model needs at least two dims");
  GcnModel m;
  m.aggregation = aggregation;
  m.self_loops = self_loops;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) {
      throw Error(ErrorKind::Config, "model dims must be >= 1");
    }
    const float bound = 1.0f / std::sqrt(static_cast<float>(dims[i]));
    std::uniform_real_distribution<float> dist(-bound, bound);
    LayerWeights l;
    l.in_dim = dims[i];
    l.out_dim = dims[i + 1];
    l.weight.resize(l.in_dim * l.out_dim);
    for (auto& w : l.weight) w = dist(rng);
    if (with_bias) {
      l.bias.emplace(l.out_dim);
      for (auto& b : *l.bias) b = dist(rng);
    }
    m.layers.push_back(std::move(l));
  }
  return m;
}

NormCoefficients build_norm_coefficients(const CsrGraph& g, Aggregation mode,
                                         std::span<const std::uint32_t> global_degrees,
                                         bool self_loops) {
  const std::size_t n = g.num_vertices();
  if (!global_degrees.empty() && global_degrees.size() < n) {
    throw Error(ErrorKind::Shape, "global degree table shorter than vertex count");
  }
  const std::uint32_t extra = self_loops ? 1 : 0;
  auto degree = [&](VertexId v) -> double {
    const std::uint64_t d = global_degrees.empty() ? g.degree(v) : global_degrees[v];
    return static_cast<double>(d + extra);
  };

  NormCoefficients c;
  c.edge.assign(g.num_edges(), 1.0f);
  if (self_loops) c.self.assign(n, 1.0f);
  if (mode == Aggregation::Sum) return c;

  const auto offsets = g.row_offsets();
  const auto cols = g.col_indices();
  for (VertexId v = 0; v < n; ++v) {
    const double dv = degree(v);
    if (mode == Aggregation::Mean) {
      const float scale = inv_or_zero(dv);
      for (EdgeIndex e = offsets[v]; e < offsets[v + 1]; ++e) c.edge[e] = scale;
      if (self_loops) c.self[v] = scale;
    } else {
      for (EdgeIndex e = offsets[v]; e < offsets[v + 1]; ++e) {
        c.edge[e] = inv_or_zero(std::sqrt(dv * degree(cols[e])));
      }
      if (self_loops) c.self[v] = inv_or_zero(dv);
    }
  }
  return c;
}

FeatureMatrix spmm(const CsrGraph& g, const FeatureMatrix& x, const NormCoefficients* coeffs,
                   Profiler* profiler) {
  check_coeffs(g, x, coeffs);
  ScopedTimer timer(profiler, KernelCategory::SpMM);
  FeatureMatrix out(g.num_vertices(), x.dim());
  const auto n = static_cast<RowIndex>(g.num_vertices());
#pragma omp parallel for schedule(dynamic, 64)
  for (RowIndex v = 0; v < n; ++v) {
    aggregate_row(g, x, coeffs, static_cast<VertexId>(v), out.row(static_cast<std::size_t>(v)));
  }
  return out;
}

FeatureMatrix spmm_rows(const CsrGraph& g, const FeatureMatrix& x,
                        const NormCoefficients* coeffs, std::span<const VertexId> rows,
                        Profiler* profiler) {
  check_coeffs(g, x, coeffs);
  for (VertexId v : rows) {
    if (v >= g.num_vertices()) throw Error(ErrorKind::Bounds, "spmm_rows: row out of range");
  }
  ScopedTimer timer(profiler, KernelCategory::SpMM);
  FeatureMatrix out(rows.size(), x.dim());
  const auto n = static_cast<RowIndex>(rows.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (RowIndex i = 0; i < n; ++i) {
    aggregate_row(g, x, coeffs, rows[static_cast<std::size_t>(i)],
                  out.row(static_cast<std::size_t>(i)));
  }
  return out;
}

FeatureMatrix dense_mm(const FeatureMatrix& x, const LayerWeights& w, Profiler* profiler) {
  if (x.dim() != w.in_dim || w.weight.size() != w.in_dim * w.out_dim) {
    throw Error(ErrorKind::Shape, "dense_mm: " + shape_str(x.num_rows(), x.dim()) + " x " +
                                      shape_str(w.in_dim, w.out_dim));
  }
  ScopedTimer timer(profiler, KernelCategory::DenseMM);
  FeatureMatrix out(x.num_rows(), w.out_dim);
  const std::size_t in_dim = w.in_dim;
  const std::size_t out_dim = w.out_dim;
  const float* weight = w.weight.data();
  const float* bias = w.bias ? w.bias->data() : nullptr;
  const auto n = static_cast<RowIndex>(x.num_rows());
#pragma omp parallel for schedule(static)
  for (RowIndex i = 0; i < n; ++i) {
    const float* src = x.row(static_cast<std::size_t>(i)).data();
    float* dst = out.row(static_cast<std::size_t>(i)).data();
    if (bias != nullptr) std::copy(bias, bias + out_dim, dst);
    for (std::size_t k = 0; k < in_dim; ++k) {
      const float a = src[k];
      const float* wrow = weight + k * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) dst[j] += a * wrow[j];
    }
  }
  return out;
}

void relu_inplace(FeatureMatrix& x) {
  for (float& v : x.values()) v = std::max(v, 0.0f);
}

FeatureMatrix relu(FeatureMatrix x) {
  relu_inplace(x);
  return x;
}

FeatureMatrix layer_forward(const CsrGraph& g, const FeatureMatrix& h,
                            const NormCoefficients& coeffs, std::span<const VertexId> rows,
                            const LayerWeights& w, bool activate, std::size_t layer_index,
                            Profiler* profiler) {
  FeatureMatrix aggregated = rows.empty() ? spmm(g, h, &coeffs, profiler)
                                          : spmm_rows(g, h, &coeffs, rows, profiler);
  FeatureMatrix out = dense_mm(aggregated, w, profiler);
  if (activate) relu_inplace(out);
  if (!out.all_finite()) {
    throw Error(ErrorKind::Numeric,
                "non-finite values after layer " + std::to_string(layer_index));
  }
  return out;
}

FeatureMatrix full_graph_inference(const CsrGraph& g, const FeatureMatrix& x,
                                   const GcnModel& m, Profiler* profiler) {
  m.validate();
  if (x.dim() != m.in_dim()) {
    throw Error(ErrorKind::Shape, "features have dim " + std::to_string(x.dim()) +
                                      ", model expects " + std::to_string(m.in_dim()));
  }
  if (x.num_rows() != g.num_vertices()) {
    throw Error(ErrorKind::Shape, "feature rows do not match vertex count");
  }
  const NormCoefficients coeffs = build_norm_coefficients(g, m.aggregation, {}, m.self_loops);
  FeatureMatrix h = x;
  for (std::size_t l = 0; l < m.num_layers(); ++l) {
    const bool last = l + 1 == m.num_layers();
    h = layer_forward(g, h, coeffs, {}, m.layers[l], !last, l, profiler);
  }
  return h;
}

std::uint64_t check_inference_shapes(std::uint64_t num_vertices,
                                     std::span<const std::size_t> dims) {
  if (dims.size() < 2) throw Error(ErrorKind::Shape, "need at least input and output dims");
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t peak = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    if (dims[i] == 0 || dims[i + 1] == 0) throw Error(ErrorKind::Shape, "zero dimension");
    // Live at once: layer input, aggregated input, layer output.
    const std::uint64_t per_vertex = 2 * std::uint64_t{dims[i]} + dims[i + 1];
    if (num_vertices != 0 && per_vertex > kMax / sizeof(float) / num_vertices) {
      throw Error(ErrorKind::Capacity, "feature footprint overflows 64-bit byte count");
    }
    peak = std::max(peak, num_vertices * per_vertex * sizeof(float));
  }
  return peak;
}

void save_model(const GcnModel& m, const std::filesystem::path& path) {
  m.validate();
  detail::BinaryWriter out(path);
  for (char c : kModelMagic) out.put(c);
  out.put(kModelVersion);
  out.put(static_cast<std::uint32_t>(m.layers.size()));
  out.put(static_cast<std::uint32_t>(m.self_loops ? 1 : 0));
  out.put(static_cast<std::uint32_t>(m.aggregation));
  for (const auto& l : m.layers) {
    out.put(static_cast<std::uint32_t>(l.in_dim));
    out.put(static_cast<std::uint32_t>(l.out_dim));
    out.put(static_cast<std::uint32_t>(l.bias ? 1 : 0));
    out.put_span(std::span<const float>(l.weight));
    if (l.bias) out.put_span(std::span<const float>(*l.bias));
  }
  out.finish();
}

GcnModel load_model(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  if (in.size() < kModelMagic.size() + sizeof(std::uint32_t)) {
    throw Error(ErrorKind::Format, "not a model file: " + path.string());
  }
  for (char c : kModelMagic) {
    if (in.get<char>() != c) throw Error(ErrorKind::Format, "bad magic in " + path.string());
  }
  if (auto version = in.get<std::uint32_t>(); version != kModelVersion) {
    throw Error(ErrorKind::Format, "unsupported model version " + std::to_string(version));
  }
  GcnModel m;
  const auto num_layers = in.get<std::uint32_t>();
  m.self_loops = (in.get<std::uint32_t>() & 1U) != 0;
  const auto mode = in.get<std::uint32_t>();
  if (mode > static_cast<std::uint32_t>(Aggregation::SymNorm)) {
    throw Error(ErrorKind::Format, "unknown aggregation code " + std::to_string(mode));
  }
  m.aggregation = static_cast<Aggregation>(mode);
  for (std::uint32_t i = 0; i < num_layers; ++i) {
    LayerWeights l;
    l.in_dim = in.get<std::uint32_t>();
    l.out_dim = in.get<std::uint32_t>();
    const bool has_bias = in.get<std::uint32_t>() != 0;
    l.weight = in.get_vector<float>(std::uint64_t{l.in_dim} * l.out_dim);
    if (has_bias) l.bias = in.get_vector<float>(l.out_dim);
    m.layers.push_back(std::move(l));
  }
  m.validate();
  return m;
}

void set_num_threads(int n) {
#ifdef GCNBENCH_HAVE_OPENMP
  static const int default_threads = omp_get_max_threads();
  omp_set_num_threads(n > 0 ? n : default_threads);
#else
  (void)n;
#endif
}

int configure_threads_from_env() {
  const char* raw = std::getenv("GCNBENCH_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const long n = std::strtol(raw, &end, 10);
  if (*end != '\0' || n <= 0 || n > 4096) {
    throw Error(ErrorKind::Config, "GCNBENCH_THREADS must be a positive integer");
  }
  set_num_threads(static_cast<int>(n));
  return static_cast<int>(n);
}

}  // namespace gcnbench
