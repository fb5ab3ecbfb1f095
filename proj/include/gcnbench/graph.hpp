#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace gcnbench {

using VertexId = std::uint32_t;
using EdgeIndex = std::uint64_t;

/// Directed adjacency in compressed sparse row form.
///
/// Canonical: every row's column indices are strictly increasing, so there
/// are no duplicate edges. Immutable once built; construct through
/// `from_edges` or `from_parts` (which validates).
class CsrGraph {
 public:
  CsrGraph() : row_offsets_{0} {}

  /// Validates every invariant and throws `Error` (Format) if one fails.
  static CsrGraph from_parts(std::vector<EdgeIndex> row_offsets,
                             std::vector<VertexId> col_indices);

  /// Sorts and deduplicates. Ids must already be < num_vertices.
  static CsrGraph from_edges(std::size_t num_vertices,
                             std::vector<std::pair<VertexId, VertexId>> edges);

  std::size_t num_vertices() const { return row_offsets_.size() - 1; }
  std::size_t num_edges() const { return col_indices_.size(); }

  std::span<const EdgeIndex> row_offsets() const { return row_offsets_; }
  std::span<const VertexId> col_indices() const { return col_indices_; }

  std::span<const VertexId> neighbors(VertexId v) const {
    return {col_indices_.data() + row_offsets_[v],
            col_indices_.data() + row_offsets_[v + 1]};
  }
  std::size_t degree(VertexId v) const {
    return row_offsets_[v + 1] - row_offsets_[v];
  }

  bool has_edge(VertexId v, VertexId u) const;

  /// Out-degree of every vertex.
  std::vector<std::uint32_t> degrees() const;

  friend bool operator==(const CsrGraph&, const CsrGraph&) = default;

 private:
  std::vector<EdgeIndex> row_offsets_;
  std::vector<VertexId> col_indices_;
};

struct GraphStats {
  std::uint64_t num_vertices = 0;
  std::uint64_t num_edges = 0;
  double density = 0.0;
  double avg_degree = 0.0;
  std::uint64_t max_degree = 0;

  friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

GraphStats compute_stats(const CsrGraph& g);

/// Stats from a bare (V, E) pair; max_degree is unknown and left at 0.
GraphStats stats_from_counts(std::uint64_t num_vertices, std::uint64_t num_edges);

/// Dense row-major vertex embeddings, 32-bit.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t num_rows, std::size_t dim)
      : num_rows_(num_rows), dim_(dim), values_(num_rows * dim, 0.0f) {}
  FeatureMatrix(std::size_t num_rows, std::size_t dim, std::vector<float> values);

  std::size_t num_rows() const { return num_rows_; }
  std::size_t dim() const { return dim_; }

  std::span<float> row(std::size_t r) { return {values_.data() + r * dim_, dim_}; }
  std::span<const float> row(std::size_t r) const {
    return {values_.data() + r * dim_, dim_};
  }
  float& at(std::size_t r, std::size_t c) { return values_[r * dim_ + c]; }
  float at(std::size_t r, std::size_t c) const { return values_[r * dim_ + c]; }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  bool all_finite() const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t num_rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> values_;
};

/// Parses whitespace-separated "src dst" lines; '#' starts a comment.
CsrGraph parse_edge_list(std::string_view text,
                         std::optional<std::size_t> num_vertices = std::nullopt);
CsrGraph load_edge_list(const std::filesystem::path& path,
                        std::optional<std::size_t> num_vertices = std::nullopt);

enum class GraphModel { ErdosRenyi, Rmat };

GraphModel parse_graph_model(std::string_view name);

/// Exactly `num_edges` distinct directed edges (self-loops possible),
/// deterministic in (model, V, E, seed).
CsrGraph gen_random_graph(GraphModel model, std::size_t num_vertices,
                          std::size_t num_edges, std::uint64_t seed);

/// Seeded values uniform in [-1, 1].
FeatureMatrix gen_features(std::size_t num_rows, std::size_t dim, std::uint64_t seed);

// Little-endian: "GCSR", u32 version, u64 V, u64 E, u64[V+1] offsets,
// u32[E] column indices.
void save_binary(const CsrGraph& g, const std::filesystem::path& path);
CsrGraph load_binary(const std::filesystem::path& path);

// u64 rows, u64 dim, then row-major f32.
void save_features(const FeatureMatrix& x, const std::filesystem::path& path);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace gcnbench
