#include "gcnbench/graph.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>

#include "binary_io.hpp"
#include "gcnbench/error.hpp"

namespace gcnbench {

namespace {

constexpr std::array<char, 4> kGraphMagic{'G', 'C', 'S', 'R'};
constexpr std::uint32_t kGraphVersion = 1;

std::uint64_t encode_pair(VertexId v, VertexId u) {
  return (static_cast<std::uint64_t>(v) << 32) | u;
}

}  // namespace

CsrGraph CsrGraph::from_parts(std::vector<EdgeIndex> row_offsets,
                              std::vector<VertexId> col_indices) {
  if (row_offsets.empty() || row_offsets.front() != 0) {
    throw Error(ErrorKind::Format, "row_offsets must start at 0");
  }
  if (row_offsets.back() != col_indices.size()) {
    throw Error(ErrorKind::Format, "row_offsets must end at num_edges");
  }
  const std::size_t num_vertices = row_offsets.size() - 1;
  for (std::size_t v = 0; v < num_vertices; ++v) {
    if (row_offsets[v + 1] < row_offsets[v]) {
      throw Error(ErrorKind::Format, "row_offsets must be non-decreasing");
    }
    for (EdgeIndex e = row_offsets[v]; e < row_offsets[v + 1]; ++e) {
      if (col_indices[e] >= num_vertices) {
        throw Error(ErrorKind::Format, "column index out of range");
      }
      if (e > row_offsets[v] && col_indices[e] <= col_indices[e - 1]) {
        throw Error(ErrorKind::Format, "row " + std::to_string(v) +
                                           " is not strictly increasing");
      }
    }
  }
  CsrGraph g;
  g.row_offsets_ = std::move(row_offsets);
  g.col_indices_ = std::move(col_indices);
  return g;
}

CsrGraph CsrGraph::from_edges(std::size_t num_vertices,
                              std::vector<std::pair<VertexId, VertexId>> edges) {
  if (num_vertices > std::numeric_limits<VertexId>::max()) {
    throw Error(ErrorKind::Bounds, "vertex count exceeds 32-bit id range");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  CsrGraph g;
  g.row_offsets_.assign(num_vertices + 1, 0);
  g.col_indices_.reserve(edges.size());
  for (const auto& [v, u] : edges) {
    if (v >= num_vertices || u >= num_vertices) {
      throw Error(ErrorKind::Bounds, "edge (" + std::to_string(v) + ", " +
                                         std::to_string(u) + ") outside " +
                                         std::to_string(num_vertices) + " vertices");
    }
    ++g.row_offsets_[v + 1];
    g.col_indices_.push_back(u);
  }
  for (std::size_t v = 0; v < num_vertices; ++v) {
    g.row_offsets_[v + 1] += g.row_offsets_[v];
  }
  return g;
}

bool CsrGraph::has_edge(VertexId v, VertexId u) const {
  auto row = neighbors(v);
  return std::binary_search(row.begin(), row.end(), u);
}

std::vector<std::uint32_t> CsrGraph::degrees() const {
  std::vector<std::uint32_t> deg(num_vertices());
  for (std::size_t v = 0; v < deg.size(); ++v) {
    deg[v] = static_cast<std::uint32_t>(row_offsets_[v + 1] - row_offsets_[v]);
  }
  return deg;
}

GraphStats stats_from_counts(std::uint64_t num_vertices, std::uint64_t num_edges) {
  if (num_vertices == 0) {
    throw Error(ErrorKind::Degenerate, "graph statistics need at least one vertex");
  }
  GraphStats s;
  s.num_vertices = num_vertices;
  s.num_edges = num_edges;
  const auto v = static_cast<double>(num_vertices);
  s.density = static_cast<double>(num_edges) / (v * v);
  s.avg_degree = static_cast<double>(num_edges) / v;
  return s;
}

GraphStats compute_stats(const CsrGraph& g) {
  GraphStats s = stats_from_counts(g.num_vertices(), g.num_edges());
  for (VertexId v = 0; v < g.num_vertices(); ++v) {
    s.max_degree = std::max<std::uint64_t>(s.max_degree, g.degree(v));
  }
  return s;
}

FeatureMatrix::FeatureMatrix(std::size_t num_rows, std::size_t dim,
                             std::vector<float> values)
    : num_rows_(num_rows), dim_(dim), values_(std::move(values)) {
  if (values_.size() != num_rows * dim) {
    throw Error(ErrorKind::Shape, "feature payload length " +
                                      std::to_string(values_.size()) + " != " +
                                      std::to_string(num_rows) + " x " +
                                      std::to_string(dim));
  }
}

bool FeatureMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](float f) { return std::isfinite(f); });
}

CsrGraph parse_edge_list(std::string_view text, std::optional<std::size_t> num_vertices) {
  std::vector<std::pair<VertexId, VertexId>> edges;
  std::uint64_t max_id = 0;
  bool any = false;
  std::size_t line_no = 0;

  auto parse_error = [&](const std::string& why) {
    return Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + why);
  };

  while (!text.empty()) {
    ++line_no;
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }

    std::array<std::uint64_t, 2> ids{};
    std::size_t count = 0;
    std::size_t pos = 0;
    while (true) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos == line.size()) break;
      if (count == 2) throw parse_error("expected two vertex ids");
      const char* first = line.data() + pos;
      const char* last = line.data() + line.size();
      auto [ptr, ec] = std::from_chars(first, last, ids[count]);
      if (ec != std::errc{} || (ptr != last && !std::isspace(static_cast<unsigned char>(*ptr)))) {
        throw parse_error("not a non-negative integer: '" +
                          std::string(first, std::find_if(first, last, [](char c) {
                                        return std::isspace(static_cast<unsigned char>(c));
                                      })) +
                          "'");
      }
      pos = static_cast<std::size_t>(ptr - line.data());
      ++count;
    }
    if (count == 0) continue;
    if (count != 2) throw parse_error("expected two vertex ids");

    for (auto id : ids) {
      if (num_vertices && id >= *num_vertices) {
        throw Error(ErrorKind::Bounds, "line " + std::to_string(line_no) + ": vertex " +
                                           std::to_string(id) + " >= declared " +
                                           std::to_string(*num_vertices));
      }
      if (id >= std::numeric_limits<VertexId>::max()) {
        throw Error(ErrorKind::Bounds, "line " + std::to_string(line_no) +
                                           ": vertex id exceeds 32-bit range");
      }
      max_id = std::max(max_id, id);
    }
    any = true;
    edges.emplace_back(static_cast<VertexId>(ids[0]), static_cast<VertexId>(ids[1]));
  }

  const std::size_t v = num_vertices.value_or(any ? max_id + 1 : 0);
  return CsrGraph::from_edges(v, std::move(edges));
}

CsrGraph load_edge_list(const std::filesystem::path& path,
                        std::optional<std::size_t> num_vertices) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open edge list: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_edge_list(buf.str(), num_vertices);
}

GraphModel parse_graph_model(std::string_view name) {
  if (name == "erdos-renyi" || name == "er") return GraphModel::ErdosRenyi;
  if (name == "rmat") return GraphModel::Rmat;
  throw Error(ErrorKind::Config, "unknown graph model '" + std::string(name) + "'");
}

namespace {

// Floyd's algorithm: `count` distinct values from [0, universe).
std::vector<std::uint64_t> sample_distinct(std::uint64_t universe, std::uint64_t count,
                                           std::mt19937_64& rng) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(count * 2);
  std::vector<std::uint64_t> out;
  out.reserve(count);
  for (std::uint64_t j = universe - count; j < universe; ++j) {
    std::uniform_int_distribution<std::uint64_t> pick(0, j);
    std::uint64_t t = pick(rng);
    if (!chosen.insert(t).second) {
      chosen.insert(j);
      t = j;
    }
    out.push_back(t);
  }
  return out;
}

CsrGraph erdos_renyi(std::size_t num_vertices, std::size_t num_edges, std::mt19937_64& rng) {
  const std::uint64_t n = num_vertices;
  std::vector<std::pair<VertexId, VertexId>> edges;
  edges.reserve(num_edges);
  for (std::uint64_t code : sample_distinct(n * n, num_edges, rng)) {
    edges.emplace_back(static_cast<VertexId>(code / n), static_cast<VertexId>(code % n));
  }
  return CsrGraph::from_edges(num_vertices, std::move(edges));
}

// Graph500 quadrant probabilities.
constexpr double kRmatA = 0.57;
constexpr double kRmatB = 0.19;
constexpr double kRmatC = 0.19;

CsrGraph rmat(std::size_t num_vertices, std::size_t num_edges, std::mt19937_64& rng) {
  int scale = 0;
  while ((std::uint64_t{1} << scale) < num_vertices) ++scale;

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(num_edges * 2);
  std::vector<std::pair<VertexId, VertexId>> edges;
  edges.reserve(num_edges);

  auto accept = [&](std::uint64_t v, std::uint64_t u) {
    if (v >= num_vertices || u >= num_vertices) return;
    if (seen.insert(encode_pair(static_cast<VertexId>(v), static_cast<VertexId>(u))).second) {
      edges.emplace_back(static_cast<VertexId>(v), static_cast<VertexId>(u));
    }
  };

  // Skewed draws saturate near complete graphs; past this budget the
  // remainder is filled uniformly so the edge count stays exact.
  const std::uint64_t budget = 32 * static_cast<std::uint64_t>(num_edges) + 1024;
  for (std::uint64_t attempt = 0; edges.size() < num_edges && attempt < budget; ++attempt) {
    std::uint64_t v = 0;
    std::uint64_t u = 0;
    for (int level = 0; level < scale; ++level) {
      const double r = coin(rng);
      v <<= 1;
      u <<= 1;
      if (r < kRmatA) {
      } else if (r < kRmatA + kRmatB) {
        u |= 1;
      } else if (r < kRmatA + kRmatB + kRmatC) {
        v |= 1;
      } else {
        v |= 1;
        u |= 1;
      }
    }
    accept(v, u);
  }
  std::uniform_int_distribution<std::uint64_t> any(0, num_vertices - 1);
  while (edges.size() < num_edges) accept(any(rng), any(rng));
  return CsrGraph::from_edges(num_vertices, std::move(edges));
}

}  // namespace

CsrGraph gen_random_graph(GraphModel model, std::size_t num_vertices,
                          std::size_t num_edges, std::uint64_t seed) {
  if (num_vertices > std::numeric_limits<VertexId>::max()) {
    throw Error(ErrorKind::Capacity, "vertex count exceeds 32-bit id range");
  }
  const auto n = static_cast<unsigned __int128>(num_vertices);
  if (static_cast<unsigned __int128>(num_edges) > n * n) {
    throw Error(ErrorKind::Capacity, std::to_string(num_edges) + " edges cannot fit in " +
                                         std::to_string(num_vertices) + " vertices");
  }
  std::mt19937_64 rng(seed);
  if (num_edges == 0) return CsrGraph::from_edges(num_vertices, {});
  switch (model) {
    case GraphModel::ErdosRenyi: return erdos_renyi(num_vertices, num_edges, rng);
    case GraphModel::Rmat: return rmat(num_vertices, num_edges, rng);
  }
  throw Error(ErrorKind::Config, "unknown graph model");
}

FeatureMatrix gen_features(std::size_t num_rows, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw Error(ErrorKind::Degenerate, "feature dimension must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> values(num_rows * dim);
  for (auto& v : values) v = dist(rng);
  return FeatureMatrix(num_rows, dim, std::move(values));
}

void save_binary(const CsrGraph& g, const std::filesystem::path& path) {
  detail::BinaryWriter out(path);
  for (char c : kGraphMagic) out.put(c);
  out.put(kGraphVersion);
  out.put(static_cast<std::uint64_t>(g.num_vertices()));
  out.put(static_cast<std::uint64_t>(g.num_edges()));
  out.put_span(g.row_offsets());
  out.put_span(g.col_indices());
  out.finish();
}

CsrGraph load_binary(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  if (in.size() < kGraphMagic.size() + sizeof(std::uint32_t)) {
    throw Error(ErrorKind::Format, "not a CSR graph file: " + path.string());
  }
  for (char c : kGraphMagic) {
    if (in.get<char>() != c) {
      throw Error(ErrorKind::Format, "bad magic in " + path.string());
    }
  }
  if (auto version = in.get<std::uint32_t>(); version != kGraphVersion) {
    throw Error(ErrorKind::Format, "unsupported CSR version " + std::to_string(version));
  }
  const auto num_vertices = in.get<std::uint64_t>();
  const auto num_edges = in.get<std::uint64_t>();
  if (num_vertices >= std::numeric_limits<VertexId>::max()) {
    throw Error(ErrorKind::Format, "vertex count out of range in " + path.string());
  }
  auto offsets = in.get_vector<EdgeIndex>(num_vertices + 1);
  auto cols = in.get_vector<VertexId>(num_edges);
  return CsrGraph::from_parts(std::move(offsets), std::move(cols));
}

void save_features(const FeatureMatrix& x, const std::filesystem::path& path) {
  detail::BinaryWriter out(path);
  out.put(static_cast<std::uint64_t>(x.num_rows()));
  out.put(static_cast<std::uint64_t>(x.dim()));
  out.put_span(x.values());
  out.finish();
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  detail::BinaryReader in(path);
  const auto rows = in.get<std::uint64_t>();
  const auto dim = in.get<std::uint64_t>();
  if (dim != 0 && rows > in.remaining() / sizeof(float) / dim) {
    throw Error(ErrorKind::Io, "truncated feature file: " + path.string());
  }
  auto values = in.get_vector<float>(rows * dim);
  FeatureMatrix x(rows, dim, std::move(values));
  if (!x.all_finite()) {
    throw Error(ErrorKind::Format, "non-finite feature values in " + path.string());
  }
  return x;
}

}  // namespace gcnbench
