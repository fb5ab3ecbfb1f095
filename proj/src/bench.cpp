#include "gcnbench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gcnbench/error.hpp"

namespace gcnbench {

namespace {

struct RepResult {
  std::array<double, kNumCategories> seconds{};
  double wall = 0.0;
  double total = 0.0;
};

std::size_t idx(KernelCategory c) { return static_cast<std::size_t>(c); }

void finalize_fractions(BreakdownReport& r) {
  r.total_seconds = std::accumulate(r.seconds.begin(), r.seconds.end(), 0.0);
  if (r.total_seconds <= 0.0) {
    r.fractions.fill(0.0);
    r.fractions[idx(KernelCategory::Glue)] = 1.0;
    return;
  }
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    r.fractions[i] = r.seconds[i] / r.total_seconds;
  }
}

}  // namespace

std::string_view to_string(KernelCategory c) {
  switch (c) {
    case KernelCategory::SpMM: return "SpMM";
    case KernelCategory::DenseMM: return "DenseMM";
    case KernelCategory::Glue: return "Glue";
    case KernelCategory::Offload: return "Offload";
    case KernelCategory::Sampling: return "Sampling";
  }
  return "Glue";
}

KernelCategory parse_category(std::string_view name) {
  for (auto c : kAllCategories) {
    if (to_string(c) == name) return c;
  }
  throw Error(ErrorKind::Format, "unknown kernel category '" + std::string(name) + "'");
}

std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::Full: return "full";
    case RunMode::BatchWise: return "batchwise";
    case RunMode::LayerWise: return "layerwise";
  }
  return "full";
}

RunMode parse_run_mode(std::string_view name) {
  if (name == "full") return RunMode::Full;
  if (name == "batchwise" || name == "batch-wise") return RunMode::BatchWise;
  if (name == "layerwise" || name == "layer-wise") return RunMode::LayerWise;
  throw Error(ErrorKind::Config, "unknown run mode '" + std::string(name) + "'");
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  throw Error(ErrorKind::Config, "unknown report format '" + std::string(name) + "'");
}

std::vector<std::size_t> ModelTemplate::dims_for(std::size_t hidden) const {
  if (num_layers == 0) throw Error(ErrorKind::Config, "model template needs >= 1 layer");
  std::vector<std::size_t> dims{in_dim};
  for (std::size_t l = 1; l < num_layers; ++l) dims.push_back(hidden);
  dims.push_back(out_dim);
  return dims;
}

std::string digest(const FeatureMatrix& m) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t shape[2] = {m.num_rows(), m.dim()};
  mix(shape, sizeof(shape));
  mix(m.values().data(), m.values().size_bytes());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BreakdownReport run_characterization(const CsrGraph& g, const FeatureMatrix& x,
                                     const GcnModel& model, const CharacterizationConfig& cfg) {
  if (cfg.reps == 0) throw Error(ErrorKind::Config, "reps must be >= 1");
  model.validate();
  if (cfg.device) cfg.device->validate();
  const SamplingMode sampling_mode =
      cfg.mode == RunMode::LayerWise ? SamplingMode::LayerWise : SamplingMode::BatchWise;
  const SamplingConfig sampling{sampling_mode, cfg.batch_size};
  if (cfg.mode != RunMode::Full) sampling.validate();

  BreakdownReport report;
  RunMetadata& meta = report.meta;
  meta.graph = compute_stats(g);
  meta.dims = model.dims();
  meta.embedding_dim = meta.dims.size() > 2 ? meta.dims[1] : meta.dims.back();
  meta.mode = std::string(to_string(cfg.mode));
  meta.aggregation = std::string(to_string(model.aggregation));
  meta.self_loops = model.self_loops;
  meta.batch_size = cfg.mode == RunMode::Full ? g.num_vertices() : cfg.batch_size;
  meta.seed = cfg.seed;
  meta.reps = cfg.reps;
  meta.offload_modeled = cfg.device.has_value();

  std::vector<RepResult> reps;
  reps.reserve(cfg.reps);
  for (std::size_t rep = 0; rep < cfg.reps; ++rep) {
    Profiler profiler;
    RunContext ctx;
    ctx.profiler = &profiler;
    std::uint64_t num_batches = 0;
    std::uint64_t expanded = 0;
    std::uint64_t sub_edges = 0;
    std::uint64_t bytes = 0;
    ctx.on_batch = [&](const TraceRecord& t) {
      ++num_batches;
      expanded += t.num_expanded;
      sub_edges += t.subgraph_edges;
      bytes += t.bytes_in + t.bytes_out;
      if (rep == 0 && cfg.on_batch) cfg.on_batch(t);
    };

    const auto start = Profiler::Clock::now();
    FeatureMatrix out;
    switch (cfg.mode) {
      case RunMode::Full: out = full_graph_inference(g, x, model, &profiler); break;
      case RunMode::BatchWise: out = run_batchwise(g, x, model, sampling, &ctx); break;
      case RunMode::LayerWise: out = run_layerwise(g, x, model, sampling, &ctx); break;
    }
    const std::chrono::duration<double> wall = Profiler::Clock::now() - start;

    if (rep == 0) {
      meta.output_digest = digest(out);
      if (cfg.mode == RunMode::Full) {
        meta.num_batches = 1;
        meta.total_expanded = g.num_vertices();
        meta.total_subgraph_edges = g.num_edges();
        meta.bytes_moved = adjacency_bytes(g.num_vertices(), g.num_edges()) +
                           batch_transfer_bytes(g.num_vertices(), g.num_vertices(),
                                                model.in_dim(), model.out_dim(), sizeof(float));
      } else {
        meta.num_batches = num_batches;
        meta.total_expanded = expanded;
        meta.total_subgraph_edges = sub_edges;
        meta.bytes_moved = bytes;
      }
    }

    RepResult r;
    r.wall = wall.count();
    r.seconds = profiler.all();
    const double measured = r.seconds[idx(KernelCategory::SpMM)] +
                            r.seconds[idx(KernelCategory::DenseMM)] +
                            r.seconds[idx(KernelCategory::Sampling)];
    r.seconds[idx(KernelCategory::Glue)] = std::max(0.0, r.wall - measured);
    r.seconds[idx(KernelCategory::Offload)] = 0.0;
    reps.push_back(r);
  }

  if (cfg.device) {
    const DeviceModel& dev = *cfg.device;
    if (cfg.mode == RunMode::Full) {
      meta.cost = est_fullgraph_offload(meta.graph, meta.dims, dev);
    } else {
      const WorkloadSpec w = workload_from_stats(meta.graph, meta.dims, cfg.batch_size, sampling_mode);
      meta.cost = sampling_mode == SamplingMode::BatchWise ? est_batchwise_movement(w, dev)
                                                           : est_layerwise_movement(w, dev);
    }
    // Sampled runs are charged for the bytes they actually staged, using the
    // same per-batch formula the analytical model applies.
    const double offload =
        static_cast<double>(meta.bytes_moved * dev.element_size / sizeof(float)) /
        dev.link_bandwidth;
    for (auto& r : reps) r.seconds[idx(KernelCategory::Offload)] = offload;
  }

  for (auto& r : reps) r.total = std::accumulate(r.seconds.begin(), r.seconds.end(), 0.0);
  std::vector<std::size_t> order(reps.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return reps[a].total < reps[b].total; });
  const RepResult& median = reps[order[order.size() / 2]];

  report.seconds = median.seconds;
  finalize_fractions(report);
  report.precision_warning = median.wall < 1e-6;
  return report;
}

SweepResult run_sweep(const CsrGraph& g, const FeatureMatrix& x, const ModelTemplate& tmpl,
                      std::span<const std::size_t> hidden_dims,
                      const CharacterizationConfig& cfg) {
  if (hidden_dims.empty()) throw Error(ErrorKind::Config, "sweep needs at least one dim");
  for (std::size_t i = 1; i < hidden_dims.size(); ++i) {
    if (hidden_dims[i] <= hidden_dims[i - 1]) {
      throw Error(ErrorKind::Config, "sweep dims must be strictly increasing");
    }
  }
  if (x.dim() != tmpl.in_dim) {
    throw Error(ErrorKind::Shape, "features have dim " + std::to_string(x.dim()) +
                                      ", template expects " + std::to_string(tmpl.in_dim));
  }
  const GraphStats stats = compute_stats(g);

  SweepResult result;
  for (std::size_t hidden : hidden_dims) {
    SweepEntry entry;
    entry.embedding_dim = hidden;
    const auto dims = tmpl.dims_for(hidden);
    try {
      if (cfg.device) {
        if (cfg.mode == RunMode::Full) {
          entry.cost = est_fullgraph_offload(stats, dims, *cfg.device);
        } else {
          const SamplingMode sm = cfg.mode == RunMode::LayerWise ? SamplingMode::LayerWise
                                                                 : SamplingMode::BatchWise;
          const WorkloadSpec w = workload_from_stats(stats, dims, cfg.batch_size, sm);
          const std::uint64_t need = device_footprint(w, *cfg.device, sm);
          if (need > cfg.device->memory_capacity) {
            throw Error(ErrorKind::Capacity,
                        "batch of " + std::to_string(cfg.batch_size) + " needs " +
                            human_bytes(static_cast<double>(need)));
          }
        }
      }
      const GcnModel model =
          make_model(dims, cfg.seed, tmpl.aggregation, tmpl.self_loops, tmpl.with_bias);
      CharacterizationConfig run_cfg = cfg;
      run_cfg.on_batch = nullptr;
      BreakdownReport report = run_characterization(g, x, model, run_cfg);
      report.meta.embedding_dim = hidden;
      if (report.meta.cost) entry.cost = report.meta.cost;
      entry.breakdown = std::move(report);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Capacity && e.kind() != ErrorKind::Infeasible) throw;
      entry.feasible = false;
      entry.infeasible_reason = e.what();
      entry.breakdown.reset();
    }
    result.entries.push_back(std::move(entry));
  }
  return result;
}

double compare_speedup(const BreakdownReport& a, const BreakdownReport& b) {
  if (a.meta.graph.num_vertices != b.meta.graph.num_vertices ||
      a.meta.graph.num_edges != b.meta.graph.num_edges || a.meta.dims != b.meta.dims) {
    throw Error(ErrorKind::Comparison, "reports describe different workloads");
  }
  if (b.total_seconds <= 0.0) {
    throw Error(ErrorKind::Comparison, "baseline report has no recorded time");
  }
  return a.total_seconds / b.total_seconds;
}

// ---- serialization ----------------------------------------------------------

nlohmann::ordered_json to_json(const BreakdownReport& r) {
  const RunMetadata& m = r.meta;
  nlohmann::ordered_json j;
  j["metadata"] = {
      {"graph",
       {{"num_vertices", m.graph.num_vertices},
        {"num_edges", m.graph.num_edges},
        {"density", m.graph.density},
        {"avg_degree", m.graph.avg_degree},
        {"max_degree", m.graph.max_degree}}},
      {"dims", m.dims},
      {"embedding_dim", m.embedding_dim},
      {"mode", m.mode},
      {"aggregation", m.aggregation},
      {"self_loops", m.self_loops},
      {"batch_size", m.batch_size},
      {"seed", m.seed},
      {"reps", m.reps},
      {"offload", m.offload_modeled ? "modeled" : "none"},
  };
  j["work"] = {
      {"num_batches", m.num_batches},
      {"total_expanded", m.total_expanded},
      {"total_subgraph_edges", m.total_subgraph_edges},
      {"bytes_moved", m.bytes_moved},
      {"output_digest", m.output_digest},
  };
  j["cost"] = m.cost ? to_json(*m.cost) : nlohmann::ordered_json(nullptr);

  nlohmann::ordered_json seconds;
  nlohmann::ordered_json fractions;
  for (auto c : kAllCategories) {
    seconds[std::string(to_string(c))] = r.seconds_of(c);
    fractions[std::string(to_string(c))] = r.fraction_of(c);
  }
  j["timing"] = {
      {"seconds", seconds},
      {"fractions", fractions},
      {"total_seconds", r.total_seconds},
      {"precision_warning", r.precision_warning},
  };
  return j;
}

BreakdownReport breakdown_from_json(const nlohmann::json& j) {
  BreakdownReport r;
  RunMetadata& m = r.meta;
  const auto& md = j.at("metadata");
  const auto& gj = md.at("graph");
  m.graph.num_vertices = gj.at("num_vertices").get<std::uint64_t>();
  m.graph.num_edges = gj.at("num_edges").get<std::uint64_t>();
  m.graph.density = gj.at("density").get<double>();
  m.graph.avg_degree = gj.at("avg_degree").get<double>();
  m.graph.max_degree = gj.at("max_degree").get<std::uint64_t>();
  m.dims = md.at("dims").get<std::vector<std::size_t>>();
  m.embedding_dim = md.at("embedding_dim").get<std::size_t>();
  m.mode = md.at("mode").get<std::string>();
  m.aggregation = md.at("aggregation").get<std::string>();
  m.self_loops = md.at("self_loops").get<bool>();
  m.batch_size = md.at("batch_size").get<std::uint64_t>();
  m.seed = md.at("seed").get<std::uint64_t>();
  m.reps = md.at("reps").get<std::uint64_t>();
  m.offload_modeled = md.at("offload").get<std::string>() == "modeled";

  const auto& wj = j.at("work");
  m.num_batches = wj.at("num_batches").get<std::uint64_t>();
  m.total_expanded = wj.at("total_expanded").get<std::uint64_t>();
  m.total_subgraph_edges = wj.at("total_subgraph_edges").get<std::uint64_t>();
  m.bytes_moved = wj.at("bytes_moved").get<std::uint64_t>();
  m.output_digest = wj.at("output_digest").get<std::string>();
  if (!j.at("cost").is_null()) m.cost = cost_report_from_json(j.at("cost"));

  const auto& tj = j.at("timing");
  for (auto c : kAllCategories) {
    r.seconds[idx(c)] = tj.at("seconds").at(std::string(to_string(c))).get<double>();
    r.fractions[idx(c)] = tj.at("fractions").at(std::string(to_string(c))).get<double>();
  }
  r.total_seconds = tj.at("total_seconds").get<double>();
  r.precision_warning = tj.at("precision_warning").get<bool>();
  return r;
}

nlohmann::ordered_json to_json(const SweepResult& r) {
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (const auto& e : r.entries) {
    nlohmann::ordered_json j;
    j["embedding_dim"] = e.embedding_dim;
    j["feasible"] = e.feasible;
    j["infeasible_reason"] = e.infeasible_reason;
    j["breakdown"] = e.breakdown ? to_json(*e.breakdown) : nlohmann::ordered_json(nullptr);
    j["cost"] = e.cost ? to_json(*e.cost) : nlohmann::ordered_json(nullptr);
    entries.push_back(std::move(j));
  }
  return nlohmann::ordered_json{{"sweep", std::move(entries)}};
}

SweepResult sweep_from_json(const nlohmann::json& j) {
  SweepResult r;
  for (const auto& ej : j.at("sweep")) {
    SweepEntry e;
    e.embedding_dim = ej.at("embedding_dim").get<std::size_t>();
    e.feasible = ej.at("feasible").get<bool>();
    e.infeasible_reason = ej.at("infeasible_reason").get<std::string>();
    if (!ej.at("breakdown").is_null()) e.breakdown = breakdown_from_json(ej.at("breakdown"));
    if (!ej.at("cost").is_null()) e.cost = cost_report_from_json(ej.at("cost"));
    r.entries.push_back(std::move(e));
  }
  return r;
}

namespace {

constexpr const char* kCsvHeader =
    "embedding_dim,mode,category,seconds,fraction,total_seconds,offload\n";

void append_csv_rows(std::ostringstream& os, const BreakdownReport& r) {
  os.precision(17);
  for (auto c : kAllCategories) {
    os << r.meta.embedding_dim << ',' << r.meta.mode << ',' << to_string(c) << ','
       << r.seconds_of(c) << ',' << r.fraction_of(c) << ',' << r.total_seconds << ','
       << (r.meta.offload_modeled ? "modeled" : "none") << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write report: " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

}  // namespace

std::string to_csv(const BreakdownReport& r) {
  std::ostringstream os;
  os << kCsvHeader;
  append_csv_rows(os, r);
  return os.str();
}

std::string to_csv(const SweepResult& r) {
  std::ostringstream os;
  os << kCsvHeader;
  for (const auto& e : r.entries) {
    if (e.breakdown) append_csv_rows(os, *e.breakdown);
  }
  return os.str();
}

void emit_report(const BreakdownReport& r, ReportFormat format,
                 const std::filesystem::path& path) {
  write_text(path, format == ReportFormat::Json ? to_json(r).dump(2) + "\n" : to_csv(r));
}

void emit_report(const SweepResult& r, ReportFormat format, const std::filesystem::path& path) {
  write_text(path, format == ReportFormat::Json ? to_json(r).dump(2) + "\n" : to_csv(r));
}

}  // namespace gcnbench
