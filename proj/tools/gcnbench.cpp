// gcnbench: graph generation, conversion, inference characterization and
// offload cost estimation from the command line.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gcnbench/bench.hpp"
#include "gcnbench/cost_model.hpp"
#include "gcnbench/error.hpp"
#include "gcnbench/gcn.hpp"
#include "gcnbench/graph.hpp"
#include "gcnbench/sampler.hpp"

using namespace gcnbench;

namespace {

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
      dims.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::Config, "bad dimension '" + item + "' in '" + text + "'");
    }
  }
  if (dims.empty()) throw Error(ErrorKind::Config, "empty dimension list");
  return dims;
}

bool has_binary_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::string(magic, 4) == "GCSR";
}

CsrGraph load_any_graph(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::Io, "no such file: " + path);
  const auto ext = std::filesystem::path(path).extension();
  if (ext == ".csr" || ext == ".bin" || has_binary_magic(path)) return load_binary(path);
  return load_edge_list(path);
}

struct DeviceFlags {
  std::optional<double> capacity;  // double so "40e9" parses
  std::optional<double> bandwidth;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--device-capacity", capacity, "Modeled device memory in bytes");
    cmd->add_option("--bandwidth", bandwidth, "Modeled host-device link in bytes/s");
  }
  std::optional<DeviceModel> model() const {
    if (!capacity && !bandwidth) return std::nullopt;
    DeviceModel dev = DeviceModel::a100_pcie4();
    if (capacity) {
      if (!(*capacity >= 1.0 && *capacity < 1.8e19) || std::floor(*capacity) != *capacity) {
        throw Error(ErrorKind::Config, "--device-capacity must be a whole number of bytes");
      }
      dev.memory_capacity = static_cast<std::uint64_t>(*capacity);
    }
    if (bandwidth) dev.link_bandwidth = *bandwidth;
    dev.validate();
    return dev;
  }
};

struct RunFlags {
  std::string graph;
  std::string features;
  std::optional<std::uint64_t> feat_seed;
  std::uint64_t seed = 1;
  std::string mode = "full";
  std::size_t batch_size = 1024;
  std::size_t reps = 5;
  std::string aggregation = "sum";
  bool self_loops = false;
  std::string report;
  std::string format = "json";
  DeviceFlags device;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--graph", graph, "Binary CSR or edge-list file")->required();
    cmd->add_option("--features", features, "Feature matrix file");
    cmd->add_option("--feat-seed", feat_seed, "Generate features from this seed");
    cmd->add_option("--seed", seed, "Weight initialization seed");
    cmd->add_option("--mode", mode, "full | batchwise | layerwise");
    cmd->add_option("--batch-size", batch_size, "Targets per mini-batch");
    cmd->add_option("--reps", reps, "Repetitions (median reported)");
    cmd->add_option("--aggregation", aggregation, "sum | mean | sym-norm");
    cmd->add_flag("--self-loops", self_loops, "Add each vertex to its own neighborhood");
    cmd->add_option("--report", report, "Write the report here instead of stdout");
    cmd->add_option("--format", format, "json | csv");
    device.add_to(cmd);
  }

  FeatureMatrix load_features(std::size_t rows, std::size_t dim) const {
    if (!features.empty()) {
      FeatureMatrix x = gcnbench::load_features(features);
      if (x.num_rows() != rows || x.dim() != dim) {
        throw Error(ErrorKind::Config, "feature file shape does not match graph and dims");
      }
      return x;
    }
    if (!feat_seed) throw Error(ErrorKind::Config, "need --features or --feat-seed");
    return gen_features(rows, dim, *feat_seed);
  }

  CharacterizationConfig config() const {
    CharacterizationConfig cfg;
    cfg.mode = parse_run_mode(mode);
    cfg.batch_size = batch_size;
    cfg.device = device.model();
    cfg.reps = reps;
    cfg.seed = seed;
    return cfg;
  }
};

template <typename Report>
void write_report(const Report& r, const std::string& format, const std::string& path) {
  const ReportFormat fmt = parse_report_format(format);
  if (!path.empty()) {
    emit_report(r, fmt, path);
  } else if (fmt == ReportFormat::Json) {
    std::cout << to_json(r).dump(2) << '\n';
  } else {
    std::cout << to_csv(r);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GCN inference characterization and offload cost modeling"};
  app.require_subcommand(1);

  // gen
  std::string gen_model = "erdos-renyi";
  std::size_t gen_vertices = 0;
  std::size_t gen_edges = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  bool gen_text = false;
  auto* gen = app.add_subcommand("gen", "Generate a random graph");
  gen->add_option("--model", gen_model, "erdos-renyi | rmat");
  gen->add_option("--vertices", gen_vertices)->required();
  gen->add_option("--edges", gen_edges)->required();
  gen->add_option("--seed", gen_seed);
  gen->add_option("--out", gen_out)->required();
  gen->add_flag("--edge-list", gen_text, "Write a text edge list instead of binary CSR");

  // convert
  std::string conv_in;
  std::string conv_out;
  std::optional<std::size_t> conv_vertices;
  auto* convert = app.add_subcommand("convert", "Convert an edge list to binary CSR");
  convert->add_option("--input", conv_in)->required();
  convert->add_option("--output", conv_out)->required();
  convert->add_option("--num-vertices", conv_vertices);

  // stats
  std::string stats_graph;
  auto* stats = app.add_subcommand("stats", "Print graph statistics as JSON");
  stats->add_option("--graph", stats_graph)->required();

  // infer
  RunFlags infer_flags;
  std::string infer_dims;
  std::string trace_path;
  auto* infer = app.add_subcommand("infer", "Run and time GCN inference");
  infer_flags.add_to(infer);
  infer->add_option("--dims", infer_dims, "Layer widths, e.g. 100,256,47")->required();
  infer->add_option("--trace", trace_path, "Per-batch JSON-lines trace");

  // sweep
  RunFlags sweep_flags;
  std::string sweep_dims = "8,16,32,64,128,256";
  std::size_t sweep_in = 0;
  std::size_t sweep_out = 0;
  std::size_t sweep_layers = 2;
  auto* sweep = app.add_subcommand("sweep", "Sweep the hidden embedding dimension");
  sweep_flags.add_to(sweep);
  sweep->add_option("--dims-list", sweep_dims, "Hidden dims, strictly increasing");
  sweep->add_option("--in-dim", sweep_in)->required();
  sweep->add_option("--out-dim", sweep_out)->required();
  sweep->add_option("--layers", sweep_layers, "Number of GCN layers");

  // cost
  std::string cost_stats;
  std::string cost_graph;
  std::string cost_dims;
  std::string cost_mode = "batchwise";
  std::optional<std::uint64_t> cost_batch;
  bool cost_solve = false;
  std::optional<double> cost_degree;
  std::optional<std::uint64_t> cost_expanded;
  DeviceFlags cost_device;
  auto* cost = app.add_subcommand("cost", "Analytical offload estimates");
  auto* stats_opt = cost->add_option("--stats", cost_stats, "V,E pair");
  cost->add_option("--graph", cost_graph)->excludes(stats_opt);
  cost->add_option("--dims", cost_dims)->required();
  cost->add_option("--mode", cost_mode, "batchwise | layerwise | full");
  auto* batch_opt = cost->add_option("--batch-size", cost_batch);
  cost->add_flag("--solve-batch-size", cost_solve, "Find the largest batch that fits")
      ->excludes(batch_opt);
  cost->add_option("--avg-degree", cost_degree, "Override E/V");
  cost->add_option("--expanded", cost_expanded, "Override expanded vertices per batch");
  cost_device.add_to(cost);

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      app.exit(e);
      return 2;
    }
    configure_threads_from_env();

    if (*gen) {
      const CsrGraph g =
          gen_random_graph(parse_graph_model(gen_model), gen_vertices, gen_edges, gen_seed);
      if (gen_text) {
        std::ofstream out(gen_out);
        if (!out) throw Error(ErrorKind::Io, "cannot write " + gen_out);
        for (VertexId v = 0; v < g.num_vertices(); ++v) {
          for (VertexId u : g.neighbors(v)) out << v << ' ' << u << '\n';
        }
        if (!out) throw Error(ErrorKind::Io, "write failed: " + gen_out);
      } else {
        save_binary(g, gen_out);
      }
    } else if (*convert) {
      save_binary(load_edge_list(conv_in, conv_vertices), conv_out);
    } else if (*stats) {
      const GraphStats s = compute_stats(load_any_graph(stats_graph));
      nlohmann::ordered_json j{{"num_vertices", s.num_vertices},
                               {"num_edges", s.num_edges},
                               {"density", s.density},
                               {"avg_degree", s.avg_degree},
                               {"max_degree", s.max_degree}};
      std::cout << j.dump(2) << '\n';
    } else if (*infer) {
      const CsrGraph g = load_any_graph(infer_flags.graph);
      const auto dims = parse_dims(infer_dims);
      const FeatureMatrix x = infer_flags.load_features(g.num_vertices(), dims.front());
      const GcnModel model = make_model(dims, infer_flags.seed,
                                        parse_aggregation(infer_flags.aggregation),
                                        infer_flags.self_loops);
      CharacterizationConfig cfg = infer_flags.config();
      std::ofstream trace;
      if (!trace_path.empty()) {
        trace.open(trace_path, std::ios::trunc);
        if (!trace) throw Error(ErrorKind::Io, "cannot write trace " + trace_path);
        cfg.on_batch = [&trace](const TraceRecord& r) { trace << to_json_line(r) << '\n'; };
      }
      const BreakdownReport r = run_characterization(g, x, model, cfg);
      write_report(r, infer_flags.format, infer_flags.report);
    } else if (*sweep) {
      const CsrGraph g = load_any_graph(sweep_flags.graph);
      const auto hidden = parse_dims(sweep_dims);
      const FeatureMatrix x = sweep_flags.load_features(g.num_vertices(), sweep_in);
      ModelTemplate tmpl;
      tmpl.in_dim = sweep_in;
      tmpl.out_dim = sweep_out;
      tmpl.num_layers = sweep_layers;
      tmpl.aggregation = parse_aggregation(sweep_flags.aggregation);
      tmpl.self_loops = sweep_flags.self_loops;
      const SweepResult r = run_sweep(g, x, tmpl, hidden, sweep_flags.config());
      write_report(r, sweep_flags.format, sweep_flags.report);
    } else if (*cost) {
      GraphStats s;
      if (!cost_graph.empty()) {
        s = compute_stats(load_any_graph(cost_graph));
      } else if (!cost_stats.empty()) {
        const auto ve = parse_dims(cost_stats);
        if (ve.size() != 2) throw Error(ErrorKind::Config, "--stats expects V,E");
        s = stats_from_counts(ve[0], ve[1]);
      } else {
        throw Error(ErrorKind::Config, "need --stats or --graph");
      }
      const auto dims = parse_dims(cost_dims);
      const DeviceModel dev = cost_device.model().value_or(DeviceModel::a100_pcie4());
      nlohmann::ordered_json out;
      if (cost_mode == "full") {
        out = to_json(est_fullgraph_offload(s, dims, dev));
      } else {
        const SamplingMode mode = parse_sampling_mode(cost_mode);
        WorkloadSpec w = workload_from_stats(s, dims, cost_batch.value_or(1), mode);
        if (cost_degree) w.avg_degree = *cost_degree;
        w.expanded_override = cost_expanded;
        if (cost_solve) {
          w.batch_size = max_batch_size(w, dev, mode);
        } else if (!cost_batch) {
          throw Error(ErrorKind::Config, "need --batch-size or --solve-batch-size");
        }
        out = to_json(mode == SamplingMode::BatchWise ? est_batchwise_movement(w, dev)
                                                       : est_layerwise_movement(w, dev));
        out["batch_size"] = w.batch_size;
        out["host_footprint"] = est_host_footprint(w, mode, dev.element_size);
      }
      std::cout << out.dump(2) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "gcnbench: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "gcnbench: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "gcnbench: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
