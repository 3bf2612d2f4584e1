#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ansatz.hpp"
#include "errors.hpp"
#include "exact.hpp"
#include "lattice.hpp"
#include "observables.hpp"
#include "vqe.hpp"

namespace isingvqe {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kConfigSchema = 1;
inline constexpr const char* kOutputDirEnv = "ISINGVQE_OUTPUT_DIR";

using json = nlohmann::json;

struct LatticeConfig {
  int dims = 1;
  std::vector<int> extents{10};
  bool dedupe = false;
};

struct ObservableFlags {
  bool variance = true;
  bool magnetization = true;
  bool spin_correlation = true;
  bool entropy_single_site = true;
  bool entropy_half = true;
  int entropy_site = 0;
  std::optional<std::vector<int>> partition;  // default: first floor(N/2) sites
};

struct OracleConfig {
  bool enabled = false;
  int k = 1;
  EigenMethod method = EigenMethod::Auto;
};

struct OutputConfig {
  std::string directory = "results";
  std::string prefix = "run";
  bool csv = true;
  bool manifest = true;
  bool timing = false;
};

struct FramePotentialConfig {
  std::vector<AnsatzSpec> ansatze;
  int n_samples = 10000;
  int t = 1;
  int bins = 50;
  bool haar_baseline = true;
  bool raw_overlaps = false;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  LatticeConfig lattice;
  double j_z = -1.0;
  std::vector<double> field_grid;
  AnsatzSpec ansatz;
  OptimizerConfig optimizer = default_optimizer(AnsatzKind::HVA);
  bool warm_start = true;
  bool cold_parallel = false;
  ObservableFlags observables;
  OracleConfig oracle;
  OutputConfig output;
  FramePotentialConfig frame_potential;

  Lattice build_lattice() const { return Lattice(lattice.dims, lattice.extents); }
};

constexpr std::string_view to_string(EigenMethod m) noexcept {
  switch (m) {
    case EigenMethod::Auto: return "auto";
    case EigenMethod::Dense: return "dense";
    case EigenMethod::Lanczos: return "lanczos";
  }
  return "?";
}

inline std::string ansatz_label(const AnsatzSpec& s) {
  std::string l(to_string(s.kind));
  if (s.kind == AnsatzKind::HEA && s.real_amplitudes) l += "-RA";
  return l;
}

/// Field values start, start + step, ... up to stop (inclusive within step/1e6),
/// each rounded to 12 significant digits so that 0.1 * 3 prints as 0.3.
inline std::vector<double> field_range(double start, double stop, double step) {
  if (!(step > 0) || !std::isfinite(start) || !std::isfinite(stop) || stop < start) {
    throw DomainError("field_range: need finite start <= stop and step > 0");
  }
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-6));
  std::vector<double> g;
  for (long i = 0; i <= n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", start + static_cast<double>(i) * step);
    g.push_back(std::strtod(buf, nullptr));
  }
  return g;
}

namespace detail {

/// Object reader that tracks its JSON path and rejects unknown keys.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(display(), "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    if (!j_.contains(key)) return false;
    used_.insert(key);
    return true;
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(j_.at(key), at(key));
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(at(key), "required field is missing");
    return convert<T>(j_.at(key), at(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(at(k), "unknown field");
    }
  }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
      if (!ok) {
        throw ConfigError(path, "expected a non-negative integer");
      }
      return v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path, "expected a number");
      const double d = v.get<double>();
      if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
      return d;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path, "expected a string");
      return v.get<std::string>();
    } else {
      if (!v.is_array()) throw ConfigError(path, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      }
      return out;
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline AnsatzSpec parse_ansatz(Fields& f) {
  AnsatzSpec a;
  try {
    a.kind = parse_ansatz_kind(f.require<std::string>("kind"));
  } catch (const DomainError& e) {
    throw ConfigError(f.at("kind"), e.what());
  }
  a.n_layers = f.get<int>("layers", 1);
  if (a.n_layers < 1) throw ConfigError(f.at("layers"), "must be >= 1");
  a.real_amplitudes = f.get<bool>("real_amplitudes", false);
  if (f.has("entanglement")) {
    try {
      a.entanglement = parse_entanglement(f.get<std::string>("entanglement", ""));
    } catch (const DomainError& e) {
      throw ConfigError(f.at("entanglement"), e.what());
    }
  }
  f.finish();
  return a;
}

inline std::vector<double> parse_grid(const json& v, const std::string& path) {
  std::vector<double> g;
  if (v.is_object()) {
    Fields r(v, path);
    const double start = r.require<double>("start");
    const double stop = r.require<double>("stop");
    const double step = r.require<double>("step");
    r.finish();
    if (!(step > 0)) throw ConfigError(path + ".step", "must be > 0");
    if (stop < start) throw ConfigError(path + ".stop", "must be >= start");
    g = field_range(start, stop, step);
  } else {
    g = Fields::convert<std::vector<double>>(v, path);
  }
  if (g.empty()) throw ConfigError(path, "field grid is empty");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!(g[i] > g[i - 1])) throw ConfigError(path + "[" + std::to_string(i) + "]", "field grid must be strictly ascending");
  }
  return g;
}

}  // namespace detail

/// Parses and validates a schema-1 experiment document. Every error names
/// the offending field path.
inline ExperimentConfig parse_config(const json& doc) {
  using detail::Fields;
  ExperimentConfig c;
  Fields root(doc, "");
  const int schema = root.require<int>("schema");
  if (schema != kConfigSchema) throw ConfigError("schema", "unsupported schema version " + std::to_string(schema));
  c.seed = root.get<std::uint64_t>("seed", 1);

  if (!root.has("lattice")) throw ConfigError("lattice", "required field is missing");
  {
    Fields f(root.raw("lattice"), "lattice");
    c.lattice.dims = f.require<int>("dims");
    c.lattice.extents = f.require<std::vector<int>>("extents");
    c.lattice.dedupe = f.get<bool>("dedupe", false);
    f.finish();
    if (c.lattice.dims < 1 || c.lattice.dims > 3) throw ConfigError("lattice.dims", "must be 1, 2 or 3");
    if (static_cast<int>(c.lattice.extents.size()) != c.lattice.dims) {
      throw ConfigError("lattice.extents", "need exactly one extent per dimension");
    }
    long sites = 1;
    for (std::size_t i = 0; i < c.lattice.extents.size(); ++i) {
      if (c.lattice.extents[i] < 2) throw ConfigError("lattice.extents[" + std::to_string(i) + "]", "must be >= 2");
      sites *= c.lattice.extents[i];
      if (sites > StateVector::kMaxQubits) {
        throw ConfigError("lattice.extents", "more than " + std::to_string(StateVector::kMaxQubits) + " sites");
      }
    }
  }
  const int n_sites = c.build_lattice().n_sites();

  if (root.has("model")) {
    Fields f(root.raw("model"), "model");
    c.j_z = f.get<double>("j_z", -1.0);
    if (!f.has("field_grid")) throw ConfigError("model.field_grid", "required field is missing");
    c.field_grid = detail::parse_grid(f.raw("field_grid"), "model.field_grid");
    f.finish();
  }

  if (root.has("ansatz")) {
    Fields f(root.raw("ansatz"), "ansatz");
    c.ansatz = detail::parse_ansatz(f);
  }
  if (c.ansatz.kind == AnsatzKind::HEA && n_sites < 2) throw ConfigError("ansatz.kind", "HEA needs at least 2 qubits");

  c.optimizer = default_optimizer(c.ansatz.kind);
  if (root.has("optimizer")) {
    Fields f(root.raw("optimizer"), "optimizer");
    auto& o = c.optimizer;
    if (f.has("method")) {
      try {
        o.method = parse_method(f.get<std::string>("method", ""));
      } catch (const DomainError& e) {
        throw ConfigError("optimizer.method", e.what());
      }
    }
    o.max_iterations = f.get<int>("max_iterations", o.max_iterations);
    o.gradient_tolerance = f.get<double>("gradient_tolerance", o.gradient_tolerance);
    o.simplex_tolerance = f.get<double>("simplex_tolerance", o.simplex_tolerance);
    o.simplex_step = f.get<double>("simplex_step", o.simplex_step);
    o.history_size = f.get<int>("history_size", o.history_size);
    o.n_restarts = f.get<int>("n_restarts", o.n_restarts);
    o.init_scale = f.get<double>("init_scale", o.init_scale);
    c.warm_start = f.get<bool>("warm_start", c.warm_start);
    c.cold_parallel = f.get<bool>("cold_parallel", c.cold_parallel);
    f.finish();
    if (o.max_iterations < 1) throw ConfigError("optimizer.max_iterations", "must be >= 1");
    if (!(o.gradient_tolerance > 0)) throw ConfigError("optimizer.gradient_tolerance", "must be > 0");
    if (!(o.simplex_tolerance > 0)) throw ConfigError("optimizer.simplex_tolerance", "must be > 0");
    if (!(o.simplex_step > 0)) throw ConfigError("optimizer.simplex_step", "must be > 0");
    if (o.history_size < 1) throw ConfigError("optimizer.history_size", "must be >= 1");
    if (o.n_restarts < 1) throw ConfigError("optimizer.n_restarts", "must be >= 1");
    if (!(o.init_scale >= 0)) throw ConfigError("optimizer.init_scale", "must be >= 0");
  }
  c.optimizer.seed = c.seed;

  if (root.has("observables")) {
    Fields f(root.raw("observables"), "observables");
    auto& o = c.observables;
    o.variance = f.get<bool>("variance", o.variance);
    o.magnetization = f.get<bool>("magnetization", o.magnetization);
    o.spin_correlation = f.get<bool>("spin_correlation", o.spin_correlation);
    o.entropy_single_site = f.get<bool>("entropy_single_site", o.entropy_single_site);
    o.entropy_half = f.get<bool>("entropy_half", o.entropy_half);
    o.entropy_site = f.get<int>("entropy_site", o.entropy_site);
    if (f.has("partition")) o.partition = f.get<std::vector<int>>("partition", {});
    f.finish();
    if (o.entropy_site < 0 || o.entropy_site >= n_sites) throw ConfigError("observables.entropy_site", "site out of range");
    if (o.partition) {
      const auto& p = *o.partition;
      if (p.empty() || static_cast<int>(p.size()) >= n_sites) {
        throw ConfigError("observables.partition", "must be a proper non-empty subset of the sites");
      }
      std::set<int> seen;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const std::string path = "observables.partition[" + std::to_string(i) + "]";
        if (p[i] < 0 || p[i] >= n_sites) throw ConfigError(path, "site out of range");
        if (!seen.insert(p[i]).second) throw ConfigError(path, "duplicate site");
      }
    }
  }

  if (root.has("oracle")) {
    Fields f(root.raw("oracle"), "oracle");
    c.oracle.enabled = f.get<bool>("enabled", false);
    c.oracle.k = f.get<int>("k", 1);
    const std::string m = f.get<std::string>("method", "auto");
    f.finish();
    if (c.oracle.k < 1) throw ConfigError("oracle.k", "must be >= 1");
    if (m == "auto") {
      c.oracle.method = EigenMethod::Auto;
    } else if (m == "dense") {
      c.oracle.method = EigenMethod::Dense;
    } else if (m == "lanczos") {
      c.oracle.method = EigenMethod::Lanczos;
    } else {
      throw ConfigError("oracle.method", "expected auto, dense or lanczos");
    }
  }

  if (root.has("output")) {
    Fields f(root.raw("output"), "output");
    auto& o = c.output;
    o.directory = f.get<std::string>("directory", o.directory);
    o.prefix = f.get<std::string>("prefix", o.prefix);
    o.timing = f.get<bool>("timing", o.timing);
    if (f.has("formats")) {
      const auto fm = f.get<std::vector<std::string>>("formats", {});
      o.csv = o.manifest = false;
      for (std::size_t i = 0; i < fm.size(); ++i) {
        if (fm[i] == "csv") {
          o.csv = true;
        } else if (fm[i] == "json") {
          o.manifest = true;
        } else {
          throw ConfigError("output.formats[" + std::to_string(i) + "]", "expected \"csv\" or \"json\"");
        }
      }
    }
    f.finish();
    if (o.prefix.empty() || o.prefix.find('/') != std::string::npos) {
      throw ConfigError("output.prefix", "must be a non-empty file name");
    }
  }

  if (root.has("frame_potential")) {
    Fields f(root.raw("frame_potential"), "frame_potential");
    auto& fp = c.frame_potential;
    if (f.has("ansatze")) {
      const json& arr = f.raw("ansatze");
      if (!arr.is_array()) throw ConfigError("frame_potential.ansatze", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Fields a(arr[i], "frame_potential.ansatze[" + std::to_string(i) + "]");
        fp.ansatze.push_back(detail::parse_ansatz(a));
      }
    }
    fp.n_samples = f.get<int>("n_samples", fp.n_samples);
    fp.t = f.get<int>("t", fp.t);
    fp.bins = f.get<int>("bins", fp.bins);
    fp.haar_baseline = f.get<bool>("haar_baseline", fp.haar_baseline);
    fp.raw_overlaps = f.get<bool>("raw_overlaps", fp.raw_overlaps);
    f.finish();
    if (fp.n_samples < 2) throw ConfigError("frame_potential.n_samples", "must be >= 2");
    if (fp.t < 1) throw ConfigError("frame_potential.t", "must be >= 1");
    if (fp.bins < 1) throw ConfigError("frame_potential.bins", "must be >= 1");
  }
  root.finish();
  return c;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("<file>", "cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline json ansatz_json(const AnsatzSpec& a) {
  return {{"kind", std::string(to_string(a.kind))},
          {"layers", a.n_layers},
          {"real_amplitudes", a.real_amplitudes},
          {"entanglement", std::string(to_string(a.entanglement))}};
}

}  // namespace detail

/// Fully expanded configuration with every default filled in.
inline json to_json(const ExperimentConfig& c) {
  json fp_ansatze = json::array();
  for (const auto& a : c.frame_potential.ansatze) fp_ansatze.push_back(detail::ansatz_json(a));
  json formats = json::array();
  if (c.output.csv) formats.push_back("csv");
  if (c.output.manifest) formats.push_back("json");
  json obs = {{"variance", c.observables.variance},
              {"magnetization", c.observables.magnetization},
              {"spin_correlation", c.observables.spin_correlation},
              {"entropy_single_site", c.observables.entropy_single_site},
              {"entropy_half", c.observables.entropy_half},
              {"entropy_site", c.observables.entropy_site}};
  if (c.observables.partition) obs["partition"] = *c.observables.partition;
  return {
      {"schema", kConfigSchema},
      {"seed", c.seed},
      {"lattice", {{"dims", c.lattice.dims}, {"extents", c.lattice.extents}, {"dedupe", c.lattice.dedupe}}},
      {"model", {{"j_z", c.j_z}, {"field_grid", c.field_grid}}},
      {"ansatz", detail::ansatz_json(c.ansatz)},
      {"optimizer",
       {{"method", std::string(to_string(c.optimizer.method))},
        {"max_iterations", c.optimizer.max_iterations},
        {"gradient_tolerance", c.optimizer.gradient_tolerance},
        {"simplex_tolerance", c.optimizer.simplex_tolerance},
        {"simplex_step", c.optimizer.simplex_step},
        {"history_size", c.optimizer.history_size},
        {"n_restarts", c.optimizer.n_restarts},
        {"init_scale", c.optimizer.init_scale},
        {"warm_start", c.warm_start},
        {"cold_parallel", c.cold_parallel}}},
      {"observables", obs},
      {"oracle", {{"enabled", c.oracle.enabled}, {"k", c.oracle.k}, {"method", std::string(to_string(c.oracle.method))}}},
      {"output",
       {{"directory", c.output.directory}, {"prefix", c.output.prefix}, {"formats", formats}, {"timing", c.output.timing}}},
      {"frame_potential",
       {{"ansatze", fp_ansatze},
        {"n_samples", c.frame_potential.n_samples},
        {"t", c.frame_potential.t},
        {"bins", c.frame_potential.bins},
        {"haar_baseline", c.frame_potential.haar_baseline},
        {"raw_overlaps", c.frame_potential.raw_overlaps}}},
  };
}

/// 64-bit FNV-1a of the canonical config JSON without the output section, as
/// 16 hex digits. Output location does not change the hash.
inline std::string config_hash(const ExperimentConfig& c) {
  json j = to_json(c);
  j.erase("output");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// One CSV row: the winning restart at one field value.
struct RunRecord {
  double h_x = 0.0;
  int dims = 1;
  std::string extents;
  int n_qubits = 0;
  std::string ansatz;
  int layers = 0;
  int n_params = 0;
  std::string optimizer;
  std::optional<int> restart_index;
  bool converged = false;
  std::optional<double> energy;
  std::optional<double> energy_per_site;
  std::optional<double> variance;
  std::optional<double> magnetization;
  std::optional<double> abs_magnetization;
  std::optional<double> spin_correlation;
  std::optional<double> entropy_single_site;
  std::optional<double> entropy_half;
  std::optional<double> oracle_energy;
  std::optional<double> oracle_entropy_single_site;
  int n_iterations = 0;
  int n_evaluations = 0;
  std::optional<double> wall_time_s;
  std::uint64_t seed = 0;

  // Not in the CSV; carried into the manifest.
  std::string config_hash;
  bool failed = false;
  std::string error;
  std::vector<double> best_params;
  std::vector<double> oracle_spectrum;
  std::optional<double> oracle_gap;
};

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "h_x",         "dims",          "extents",      "n_qubits",         "ansatz",
      "layers",      "n_params",      "optimizer",    "restart_index",    "converged",
      "energy",      "energy_per_site", "variance",   "magnetization",    "abs_magnetization",
      "spin_correlation", "entropy_single_site", "entropy_half", "oracle_energy", "oracle_entropy_single_site",
      "n_iterations", "n_evaluations", "wall_time_s", "seed"};
  return cols;
}

namespace detail {

inline std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline std::string join(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  return s;
}

}  // namespace detail

inline std::vector<std::string> to_cells(const RunRecord& r) {
  using detail::cell;
  return {format_double(r.h_x),
          std::to_string(r.dims),
          r.extents,
          std::to_string(r.n_qubits),
          r.ansatz,
          std::to_string(r.layers),
          std::to_string(r.n_params),
          r.optimizer,
          r.restart_index ? std::to_string(*r.restart_index) : std::string(),
          r.converged ? "true" : "false",
          cell(r.energy),
          cell(r.energy_per_site),
          cell(r.variance),
          cell(r.magnetization),
          cell(r.abs_magnetization),
          cell(r.spin_correlation),
          cell(r.entropy_single_site),
          cell(r.entropy_half),
          cell(r.oracle_energy),
          cell(r.oracle_entropy_single_site),
          std::to_string(r.n_iterations),
          std::to_string(r.n_evaluations),
          cell(r.wall_time_s),
          std::to_string(r.seed)};
}

inline void write_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << detail::join(csv_columns()) << '\n';
  for (const auto& r : records) os << detail::join(to_cells(r)) << '\n';
}

struct ExperimentResult {
  std::vector<RunRecord> records;
  json manifest;
};

/// Runs the sweep, measures the enabled observables at every optimum and
/// attaches oracle values when enabled and within the iterative cap.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.field_grid.empty()) throw ConfigError("model.field_grid", "required field is missing");
  const auto t0 = std::chrono::steady_clock::now();
  const Lattice lat = cfg.build_lattice();
  const int n = lat.n_sites();
  const std::string hash = config_hash(cfg);
  const ParametricCircuit circuit = build_ansatz(cfg.ansatz, lat, cfg.lattice.dedupe);

  SweepOptions so;
  so.j_z = cfg.j_z;
  so.dedupe = cfg.lattice.dedupe;
  so.warm_start = cfg.warm_start;
  so.cold_parallel = cfg.cold_parallel;
  const auto points = sweep_field(lat, cfg.ansatz, cfg.field_grid, cfg.optimizer, so);

  std::vector<int> partition;
  if (cfg.observables.partition) {
    partition = *cfg.observables.partition;
  } else {
    partition.resize(static_cast<std::size_t>(n / 2));
    std::iota(partition.begin(), partition.end(), 0);
  }
  const bool oracle_ok = cfg.oracle.enabled && n <= kLanczosQubitCap &&
                         !(cfg.oracle.method == EigenMethod::Dense && n > kDenseQubitCap);

  ExperimentResult out;
  json pts = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    RunRecord r;
    r.h_x = p.h_x;
    r.dims = lat.dims();
    r.extents = lat.extents_string();
    r.n_qubits = n;
    r.ansatz = ansatz_label(cfg.ansatz);
    r.layers = cfg.ansatz.n_layers;
    r.n_params = circuit.n_params();
    r.optimizer = std::string(to_string(cfg.optimizer.method));
    r.seed = point_seed(cfg.seed, i);
    r.config_hash = hash;
    r.failed = p.failed;
    r.error = p.error;
    if (cfg.output.timing) r.wall_time_s = p.wall_time_s;
    const PauliSum h = build_tfim(lat, {cfg.j_z, p.h_x}, cfg.lattice.dedupe);

    if (!p.failed) {
      const auto& res = p.result;
      r.restart_index = res.restart_index;
      r.converged = res.converged;
      r.n_iterations = res.n_iterations;
      r.n_evaluations = res.n_evaluations;
      r.best_params = res.best_params;
      const StateVector s = prepare_state(init_basis_state(n, 0), circuit, res.best_params);
      r.energy = expectation(s, h);
      r.energy_per_site = *r.energy / n;
      const auto& o = cfg.observables;
      if (o.variance) {
        try {
          r.variance = energy_variance(s, h);
        } catch (const UndefinedVarianceError&) {
        }
      }
      if (o.magnetization) {
        const auto m = magnetization(s);
        r.magnetization = m.m;
        r.abs_magnetization = m.m_abs;
      }
      if (o.spin_correlation && n % 2 == 0) r.spin_correlation = spin_correlation(s, n);
      if (o.entropy_single_site) r.entropy_single_site = single_site_entropy(s, o.entropy_site);
      if (o.entropy_half && !partition.empty()) r.entropy_half = entanglement_entropy(s, partition);
    }

    if (oracle_ok) {
      const auto g = parity_resolved_ground(h, n, cfg.oracle.method);
      r.oracle_energy = std::min(g.even.value, g.odd.value);
      r.oracle_entropy_single_site = single_site_entropy(g.symmetric(n).vector, cfg.observables.entropy_site);
      r.oracle_gap = g.gap;
      if (cfg.oracle.k > 1) {
        for (const auto& e : lowest_eigenpairs(h, n, cfg.oracle.k, cfg.oracle.method)) r.oracle_spectrum.push_back(e.value);
      } else {
        r.oracle_spectrum.push_back(*r.oracle_energy);
      }
    }

    json pj = {{"h_x", r.h_x}, {"seed", r.seed}, {"failed", r.failed}, {"best_params", r.best_params}};
    if (r.failed) pj["error"] = r.error;
    if (oracle_ok) {
      pj["oracle_spectrum"] = r.oracle_spectrum;
      pj["oracle_gap"] = *r.oracle_gap;
    }
    if (cfg.output.timing) pj["wall_time_s"] = p.wall_time_s;
    pts.push_back(std::move(pj));
    out.records.push_back(std::move(r));
  }

  out.manifest = {{"schema", kConfigSchema},
                  {"tool", "isingvqe"},
                  {"version", kVersion},
                  {"config_hash", hash},
                  {"config", to_json(cfg)},
                  {"seed", cfg.seed},
                  {"columns", csv_columns()},
                  {"oracle_attached", oracle_ok},
                  {"points", pts}};
  if (cfg.output.timing) {
    out.manifest["total_wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

/// Output directory: the environment override when set, else the config's.
inline std::filesystem::path output_directory(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return cfg.output.directory;
}

/// Writes <prefix>.csv and <prefix>.manifest.json as enabled; returns the
/// paths written.
inline std::vector<std::filesystem::path> write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res) {
  const auto dir = output_directory(cfg);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  if (cfg.output.csv) {
    const auto p = dir / (cfg.output.prefix + ".csv");
    std::ofstream f(p, std::ios::binary);
    write_csv(f, res.records);
    if (!f) throw std::runtime_error("failed to write " + p.string());
    written.push_back(p);
  }
  if (cfg.output.manifest) {
    const auto p = dir / (cfg.output.prefix + ".manifest.json");
    std::ofstream f(p, std::ios::binary);
    f << res.manifest.dump(2) << '\n';
    if (!f) throw std::runtime_error("failed to write " + p.string());
    written.push_back(p);
  }
  return written;
}

/// Header plus string cells of a simple comma-separated file (no quoting).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : l) {
      if (ch == ',') {
        cells.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    cells.push_back(cur);
    return cells;
  };
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ContractError("read_csv: row " + std::to_string(t.rows.size() + 1) + " has " + std::to_string(cells.size()) +
                          " cells, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (first) throw ContractError("read_csv: empty file");
  return t;
}

inline CsvTable read_csv_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  return read_csv(in);
}

inline CsvTable to_table(const std::vector<RunRecord>& records) {
  CsvTable t;
  t.header = csv_columns();
  for (const auto& r : records) t.rows.push_back(to_cells(r));
  return t;
}

/// One result column checked against one reference column.
struct ColumnCheck {
  std::string column;
  std::string reference_column;
  double tolerance = 0.0;
};

struct Deviation {
  std::size_t row = 0;
  double h_x = 0.0;
  std::string column;
  std::optional<double> value;
  double reference = 0.0;
  double deviation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ComparisonReport {
  std::vector<Deviation> deviations;
  bool passed = true;

  std::vector<const Deviation*> failures() const {
    std::vector<const Deviation*> f;
    for (const auto& d : deviations) {
      if (!d.pass) f.push_back(&d);
    }
    return f;
  }
};

namespace detail {

inline std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') return std::nullopt;
  return v;
}

}  // namespace detail

/// Per-row absolute deviations of result columns from reference columns.
/// Rows pair up by position; their h_x values must agree to 1e-9.
inline ComparisonReport compare_to_reference(const CsvTable& results, const CsvTable& reference,
                                             const std::vector<ColumnCheck>& checks) {
  const int hr = results.column("h_x");
  const int hf = reference.column("h_x");
  if (hr < 0 || hf < 0) throw ContractError("compare_to_reference: both tables need an h_x column");
  if (results.rows.size() != reference.rows.size()) {
    throw ContractError("compare_to_reference: grid mismatch, " + std::to_string(results.rows.size()) + " result rows vs " +
                        std::to_string(reference.rows.size()) + " reference rows");
  }
  for (std::size_t i = 0; i < results.rows.size(); ++i) {
    const auto a = detail::parse_cell(results.rows[i][static_cast<std::size_t>(hr)]);
    const auto b = detail::parse_cell(reference.rows[i][static_cast<std::size_t>(hf)]);
    if (!a || !b || std::abs(*a - *b) > 1e-9) {
      throw ContractError("compare_to_reference: grid mismatch at row " + std::to_string(i + 1));
    }
  }
  ComparisonReport rep;
  for (const auto& c : checks) {
    const int rc = results.column(c.column);
    const int fc = reference.column(c.reference_column);
    if (rc < 0) throw ContractError("compare_to_reference: results have no column '" + c.column + "'");
    if (fc < 0) throw ContractError("compare_to_reference: reference has no column '" + c.reference_column + "'");
    for (std::size_t i = 0; i < results.rows.size(); ++i) {
      Deviation d;
      d.row = i + 1;
      d.h_x = *detail::parse_cell(results.rows[i][static_cast<std::size_t>(hr)]);
      d.column = c.column;
      d.tolerance = c.tolerance;
      d.value = detail::parse_cell(results.rows[i][static_cast<std::size_t>(rc)]);
      const auto ref = detail::parse_cell(reference.rows[i][static_cast<std::size_t>(fc)]);
      if (!ref) {
        throw ContractError("compare_to_reference: reference column '" + c.reference_column + "' row " +
                            std::to_string(i + 1) + " is not a number");
      }
      d.reference = *ref;
      if (d.value) {
        d.deviation = std::abs(*d.value - d.reference);
        d.pass = d.deviation <= c.tolerance;
      } else {
        d.deviation = std::numeric_limits<double>::infinity();
        d.pass = false;
      }
      rep.passed = rep.passed && d.pass;
      rep.deviations.push_back(d);
    }
  }
  return rep;
}

inline ComparisonReport compare_to_reference(const std::vector<RunRecord>& records, const CsvTable& reference,
                                             const std::vector<ColumnCheck>& checks) {
  return compare_to_reference(to_table(records), reference, checks);
}

inline void write_comparison(std::ostream& os, const ComparisonReport& rep) {
  os << "row,h_x,column,value,reference,deviation,tolerance,status\n";
  for (const auto& d : rep.deviations) {
    os << d.row << ',' << format_double(d.h_x) << ',' << d.column << ',' << detail::cell(d.value) << ','
       << format_double(d.reference) << ',' << (d.value ? format_double(d.deviation) : std::string()) << ','
       << format_double(d.tolerance) << ',' << (d.pass ? "pass" : "FAIL") << '\n';
  }
}

struct FramePotentialEntry {
  std::string label;
  AnsatzSpec spec;
  int n_params = 0;
  FramePotentialEstimate estimate;
};

struct FramePotentialReport {
  int n_qubits = 0;
  std::vector<FramePotentialEntry> entries;
  std::optional<FramePotentialEstimate> haar;
};

/// F_t estimate and overlap list for every configured ansatz on the config
/// lattice, plus the Haar baseline when enabled.
inline FramePotentialReport frame_potential_report(const ExperimentConfig& cfg) {
  const auto& fp = cfg.frame_potential;
  if (fp.ansatze.empty()) throw ConfigError("frame_potential.ansatze", "no ansatz configured");
  const Lattice lat = cfg.build_lattice();
  FramePotentialReport rep;
  rep.n_qubits = lat.n_sites();
  const StateVector init = init_basis_state(lat.n_sites(), 0);
  for (const auto& spec : fp.ansatze) {
    const auto c = build_ansatz(spec, lat, cfg.lattice.dedupe);
    FramePotentialEntry e;
    e.label = ansatz_label(spec) + "_L" + std::to_string(spec.n_layers);
    e.spec = spec;
    e.n_params = c.n_params();
    e.estimate = frame_potential(c, init, fp.t, fp.n_samples, cfg.seed);
    rep.entries.push_back(std::move(e));
  }
  if (fp.haar_baseline) rep.haar = haar_frame_potential(lat.n_sites(), fp.t, fp.n_samples, cfg.seed);
  return rep;
}

inline void write_frame_potential_summary(std::ostream& os, const FramePotentialReport& rep) {
  os << "ansatz,layers,n_qubits,n_params,t,mean,std_error,n_samples,seed\n";
  auto row = [&](const std::string& label, const std::string& layers, const std::string& np,
                 const FramePotentialEstimate& e) {
    os << label << ',' << layers << ',' << rep.n_qubits << ',' << np << ',' << e.t << ',' << format_double(e.mean) << ','
       << format_double(e.std_error) << ',' << e.n_samples << ',' << e.seed << '\n';
  };
  for (const auto& e : rep.entries) {
    row(e.label, std::to_string(e.spec.n_layers), std::to_string(e.n_params), e.estimate);
  }
  if (rep.haar) row("haar", "", "", *rep.haar);
}

/// Overlap histogram on [0, 1]: one count column per ansatz.
inline void write_overlap_histogram(std::ostream& os, const FramePotentialReport& rep, int bins) {
  os << "bin_lo,bin_hi";
  std::vector<std::vector<int>> counts;
  for (const auto& e : rep.entries) {
    os << ',' << e.label;
    counts.push_back(overlap_histogram(e.estimate, bins));
  }
  if (rep.haar) {
    os << ",haar";
    counts.push_back(overlap_histogram(*rep.haar, bins));
  }
  os << '\n';
  for (int b = 0; b < bins; ++b) {
    os << format_double(static_cast<double>(b) / bins) << ',' << format_double(static_cast<double>(b + 1) / bins);
    for (const auto& c : counts) os << ',' << c[static_cast<std::size_t>(b)];
    os << '\n';
  }
}

/// Writes <prefix>_frame_potential.csv, <prefix>_overlap_histogram.csv and,
/// when enabled, one raw overlap file per ansatz.
inline std::vector<std::filesystem::path> write_frame_potential_outputs(const ExperimentConfig& cfg,
                                                                        const FramePotentialReport& rep) {
  const auto dir = output_directory(cfg);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, auto&& body) {
    const auto p = dir / name;
    std::ofstream f(p, std::ios::binary);
    body(f);
    if (!f) throw std::runtime_error("failed to write " + p.string());
    written.push_back(p);
  };
  emit(cfg.output.prefix + "_frame_potential.csv", [&](std::ostream& os) { write_frame_potential_summary(os, rep); });
  emit(cfg.output.prefix + "_overlap_histogram.csv",
       [&](std::ostream& os) { write_overlap_histogram(os, rep, cfg.frame_potential.bins); });
  if (cfg.frame_potential.raw_overlaps) {
    for (const auto& e : rep.entries) {
      emit(cfg.output.prefix + "_overlaps_" + e.label + ".csv", [&](std::ostream& os) { write_overlaps_csv(os, e.estimate); });
    }
  }
  return written;
}

}  // namespace isingvqe
