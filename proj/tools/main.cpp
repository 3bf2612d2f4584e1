#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <isingvqe/isingvqe.hpp>

namespace {

using namespace isingvqe;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCompareFailed = 2;

struct RunArgs {
  std::string config;
  std::string output_dir;
  bool quiet = false;
};

struct CompareArgs {
  std::string results;
  std::string reference;
  double tol_energy = 1e-2;
  std::optional<double> tol_entropy;
  std::string energy_column = "energy";
  std::string reference_energy_column = "ed_energy";
  std::string entropy_column = "entropy_single_site";
  std::string reference_entropy_column = "ed_entropy";
  std::string report;
};

struct ResourceArgs {
  std::string ansatz;
  int n_qubits = 0;
  int layers = 0;
  int dim = 1;
  std::string entanglement = "double_all_pairs";
  bool real_amplitudes = false;
  bool print_circuit = false;
};

void apply_output_override(ExperimentConfig& cfg, const std::string& dir) {
  if (!dir.empty()) cfg.output.directory = dir;
}

int cmd_run(const RunArgs& a) {
  auto cfg = load_config(a.config);
  apply_output_override(cfg, a.output_dir);
  const auto res = run_experiment(cfg);
  const auto files = write_outputs(cfg, res);
  int failed = 0;
  if (!a.quiet) std::printf("%8s %16s %16s %10s %s\n", "h_x", "energy", "oracle_energy", "S_1", "status");
  for (const auto& r : res.records) {
    failed += r.failed;
    if (a.quiet) continue;
    std::printf("%8.4f %16.8f %16s %10.5f %s\n", r.h_x, r.energy.value_or(NAN),
                r.oracle_energy ? std::to_string(*r.oracle_energy).c_str() : "-", r.entropy_single_site.value_or(NAN),
                r.failed ? ("failed: " + r.error).c_str() : (r.converged ? "converged" : "iteration cap"));
  }
  for (const auto& f : files) std::cerr << "wrote " << f.string() << '\n';
  std::cerr << "config hash " << config_hash(cfg) << '\n';
  if (failed) {
    std::cerr << failed << " of " << res.records.size() << " points failed\n";
    return kExitError;
  }
  return kExitOk;
}

int cmd_compare(const CompareArgs& a) {
  const auto results = read_csv_file(a.results);
  const auto reference = read_csv_file(a.reference);
  std::vector<ColumnCheck> checks = {{a.energy_column, a.reference_energy_column, a.tol_energy}};
  if (a.tol_entropy) checks.push_back({a.entropy_column, a.reference_entropy_column, *a.tol_entropy});
  const auto rep = compare_to_reference(results, reference, checks);
  if (!a.report.empty()) {
    std::ofstream f(a.report);
    write_comparison(f, rep);
  }
  for (const auto& c : checks) {
    double worst = 0;
    for (const auto& d : rep.deviations) {
      if (d.column == c.column) worst = std::max(worst, d.deviation);
    }
    std::printf("%-24s vs %-16s max deviation %.3e (tolerance %.1e)\n", c.column.c_str(), c.reference_column.c_str(),
                worst, c.tolerance);
  }
  for (const auto* d : rep.failures()) {
    std::printf("FAIL row %zu (h_x=%s) column %s: value %s reference %s deviation %s\n", d->row,
                format_double(d->h_x).c_str(), d->column.c_str(), d->value ? format_double(*d->value).c_str() : "(missing)",
                format_double(d->reference).c_str(), d->value ? format_double(d->deviation).c_str() : "inf");
  }
  std::printf("%s\n", rep.passed ? "PASS" : "FAIL");
  return rep.passed ? kExitOk : kExitCompareFailed;
}

int cmd_frame_potential(const RunArgs& a) {
  auto cfg = load_config(a.config);
  apply_output_override(cfg, a.output_dir);
  const auto rep = frame_potential_report(cfg);
  const auto files = write_frame_potential_outputs(cfg, rep);
  if (!a.quiet) {
    std::printf("%-14s %8s %14s %14s\n", "ansatz", "params", "F_t", "std_error");
    for (const auto& e : rep.entries) {
      std::printf("%-14s %8d %14.6e %14.6e\n", e.label.c_str(), e.n_params, e.estimate.mean, e.estimate.std_error);
    }
    if (rep.haar) std::printf("%-14s %8s %14.6e %14.6e\n", "haar", "-", rep.haar->mean, rep.haar->std_error);
  }
  for (const auto& f : files) std::cerr << "wrote " << f.string() << '\n';
  return kExitOk;
}

int cmd_resources(const ResourceArgs& a) {
  AnsatzSpec spec;
  spec.kind = parse_ansatz_kind(a.ansatz);
  spec.n_layers = a.layers;
  spec.real_amplitudes = a.real_amplitudes;
  spec.entanglement = parse_entanglement(a.entanglement);
  if (a.layers < 1) throw DomainError("layers must be >= 1");
  const auto extents = spec.kind == AnsatzKind::HEA ? std::vector<int>{a.n_qubits} : lattice_extents_for(a.n_qubits, a.dim);
  const Lattice lat(static_cast<int>(extents.size()), extents);
  const auto circuit = build_ansatz(spec, lat);
  const auto closed = resource_estimate(spec, a.n_qubits, a.dim);
  const auto counted = count_resources(circuit);
  std::printf("ansatz %s, %d qubits, %d layers, d=%d", ansatz_label(spec).c_str(), a.n_qubits, a.layers, a.dim);
  if (spec.kind == AnsatzKind::HEA) {
    std::printf(", entanglement %s\n", std::string(to_string(spec.entanglement)).c_str());
  } else {
    std::printf(", lattice %s\n", lat.extents_string().c_str());
  }
  std::printf("%-10s %12s %12s\n", "quantity", "closed_form", "counted");
  std::printf("%-10s %12ld %12ld\n", "params", closed.n_params, counted.n_params);
  std::printf("%-10s %12ld %12ld\n", "cnots", closed.n_cnots, counted.n_cnots);
  std::printf("%-10s %12ld %12ld\n", "depth", closed.depth, counted.depth);
  if (a.print_circuit) write_circuit(std::cout, circuit);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Statevector VQE laboratory for the transverse-field Ising model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(isingvqe::kVersion));

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run a field sweep from a JSON config");
  run->add_option("config", run_args.config, "Experiment config (JSON, schema 1)")->required()->check(CLI::ExistingFile);
  run->add_option("--output-dir", run_args.output_dir, "Override output.directory");
  run->add_flag("-q,--quiet", run_args.quiet, "Suppress the per-point table");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Compare a results CSV against a reference CSV");
  compare->add_option("results", cmp.results, "Results CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("reference", cmp.reference, "Reference CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--tol-energy", cmp.tol_energy, "Absolute energy tolerance")->capture_default_str();
  compare->add_option("--tol-entropy", cmp.tol_entropy, "Absolute entropy tolerance; entropy is compared only when set");
  compare->add_option("--energy-column", cmp.energy_column, "Results energy column")->capture_default_str();
  compare->add_option("--reference-energy-column", cmp.reference_energy_column, "Reference energy column")
      ->capture_default_str();
  compare->add_option("--entropy-column", cmp.entropy_column, "Results entropy column")->capture_default_str();
  compare->add_option("--reference-entropy-column", cmp.reference_entropy_column, "Reference entropy column")
      ->capture_default_str();
  compare->add_option("--report", cmp.report, "Write per-row deviations to this CSV");

  RunArgs fp_args;
  auto* fp = app.add_subcommand("frame-potential", "Frame-potential report for the configured ansatze");
  fp->add_option("config", fp_args.config, "Experiment config (JSON, schema 1)")->required()->check(CLI::ExistingFile);
  fp->add_option("--output-dir", fp_args.output_dir, "Override output.directory");
  fp->add_flag("-q,--quiet", fp_args.quiet, "Suppress the summary table");

  ResourceArgs res;
  auto* resources = app.add_subcommand("resources", "Closed-form and counted circuit resources");
  resources->add_option("ansatz", res.ansatz, "HEA, HVA or HVA_SB")->required();
  resources->add_option("nq", res.n_qubits, "Number of qubits")->required();
  resources->add_option("layers", res.layers, "Number of layers")->required();
  resources->add_option("dim", res.dim, "Lattice dimension")->required()->check(CLI::Range(1, 3));
  resources->add_option("--entanglement", res.entanglement, "HEA entanglement pattern")->capture_default_str();
  resources->add_flag("--real-amplitudes", res.real_amplitudes, "HEA without RZ rotations");
  resources->add_flag("--print-circuit", res.print_circuit, "Also print the circuit in text form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*compare) return cmd_compare(cmp);
    if (*fp) return cmd_frame_potential(fp_args);
    if (*resources) return cmd_resources(res);
  } catch (const isingvqe::ConfigError& e) {
    std::cerr << "config error at " << e.path() << ": " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
