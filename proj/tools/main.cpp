// Command-line front end: scenario loading plus the blocks / sweep /
// spectrum / fit / reference analysis commands.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "levelmix/blocks.hpp"
#include "levelmix/csvio.hpp"
#include "levelmix/errors.hpp"
#include "levelmix/scenario.hpp"
#include "levelmix/spectral.hpp"
#include "levelmix/spectro.hpp"

namespace {

using namespace levelmix;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitFitNonConvergence = 4;

std::string resolve_scenario_path(const std::string& given) {
  namespace fs = std::filesystem;
  if (fs::exists(given)) return given;
  std::vector<std::string> tried{given};
  if (const char* dir = std::getenv("LEVELMIX_SCENARIO_DIR")) {
    const std::string candidate = std::string(dir) + "/" + given;
    if (fs::exists(candidate)) return candidate;
    tried.push_back(candidate);
  }
  const std::string local = "data/" + given;
  if (fs::exists(local)) return local;
  tried.push_back(local);
  std::string msg = "scenario file not found; tried:";
  for (const auto& t : tried) msg += "\n  " + t;
  throw config_error(msg);
}

struct ScenarioOptions {
  std::string path = "rb87_6p25d.json";
  std::vector<std::string> sets;
  std::string resolved;

  SystemSpec load() {
    resolved = resolve_scenario_path(path);
    return load_scenario_with_overrides(resolved, sets);
  }
};

void add_scenario_options(CLI::App* cmd, ScenarioOptions& opts) {
  cmd->add_option("--scenario", opts.path,
                  "Scenario JSON file (searched in $LEVELMIX_SCENARIO_DIR and "
                  "./data)")
      ->capture_default_str();
  cmd->add_option("--set", opts.sets,
                  "Override a scenario field, e.g. --set lower.hyperfine_A_MHz=0");
}

std::vector<double> make_grid(double lo, double hi, double step,
                              const char* what) {
  if (step <= 0) throw config_error(std::string(what) + ": step must be > 0");
  std::vector<double> g;
  for (double x = lo; x <= hi + 1e-9 * std::max(1.0, std::abs(hi)); x += step) {
    g.push_back(x);
  }
  return g;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write: " + path);
  out << text;
}

// ---------------------------------------------------------------- blocks --

struct BlocksArgs {
  ScenarioOptions scenario;
  double omega = 200.0;
  std::string matrix_out = "coupling_matrix.csv";
  std::string json_out = "blocks.json";
};

void run_blocks(BlocksArgs& args) {
  const SystemSpec spec = args.scenario.load();
  const LabeledMatrix h = build_hamiltonian(spec, args.omega);
  const BlockDecomposition dec = decompose(h, spec.polarization_q);

  // RCM-permuted |H| matrix with labeled rows/columns.
  std::string csv = "state";
  for (int idx : dec.permutation) csv += "," + csv_field(h.labels[idx].str());
  csv += "\n";
  for (int r : dec.permutation) {
    csv += csv_field(h.labels[r].str());
    for (int c : dec.permutation) {
      csv += "," + fmt_double(std::abs(h.entries(r, c)));
    }
    csv += "\n";
  }

  json doc;
  doc["schema_version"] = 1;
  doc["scenario"] = args.scenario.resolved;
  doc["polarization_q"] = spec.polarization_q;
  doc["omega_MHz"] = args.omega;
  doc["blocks"] = json::array();
  for (const Block& b : dec.blocks) {
    json jb;
    jb["mtilde"] = b.mtilde.str();
    jb["size"] = b.size();
    jb["states"] = json::array();
    for (int idx : b.indices) jb["states"].push_back(h.labels[idx].str());
    doc["blocks"].push_back(jb);
  }
  doc["dark_singletons"] = json::array();
  for (int idx : dec.dark_singletons) {
    doc["dark_singletons"].push_back(h.labels[idx].str());
  }
  doc["permutation"] = dec.permutation;

  write_text(args.matrix_out, csv);
  write_text(args.json_out, doc.dump(2) + "\n");
  std::cout << "blocks: " << dec.blocks.size() << " coupled blocks, "
            << dec.dark_singletons.size() << " dark singletons -> "
            << args.matrix_out << ", " << args.json_out << "\n";
}

// ----------------------------------------------------------------- sweep --

struct SweepArgs {
  ScenarioOptions scenario;
  double omega_min = 0.0;
  double omega_max = 800.0;
  double omega_step = 2.0;
  std::string mtilde_filter = "all";
  int probe_q = -1;
  bool extrapolation = false;
  std::string out = "sweep.csv";
};

void run_sweep(SweepArgs& args) {
  const SystemSpec spec = args.scenario.load();
  const auto grid =
      make_grid(args.omega_min, args.omega_max, args.omega_step, "sweep");
  if (grid.empty()) throw config_error("sweep: empty omega grid");

  ProbeSpec probe;
  probe.probe_q = args.probe_q;
  probe.validate(spec);
  const BasisState probed = probe.probed_lower_state();

  const bool filter = args.mtilde_filter != "all";
  HalfInt wanted;
  if (filter) wanted = HalfInt::parse(args.mtilde_filter);

  EigenBranchSet set = sweep(spec, grid);
  classify_branches(set, probed);
  int probe_idx = -1;
  for (size_t k = 0; k < set.labels.size(); ++k) {
    if (set.labels[k] == probed) probe_idx = static_cast<int>(k);
  }

  // Rank-matched extrapolation values per block and grid point.
  std::map<int, std::vector<std::vector<double>>> extrap_sorted;
  if (args.extrapolation) {
    for (size_t b = 0; b < set.decomposition.blocks.size(); ++b) {
      const Block& block = set.decomposition.blocks[b];
      const auto levels =
          two_level_extrapolation(spec, block, set.labels, grid);
      if (levels.empty()) continue;
      std::vector<std::vector<double>> per_point(grid.size());
      for (size_t gi = 0; gi < grid.size(); ++gi) {
        for (const auto& lvl : levels) {
          per_point[gi].push_back(lvl.lower_energies_mhz[gi]);
          per_point[gi].push_back(lvl.upper_energies_mhz[gi]);
        }
        std::sort(per_point[gi].begin(), per_point[gi].end());
      }
      extrap_sorted[static_cast<int>(b)] = std::move(per_point);
    }
  }

  std::map<int, std::vector<const Branch*>> by_block;
  for (const Branch& br : set.branches) by_block[br.block_id].push_back(&br);

  std::string csv =
      "omega_MHz,block_id,branch_id,energy_MHz,probed_admixture,signal_weight,"
      "mtilde,classification";
  if (args.extrapolation) csv += ",extrap_energy_MHz";
  csv += "\n";

  for (const Branch& br : set.branches) {
    if (filter && br.block_mtilde != wanted) continue;
    int branch_id = 0;
    for (const Branch* other : by_block[br.block_id]) {
      if (other == &br) break;
      ++branch_id;
    }
    for (size_t gi = 0; gi < grid.size(); ++gi) {
      const double c = br.vectors[gi][probe_idx];
      const double weight = signal_weight(br.vectors[gi], set.labels, probed);
      csv += fmt_double(grid[gi]) + "," + std::to_string(br.block_id) + "," +
             std::to_string(branch_id) + "," +
             fmt_double(br.energies_mhz[gi]) + "," + fmt_double(c * c) + "," +
             fmt_double(weight) + "," + csv_field(br.block_mtilde.str()) +
             "," + to_string(br.tag);
      if (args.extrapolation) {
        csv += ",";
        const auto it = extrap_sorted.find(br.block_id);
        if (it != extrap_sorted.end() &&
            it->second[gi].size() == by_block[br.block_id].size()) {
          // Rank of this branch among its block's energies at this point.
          int rank = 0;
          for (const Branch* other : by_block[br.block_id]) {
            if (other != &br && other->energies_mhz[gi] < br.energies_mhz[gi]) {
              ++rank;
            }
          }
          csv += fmt_double(it->second[gi][static_cast<size_t>(rank)]);
        }
      }
      csv += "\n";
    }
  }
  write_text(args.out, csv);
  std::cout << "sweep: " << set.branches.size() << " branches over "
            << grid.size() << " drive values -> " << args.out << "\n";
}

// -------------------------------------------------------------- spectrum --

struct SpectrumArgs {
  ScenarioOptions scenario;
  double peak_omega = 400.0;
  int probe_q = -1;
  double linewidth = 5.0;
  std::string dist = "homogeneous";
  int n_samples = 4000;
  std::uint64_t seed = 12345;
  double det_min = -300.0;
  double det_max = 300.0;
  double det_step = 0.5;
  TrapConfig trap;
  std::string out = "spectrum.csv";
};

void run_spectrum(SpectrumArgs& args) {
  const SystemSpec spec = args.scenario.load();
  ProbeSpec probe;
  probe.probe_q = args.probe_q;
  probe.linewidth_mhz = args.linewidth;
  probe.validate(spec);

  OmegaDistribution dist;
  if (args.dist == "homogeneous") {
    dist = homogeneous_distribution(args.peak_omega);
  } else if (args.dist == "trap") {
    dist = trap_omega_distribution(args.trap, args.peak_omega, args.n_samples,
                                   args.seed);
  } else {
    throw config_error("--dist must be 'homogeneous' or 'trap'");
  }

  const auto grid =
      make_grid(args.det_min, args.det_max, args.det_step, "spectrum");
  const Spectrum s =
      synthesize_spectrum(spec, probe, dist, args.peak_omega, grid);

  json meta;
  meta["schema_version"] = 1;
  meta["command"] = "spectrum";
  meta["scenario"] = args.scenario.resolved;
  meta["peak_omega_MHz"] = args.peak_omega;
  meta["probe_q"] = args.probe_q;
  meta["linewidth_MHz"] = args.linewidth;
  meta["distribution"]["model"] = dist.model == DistributionModel::homogeneous
                                      ? "homogeneous"
                                      : "trap-sampled";
  meta["distribution"]["n_samples"] = dist.samples.size();
  meta["distribution"]["seed"] = dist.seed;
  meta["detuning_grid"] = {{"min_MHz", args.det_min},
                           {"max_MHz", args.det_max},
                           {"step_MHz", args.det_step}};
  meta["deterministic"] = true;

  write_spectrum_csv(args.out, s);
  write_text(args.out + ".meta.json", meta.dump(2) + "\n");
  std::cout << "spectrum: " << s.detuning_mhz.size() << " points from "
            << dist.samples.size() << " drive samples -> " << args.out << "\n";
}

// ------------------------------------------------------------------- fit --

struct FitArgs {
  std::string in;
  int n_peaks = 5;
  bool baseline = false;
  bool normalize = false;
  double min_separation = 0.0;
  int max_iterations = 200;
  std::string out = "fit.json";
};

json fit_report_json(const FitReport& rep, int n_peaks, bool normalized,
                     const std::string& error) {
  json doc;
  doc["schema_version"] = 1;
  doc["n_peaks"] = n_peaks;
  doc["peaks"] = json::array();
  for (const GaussianPeak& p : rep.peaks) {
    doc["peaks"].push_back({{"center_MHz", p.center_mhz},
                            {"sigma_MHz", p.sigma_mhz},
                            {"amplitude", p.amplitude}});
  }
  doc["baseline"] = rep.baseline;
  doc["residual_norm"] = rep.residual_norm;
  doc["iterations"] = rep.iterations;
  doc["converged"] = rep.converged;
  doc["reseeded"] = rep.reseeded;
  doc["normalized"] = normalized;
  doc["covariance_diag"] = rep.covariance_diag;
  if (!error.empty()) doc["error"] = error;
  return doc;
}

int run_fit(FitArgs& args) {
  const Spectrum s = read_spectrum_csv(args.in);
  FitOptions opt;
  opt.fit_baseline = args.baseline;
  opt.min_separation_mhz = args.min_separation;
  opt.max_iterations = args.max_iterations;
  try {
    FitReport rep = fit_peaks(s, args.n_peaks, opt);
    if (args.normalize) normalize_amplitudes(rep);
    write_text(args.out,
               fit_report_json(rep, args.n_peaks, args.normalize, "").dump(2) +
                   "\n");
    std::cout << "fit: " << rep.peaks.size() << " peaks, residual "
              << fmt_double(rep.residual_norm) << " after " << rep.iterations
              << " iterations -> " << args.out << "\n";
    return 0;
  } catch (const fit_convergence_error& e) {
    FitReport best = e.best;
    if (args.normalize) normalize_amplitudes(best);
    write_text(args.out,
               fit_report_json(best, args.n_peaks, args.normalize, e.what())
                       .dump(2) +
                   "\n");
    std::cerr << "fit: " << e.what() << " (best-so-far written to " << args.out
              << ")\n";
    return kExitFitNonConvergence;
  }
}

// ------------------------------------------------------------- reference --

struct ReferenceArgs {
  ScenarioOptions scenario;
  std::string model = "both";
  double omega_min = 0.0;
  double omega_max = 800.0;
  double omega_step = 50.0;
  double delta = 0.0;
  std::string out = "reference.csv";
};

void run_reference(ReferenceArgs& args) {
  const SystemSpec spec = args.scenario.load();
  if (args.model != "both" && args.model != "two-level" &&
      args.model != "morris-shore") {
    throw config_error("--model must be two-level, morris-shore or both");
  }
  const auto grid =
      make_grid(args.omega_min, args.omega_max, args.omega_step, "reference");

  std::string csv = "model,omega_MHz,index,energy_MHz\n";
  if (args.model != "morris-shore") {
    for (double omega : grid) {
      const auto [lo, hi] = two_level_reference(omega, args.delta);
      csv += "two-level," + fmt_double(omega) + ",0," + fmt_double(lo) + "\n";
      csv += "two-level," + fmt_double(omega) + ",1," + fmt_double(hi) + "\n";
    }
  }
  if (args.model != "two-level") {
    for (double omega : grid) {
      const auto values = morris_shore_for_system(spec, omega);
      for (size_t k = 0; k < values.size(); ++k) {
        csv += "morris-shore," + fmt_double(omega) + "," + std::to_string(k) +
               "," + fmt_double(values[k]) + "\n";
      }
    }
  }
  write_text(args.out, csv);
  std::cout << "reference: " << grid.size() << " drive values -> " << args.out
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dressed-state analysis of a driven two-manifold system"};
  app.require_subcommand(1);

  BlocksArgs blocks_args;
  CLI::App* cmd_blocks = app.add_subcommand(
      "blocks", "Symmetry-block census and reordered coupling-matrix export");
  add_scenario_options(cmd_blocks, blocks_args.scenario);
  cmd_blocks->add_option("--omega", blocks_args.omega, "Drive (MHz)")
      ->capture_default_str();
  cmd_blocks->add_option("--matrix-out", blocks_args.matrix_out)
      ->capture_default_str();
  cmd_blocks->add_option("--json-out", blocks_args.json_out)
      ->capture_default_str();

  SweepArgs sweep_args;
  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "Eigenenergy branches versus drive strength");
  add_scenario_options(cmd_sweep, sweep_args.scenario);
  cmd_sweep->add_option("--omega-min", sweep_args.omega_min)->capture_default_str();
  cmd_sweep->add_option("--omega-max", sweep_args.omega_max)->capture_default_str();
  cmd_sweep->add_option("--omega-step", sweep_args.omega_step)->capture_default_str();
  cmd_sweep->add_option("--mtilde", sweep_args.mtilde_filter,
                        "Restrict to one symmetry block (e.g. 1, -2, 3/2, or 'all')")
      ->capture_default_str();
  cmd_sweep->add_option("--probe-q", sweep_args.probe_q, "Probe polarization")
      ->check(CLI::IsMember({-1, 0, 1}))
      ->capture_default_str();
  cmd_sweep->add_flag("--extrapolation", sweep_args.extrapolation,
                      "Add rank-matched two-level extrapolation energies");
  cmd_sweep->add_option("--out", sweep_args.out)->capture_default_str();

  SpectrumArgs spectrum_args;
  CLI::App* cmd_spectrum = app.add_subcommand(
      "spectrum", "Synthesize the probe spectrum at one peak drive");
  add_scenario_options(cmd_spectrum, spectrum_args.scenario);
  cmd_spectrum->add_option("--peak-omega", spectrum_args.peak_omega)
      ->capture_default_str();
  cmd_spectrum->add_option("--probe-q", spectrum_args.probe_q)
      ->check(CLI::IsMember({-1, 0, 1}))
      ->capture_default_str();
  cmd_spectrum->add_option("--linewidth", spectrum_args.linewidth,
                           "Gaussian sigma of one line (MHz)")
      ->capture_default_str();
  cmd_spectrum->add_option("--dist", spectrum_args.dist, "homogeneous or trap")
      ->capture_default_str();
  cmd_spectrum->add_option("--n-samples", spectrum_args.n_samples)
      ->capture_default_str();
  cmd_spectrum->add_option("--seed", spectrum_args.seed)->capture_default_str();
  cmd_spectrum->add_option("--det-min", spectrum_args.det_min)->capture_default_str();
  cmd_spectrum->add_option("--det-max", spectrum_args.det_max)->capture_default_str();
  cmd_spectrum->add_option("--det-step", spectrum_args.det_step)->capture_default_str();
  cmd_spectrum->add_option("--trap-waist1", spectrum_args.trap.waist1)
      ->capture_default_str();
  cmd_spectrum->add_option("--trap-waist2", spectrum_args.trap.waist2)
      ->capture_default_str();
  cmd_spectrum->add_option("--trap-power1", spectrum_args.trap.power1)
      ->capture_default_str();
  cmd_spectrum->add_option("--trap-power2", spectrum_args.trap.power2)
      ->capture_default_str();
  cmd_spectrum->add_option("--trap-temperature", spectrum_args.trap.temperature)
      ->capture_default_str();
  cmd_spectrum->add_option("--trap-depth-scale", spectrum_args.trap.depth_scale)
      ->capture_default_str();
  cmd_spectrum->add_option("--trap-angle", spectrum_args.trap.crossing_angle_deg)
      ->capture_default_str();
  cmd_spectrum->add_option("--trap-coupling-beam", spectrum_args.trap.coupling_beam)
      ->capture_default_str();
  cmd_spectrum->add_option("--trap-box", spectrum_args.trap.box_halfwidth_waists)
      ->capture_default_str();
  cmd_spectrum->add_option("--out", spectrum_args.out)->capture_default_str();

  FitArgs fit_args;
  CLI::App* cmd_fit =
      app.add_subcommand("fit", "Multi-Gaussian peak extraction from a spectrum");
  cmd_fit->add_option("--in", fit_args.in, "Spectrum CSV")->required();
  cmd_fit->add_option("--n-peaks", fit_args.n_peaks)->capture_default_str();
  cmd_fit->add_flag("--baseline", fit_args.baseline, "Fit a constant baseline");
  cmd_fit->add_flag("--normalize", fit_args.normalize,
                    "Scale amplitudes to the tallest peak");
  cmd_fit->add_option("--min-separation", fit_args.min_separation,
                      "Minimum initial peak separation (MHz, 0 = auto)")
      ->capture_default_str();
  cmd_fit->add_option("--max-iterations", fit_args.max_iterations)
      ->capture_default_str();
  cmd_fit->add_option("--out", fit_args.out)->capture_default_str();

  ReferenceArgs ref_args;
  CLI::App* cmd_reference = app.add_subcommand(
      "reference", "Two-level and Morris-Shore eigenvalue tables");
  add_scenario_options(cmd_reference, ref_args.scenario);
  cmd_reference->add_option("--model", ref_args.model)->capture_default_str();
  cmd_reference->add_option("--omega-min", ref_args.omega_min)->capture_default_str();
  cmd_reference->add_option("--omega-max", ref_args.omega_max)->capture_default_str();
  cmd_reference->add_option("--omega-step", ref_args.omega_step)->capture_default_str();
  cmd_reference->add_option("--delta", ref_args.delta, "Two-level detuning (MHz)")
      ->capture_default_str();
  cmd_reference->add_option("--out", ref_args.out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_blocks->parsed()) run_blocks(blocks_args);
    if (cmd_sweep->parsed()) run_sweep(sweep_args);
    if (cmd_spectrum->parsed()) run_spectrum(spectrum_args);
    if (cmd_fit->parsed()) return run_fit(fit_args);
    if (cmd_reference->parsed()) run_reference(ref_args);
  } catch (const fit_convergence_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFitNonConvergence;
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
