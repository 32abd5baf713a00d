#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "levelmix/errors.hpp"
#include "levelmix/model.hpp"

namespace levelmix {

/// Weak probe coupling the ground state to one lower-manifold state.
struct ProbeSpec {
  int probe_q = -1;                      // -1, 0, +1
  HalfInt ground_m_j = HalfInt::from_twice(1);   // 5S1/2 m_j = 1/2
  HalfInt ground_m_i = HalfInt::from_twice(3);   // m_I = 3/2
  double linewidth_mhz = 5.0;            // Gaussian sigma of one line

  BasisState probed_lower_state() const;
  void validate(const SystemSpec& spec) const;
};

/// Spectroscopic weight of one eigenstate: the probed-state admixture times
/// the total upper-manifold admixture.
double signal_weight(const Eigen::VectorXd& eigenvector,
                     const std::vector<BasisState>& labels,
                     const BasisState& probed_lower_state);

enum class DistributionModel { homogeneous, trap_sampled };

struct OmegaSample {
  double omega_mhz;
  double weight;
};

/// Distribution of local drive strengths across the atom cloud.
struct OmegaDistribution {
  std::vector<OmegaSample> samples;  // weights >= 0, sum 1
  DistributionModel model = DistributionModel::homogeneous;
  std::uint64_t seed = 0;

  void validate() const;
};

OmegaDistribution homogeneous_distribution(double peak_omega_mhz);

/// Crossed-beam optical trap; the parameters are in arbitrary consistent
/// units (only the depth-to-temperature ratios matter).  The defaults are
/// placeholders tuned for a visibly asymmetric drive distribution, not a
/// measured geometry.
struct TrapConfig {
  double waist1 = 1.0;
  double waist2 = 1.0;
  double power1 = 1.0;
  double power2 = 1.0;
  double temperature = 0.25;
  double depth_scale = 1.0;          // converts P/w^2/T into k_B T units
  double crossing_angle_deg = 45.0;
  int coupling_beam = 1;             // 1 or 2: which beam drives the atoms
  double box_halfwidth_waists = 4.0; // sampling box truncation

  void validate() const;
  /// Trap depth of each beam in k_B T units.
  double depth_kt(int beam) const;
};

/// Samples atom positions from the thermal density in the crossed-beam
/// potential (importance sampling, deterministic for a fixed seed) and maps
/// each position to its local drive strength, normalized so the strongest
/// sampled position sits at peak_omega.
OmegaDistribution trap_omega_distribution(const TrapConfig& trap,
                                          double peak_omega_mhz,
                                          int n_samples, std::uint64_t seed);

struct Spectrum {
  std::vector<double> detuning_mhz;
  std::vector<double> signal;
};

/// Synthesized probe spectrum: for every drive sample, every eigenstate of
/// the probed symmetry block contributes its signal weight as a unit-area
/// Gaussian of width probe.linewidth_mhz at its eigenenergy.
Spectrum synthesize_spectrum(const SystemSpec& spec, const ProbeSpec& probe,
                             const OmegaDistribution& dist,
                             double peak_omega_mhz,
                             const std::vector<double>& detuning_grid);

struct GaussianPeak {
  double center_mhz = 0.0;
  double sigma_mhz = 0.0;
  double amplitude = 0.0;
};

struct FitOptions {
  bool fit_baseline = false;
  int max_iterations = 200;
  /// 0 = auto (max of 4 grid steps and 2% of the grid span).
  double min_separation_mhz = 0.0;
  /// 0 = auto (half-maximum width of the tallest peak).
  double initial_sigma_mhz = 0.0;
};

struct FitReport {
  std::vector<GaussianPeak> peaks;  // sorted by center
  double baseline = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  bool reseeded = false;
  std::vector<double> covariance_diag;  // per parameter (c,s,A)*n [,b]
};

/// Iteration cap reached or degenerate fit; carries the best parameters found.
struct fit_convergence_error : numeric_error {
  fit_convergence_error(const std::string& what, FitReport best_so_far)
      : numeric_error(what), best(std::move(best_so_far)) {}
  FitReport best;
};

/// Fits a sum of n_peaks Gaussians (optionally plus a constant baseline) by
/// Levenberg-Marquardt, seeded from the highest local maxima under a minimum
/// separation policy.  Degenerate initializations are re-seeded once.
FitReport fit_peaks(const Spectrum& spectrum, int n_peaks,
                    const FitOptions& options = {});

/// Rescales fitted amplitudes so the largest is 1.
void normalize_amplitudes(FitReport& report);

}  // namespace levelmix
