#include "levelmix/spectro.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "levelmix/blocks.hpp"
#include "levelmix/spectral.hpp"

namespace levelmix {

BasisState ProbeSpec::probed_lower_state() const {
  return {Manifold::lower, ground_m_j + HalfInt::from_int(probe_q), ground_m_i};
}

void ProbeSpec::validate(const SystemSpec& spec) const {
  if (probe_q < -1 || probe_q > 1) {
    throw config_error("probe_q must be -1, 0 or +1");
  }
  if (linewidth_mhz <= 0) throw config_error("linewidth must be > 0");
  const BasisState s = probed_lower_state();
  if (!valid_projection(spec.lower.j, s.m_j) ||
      !valid_projection(spec.lower.i, s.m_i)) {
    throw config_error("probed state " + s.str() +
                       " does not exist in the lower manifold");
  }
}

double signal_weight(const Eigen::VectorXd& eigenvector,
                     const std::vector<BasisState>& labels,
                     const BasisState& probed_lower_state) {
  double probed = 0.0;
  double upper = 0.0;
  for (size_t k = 0; k < labels.size(); ++k) {
    const double sq = eigenvector[static_cast<int>(k)] *
                      eigenvector[static_cast<int>(k)];
    if (labels[k] == probed_lower_state) probed = sq;
    if (labels[k].manifold == Manifold::upper) upper += sq;
  }
  return probed * upper;
}

void OmegaDistribution::validate() const {
  double sum = 0.0;
  for (const OmegaSample& s : samples) {
    if (s.weight < 0 || s.omega_mhz < 0) {
      throw config_error("omega distribution: negative sample");
    }
    sum += s.weight;
  }
  if (samples.empty() || std::abs(sum - 1.0) > 1e-9) {
    throw config_error("omega distribution: weights must sum to 1");
  }
}

OmegaDistribution homogeneous_distribution(double peak_omega_mhz) {
  if (peak_omega_mhz < 0) throw config_error("peak omega must be >= 0");
  OmegaDistribution d;
  d.model = DistributionModel::homogeneous;
  d.samples = {{peak_omega_mhz, 1.0}};
  return d;
}

void TrapConfig::validate() const {
  if (waist1 <= 0 || waist2 <= 0) throw config_error("trap: waists must be > 0");
  if (power1 <= 0 || power2 <= 0) throw config_error("trap: powers must be > 0");
  if (temperature <= 0) throw config_error("trap: temperature must be > 0");
  if (depth_scale <= 0) throw config_error("trap: depth_scale must be > 0");
  if (coupling_beam != 1 && coupling_beam != 2) {
    throw config_error("trap: coupling_beam must be 1 or 2");
  }
  if (box_halfwidth_waists <= 0) throw config_error("trap: box must be > 0");
}

double TrapConfig::depth_kt(int beam) const {
  const double w = beam == 1 ? waist1 : waist2;
  const double p = beam == 1 ? power1 : power2;
  return depth_scale * p / (w * w * temperature);
}

OmegaDistribution trap_omega_distribution(const TrapConfig& trap,
                                          double peak_omega_mhz,
                                          int n_samples, std::uint64_t seed) {
  trap.validate();
  if (peak_omega_mhz < 0) throw config_error("peak omega must be >= 0");
  if (n_samples < 1) throw config_error("n_samples must be >= 1");

  const double u1 = trap.depth_kt(1);
  const double u2 = trap.depth_kt(2);
  const double theta = trap.crossing_angle_deg * M_PI / 180.0;
  // Beam 1 along x, beam 2 in the xy plane at the crossing angle.
  const double ax2[3] = {std::cos(theta), std::sin(theta), 0.0};

  const auto rho_sq = [](const double r[3], const double axis[3]) {
    const double dot = r[0] * axis[0] + r[1] * axis[1] + r[2] * axis[2];
    return r[0] * r[0] + r[1] * r[1] + r[2] * r[2] - dot * dot;
  };
  // Potential depth at r in k_B T units (positive, max at the crossing).
  const auto phi = [&](const double r[3]) {
    const double axis1[3] = {1.0, 0.0, 0.0};
    const double rho1 = rho_sq(r, axis1);
    const double rho2 = rho_sq(r, ax2);
    return u1 * std::exp(-2.0 * rho1 / (trap.waist1 * trap.waist1)) +
           u2 * std::exp(-2.0 * rho2 / (trap.waist2 * trap.waist2));
  };

  // Importance sampling of the trapped excess density exp(phi) - 1 with a
  // half box / half central-Gaussian proposal.  The Gaussian component
  // matches the harmonic width of the central peak so cold clouds are still
  // covered.
  const double wmax = std::max(trap.waist1, trap.waist2);
  const double box = trap.box_halfwidth_waists * wmax;
  const double sigma = std::min(trap.waist1, trap.waist2) /
                       (2.0 * std::sqrt(std::max(1.0, u1 + u2)));
  const double box_pdf = 1.0 / std::pow(2.0 * box, 3);
  const double gauss_norm = 1.0 / std::pow(2.0 * M_PI * sigma * sigma, 1.5);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int cbeam = trap.coupling_beam;
  const double wc = cbeam == 1 ? trap.waist1 : trap.waist2;
  std::vector<double> factor(n_samples);
  std::vector<double> logw(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    double r[3];
    if (unit(rng) < 0.5) {
      for (double& x : r) x = (2.0 * unit(rng) - 1.0) * box;
    } else {
      for (double& x : r) x = sigma * normal(rng);
    }
    const double ph = phi(r);
    // log(exp(phi) - 1), overflow-safe for deep traps.
    const double log_density =
        ph > 1e-12 ? ph + std::log1p(-std::exp(-ph))
                   : std::log(std::max(ph, 1e-300));
    const bool in_box = std::abs(r[0]) <= box && std::abs(r[1]) <= box &&
                        std::abs(r[2]) <= box;
    const double rr = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    const double proposal = 0.5 * (in_box ? box_pdf : 0.0) +
                            0.5 * gauss_norm * std::exp(-rr / (2 * sigma * sigma));
    logw[k] = log_density - std::log(proposal);
    const double axis1[3] = {1.0, 0.0, 0.0};
    const double rho_c = cbeam == 1 ? rho_sq(r, axis1) : rho_sq(r, ax2);
    factor[k] = std::exp(-rho_c / (wc * wc));  // sqrt of relative intensity
  }

  const double shift = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  double fmax = 0.0;
  std::vector<double> weight(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    weight[k] = std::exp(logw[k] - shift);
    total += weight[k];
    if (weight[k] > 0) fmax = std::max(fmax, factor[k]);
  }

  OmegaDistribution d;
  d.model = DistributionModel::trap_sampled;
  d.seed = seed;
  d.samples.reserve(n_samples);
  for (int k = 0; k < n_samples; ++k) {
    d.samples.push_back({peak_omega_mhz * factor[k] / fmax, weight[k] / total});
  }
  d.validate();
  return d;
}

Spectrum synthesize_spectrum(const SystemSpec& spec, const ProbeSpec& probe,
                             const OmegaDistribution& dist,
                             double peak_omega_mhz,
                             const std::vector<double>& detuning_grid) {
  probe.validate(spec);
  dist.validate();
  if (detuning_grid.empty()) {
    throw config_error("synthesize_spectrum: empty detuning grid");
  }
  for (size_t k = 1; k < detuning_grid.size(); ++k) {
    if (detuning_grid[k] <= detuning_grid[k - 1]) {
      throw config_error("synthesize_spectrum: detuning grid must ascend");
    }
  }
  for (const OmegaSample& s : dist.samples) {
    if (s.omega_mhz > peak_omega_mhz * (1.0 + 1e-9)) {
      throw config_error("omega distribution exceeds the nominal peak");
    }
  }

  // Only the block containing the probed state contributes: eigenstates of
  // other blocks have zero probed admixture.
  const BasisState probed = probe.probed_lower_state();
  const LabeledMatrix h_ref =
      build_hamiltonian(spec, std::max(1.0, peak_omega_mhz));
  const int probe_idx = h_ref.index_of(probed);
  const BlockDecomposition dec = decompose(h_ref, spec.polarization_q);
  const Block* block = nullptr;
  for (const Block& b : dec.blocks) {
    if (std::find(b.indices.begin(), b.indices.end(), probe_idx) !=
        b.indices.end()) {
      block = &b;
    }
  }

  Spectrum out;
  out.detuning_mhz = detuning_grid;
  out.signal.assign(detuning_grid.size(), 0.0);
  if (block == nullptr) return out;  // probed state uncoupled: no signal

  const int nb = block->size();
  int probe_local = 0;
  std::vector<char> is_upper(nb, 0);
  for (int k = 0; k < nb; ++k) {
    if (block->indices[k] == probe_idx) probe_local = k;
    is_upper[k] = h_ref.labels[block->indices[k]].manifold == Manifold::upper;
  }

  const double sg = probe.linewidth_mhz;
  const double norm = 1.0 / (sg * std::sqrt(2.0 * M_PI));
  for (const OmegaSample& s : dist.samples) {
    if (s.weight == 0.0) continue;
    const LabeledMatrix h = build_hamiltonian(spec, s.omega_mhz);
    Eigen::MatrixXd hb(nb, nb);
    for (int r = 0; r < nb; ++r) {
      for (int c = 0; c < nb; ++c) {
        hb(r, c) = h.entries(block->indices[r], block->indices[c]);
      }
    }
    const EighResult res = eigh_symmetric(hb);
    for (int e = 0; e < nb; ++e) {
      const double probed_sq = res.vectors(probe_local, e) *
                               res.vectors(probe_local, e);
      double upper_sq = 0.0;
      for (int r = 0; r < nb; ++r) {
        if (is_upper[r]) upper_sq += res.vectors(r, e) * res.vectors(r, e);
      }
      const double p = probed_sq * upper_sq;
      if (p < 1e-300) continue;
      const double center = res.values[e];
      for (size_t g = 0; g < detuning_grid.size(); ++g) {
        const double x = (detuning_grid[g] - center) / sg;
        out.signal[g] += s.weight * p * norm * std::exp(-0.5 * x * x);
      }
    }
  }
  return out;
}

namespace {

struct FitProblem {
  const std::vector<double>& x;
  const std::vector<double>& y;
  int n_peaks;
  bool baseline;

  int n_params() const { return 3 * n_peaks + (baseline ? 1 : 0); }

  double model_at(const Eigen::VectorXd& p, double xi) const {
    double v = baseline ? p[3 * n_peaks] : 0.0;
    for (int k = 0; k < n_peaks; ++k) {
      const double c = p[3 * k];
      const double s = std::abs(p[3 * k + 1]);
      const double a = p[3 * k + 2];
      const double t = (xi - c) / std::max(s, 1e-12);
      v += a * std::exp(-0.5 * t * t);
    }
    return v;
  }

  double chi_sq(const Eigen::VectorXd& p) const {
    double sum = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      const double r = model_at(p, x[i]) - y[i];
      sum += r * r;
    }
    return sum;
  }

  void residual_jacobian(const Eigen::VectorXd& p, Eigen::VectorXd& r,
                         Eigen::MatrixXd& jac) const {
    const int np = n_params();
    r.resize(static_cast<int>(x.size()));
    jac.resize(static_cast<int>(x.size()), np);
    for (size_t i = 0; i < x.size(); ++i) {
      double v = baseline ? p[3 * n_peaks] : 0.0;
      for (int k = 0; k < n_peaks; ++k) {
        const double c = p[3 * k];
        const double s = std::max(std::abs(p[3 * k + 1]), 1e-12);
        const double a = p[3 * k + 2];
        const double d = x[i] - c;
        const double g = std::exp(-0.5 * d * d / (s * s));
        v += a * g;
        jac(static_cast<int>(i), 3 * k) = a * g * d / (s * s);
        jac(static_cast<int>(i), 3 * k + 1) =
            (p[3 * k + 1] < 0 ? -1.0 : 1.0) * a * g * d * d / (s * s * s);
        jac(static_cast<int>(i), 3 * k + 2) = g;
      }
      if (baseline) jac(static_cast<int>(i), 3 * n_peaks) = 1.0;
      r[static_cast<int>(i)] = v - y[i];
    }
  }
};

// Initial centers: tallest local maxima spaced by at least min_sep.
std::vector<double> initial_centers(const std::vector<double>& x,
                                    const std::vector<double>& y, int n_peaks,
                                    double min_sep) {
  struct Peak {
    double x, y;
  };
  std::vector<Peak> maxima;
  for (size_t i = 1; i + 1 < x.size(); ++i) {
    if (y[i] > y[i - 1] && y[i] >= y[i + 1]) maxima.push_back({x[i], y[i]});
  }
  std::sort(maxima.begin(), maxima.end(),
            [](const Peak& a, const Peak& b) { return a.y > b.y; });
  std::vector<double> centers;
  for (const Peak& m : maxima) {
    if (static_cast<int>(centers.size()) >= n_peaks) break;
    bool clear = true;
    for (double c : centers) {
      if (std::abs(c - m.x) < min_sep) clear = false;
    }
    if (clear) centers.push_back(m.x);
  }
  // Not enough maxima: fill with evenly spaced positions avoiding the found ones.
  int quantile = 1;
  while (static_cast<int>(centers.size()) < n_peaks) {
    const double span = x.back() - x.front();
    const double cand =
        x.front() + span * quantile / (n_peaks + 1.0);
    ++quantile;
    if (quantile > 4 * n_peaks) {
      centers.push_back(cand);  // give up on spacing
      continue;
    }
    bool clear = true;
    for (double c : centers) {
      if (std::abs(c - cand) < min_sep) clear = false;
    }
    if (clear) centers.push_back(cand);
  }
  return centers;
}

double half_max_sigma(const std::vector<double>& x, const std::vector<double>& y,
                      double center) {
  size_t ic = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (std::abs(x[i] - center) < std::abs(x[ic] - center)) ic = i;
  }
  const double half = y[ic] / 2.0;
  size_t lo = ic, hi = ic;
  while (lo > 0 && y[lo] > half) --lo;
  while (hi + 1 < x.size() && y[hi] > half) ++hi;
  const double fwhm = x[hi] - x[lo];
  return fwhm > 0 ? fwhm / 2.3548 : (x.back() - x.front()) / 20.0;
}

FitReport run_lm(const FitProblem& prob, Eigen::VectorXd p, int max_iter) {
  double chi = prob.chi_sq(p);
  double lambda = 1e-3;
  int iterations = 0;
  bool converged = false;
  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  while (iterations < max_iter) {
    ++iterations;
    prob.residual_jacobian(p, r, jac);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    Eigen::MatrixXd damped = jtj;
    for (int k = 0; k < damped.rows(); ++k) {
      damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
    }
    const Eigen::VectorXd step = damped.ldlt().solve(-g);
    if (!step.allFinite()) {
      lambda *= 8.0;
      if (lambda > 1e12) break;
      continue;
    }
    const Eigen::VectorXd p_new = p + step;
    const double chi_new = prob.chi_sq(p_new);
    if (chi_new <= chi) {
      const double rel_drop = (chi - chi_new) / std::max(chi, 1e-300);
      p = p_new;
      chi = chi_new;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (rel_drop < 1e-12 || chi < 1e-28) {
        converged = true;
        break;
      }
    } else {
      lambda *= 8.0;
      if (lambda > 1e12) {
        converged = true;  // stuck in a minimum to machine precision
        break;
      }
    }
  }

  FitReport rep;
  rep.iterations = iterations;
  rep.converged = converged;
  rep.residual_norm = std::sqrt(chi);
  for (int k = 0; k < prob.n_peaks; ++k) {
    rep.peaks.push_back({p[3 * k], std::abs(p[3 * k + 1]), p[3 * k + 2]});
  }
  if (prob.baseline) rep.baseline = p[3 * prob.n_peaks];
  std::sort(rep.peaks.begin(), rep.peaks.end(),
            [](const GaussianPeak& a, const GaussianPeak& b) {
              return a.center_mhz < b.center_mhz;
            });
  // Covariance estimate from the final Jacobian.
  prob.residual_jacobian(p, r, jac);
  const int dof =
      std::max(1, static_cast<int>(prob.x.size()) - prob.n_params());
  const double s2 = chi / dof;
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  const Eigen::MatrixXd cov =
      s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
  for (int k = 0; k < prob.n_params(); ++k) {
    rep.covariance_diag.push_back(cov(k, k));
  }
  return rep;
}

bool centers_degenerate(const FitReport& rep, double min_sep) {
  for (size_t a = 0; a < rep.peaks.size(); ++a) {
    for (size_t b = a + 1; b < rep.peaks.size(); ++b) {
      if (std::abs(rep.peaks[a].center_mhz - rep.peaks[b].center_mhz) <
          0.1 * min_sep) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

FitReport fit_peaks(const Spectrum& spectrum, int n_peaks,
                    const FitOptions& options) {
  const std::vector<double>& x = spectrum.detuning_mhz;
  const std::vector<double>& y = spectrum.signal;
  if (n_peaks < 1) throw config_error("fit_peaks: n_peaks must be >= 1");
  if (x.size() != y.size() || x.size() < static_cast<size_t>(9 * n_peaks)) {
    throw config_error("fit_peaks: need at least 9 samples per peak");
  }

  const double span = x.back() - x.front();
  const double step = span / (static_cast<double>(x.size()) - 1.0);
  const double min_sep = options.min_separation_mhz > 0
                             ? options.min_separation_mhz
                             : std::max(4.0 * step, 0.02 * span);

  const FitProblem prob{x, y, n_peaks, options.fit_baseline};
  const double y_min = *std::min_element(y.begin(), y.end());

  const auto make_params = [&](const std::vector<double>& centers,
                               double jitter) {
    Eigen::VectorXd p(prob.n_params());
    for (int k = 0; k < n_peaks; ++k) {
      const double c = centers[k] + jitter * (k % 2 == 0 ? 1.0 : -1.0) *
                                        (1.0 + k / 2) * min_sep * 0.37;
      const double s = options.initial_sigma_mhz > 0
                           ? options.initial_sigma_mhz
                           : half_max_sigma(x, y, centers[k]);
      size_t ic = 0;
      for (size_t i = 0; i < x.size(); ++i) {
        if (std::abs(x[i] - c) < std::abs(x[ic] - c)) ic = i;
      }
      p[3 * k] = c;
      p[3 * k + 1] = s;
      p[3 * k + 2] = std::max(y[ic] - (options.fit_baseline ? y_min : 0.0),
                              1e-6 * (*std::max_element(y.begin(), y.end())));
    }
    if (options.fit_baseline) p[3 * n_peaks] = y_min;
    return p;
  };

  const std::vector<double> centers = initial_centers(x, y, n_peaks, min_sep);
  FitReport rep = run_lm(prob, make_params(centers, 0.0),
                         options.max_iterations);
  if (rep.converged && !centers_degenerate(rep, min_sep)) return rep;

  // Re-seed once with jittered centers, then give up.
  FitReport retry = run_lm(prob, make_params(centers, 1.0),
                           options.max_iterations);
  retry.reseeded = true;
  if (retry.converged && !centers_degenerate(retry, min_sep)) return retry;

  const FitReport& best =
      retry.residual_norm < rep.residual_norm ? retry : rep;
  throw fit_convergence_error(
      best.converged
          ? "fit_peaks: degenerate (overlapping) peak positions"
          : "fit_peaks: no convergence within " +
                std::to_string(options.max_iterations) + " iterations",
      best);
}

void normalize_amplitudes(FitReport& report) {
  double amax = 0.0;
  for (const GaussianPeak& p : report.peaks) {
    amax = std::max(amax, std::abs(p.amplitude));
  }
  if (amax == 0.0) return;
  for (GaussianPeak& p : report.peaks) p.amplitude /= amax;
  report.baseline /= amax;
}

}  // namespace levelmix
