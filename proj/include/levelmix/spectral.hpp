#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "levelmix/blocks.hpp"
#include "levelmix/model.hpp"

namespace levelmix {

struct EighResult {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns, vectors.col(k) <-> values[k]
};

/// Diagonalizes a real symmetric matrix by cyclic Jacobi rotations.
/// Convergence: off-diagonal Frobenius norm <= 1e-12 * ||M||_F, capped at
/// 100 sweeps (numeric_error beyond that).  Input must be symmetric to 1e-9
/// relative (std::invalid_argument otherwise).
EighResult eigh_symmetric(const Eigen::MatrixXd& m);

/// Exact eigenvalues ((delta - r)/2, (delta + r)/2), r = sqrt(delta^2 + omega^2),
/// of the resonance-frame two-level Hamiltonian [[0, omega/2], [omega/2, delta]].
std::pair<double, double> two_level_reference(double omega_mhz, double delta_mhz);

/// Eigenvalue multiset of two degenerate manifolds coupled by the given
/// half-coupling block (rows: lower states, cols: upper states): a
/// (delta +- sqrt(delta^2 + (2 s_k)^2))/2 pair per singular value s_k plus
/// leftover dark states at 0 (lower surplus) or delta (upper surplus).
/// Sorted ascending.
std::vector<double> morris_shore_reference(const Eigen::MatrixXd& half_coupling,
                                           double delta_mhz);

/// Morris-Shore eigenvalues for a whole system; requires both manifolds
/// internally degenerate (hyperfine A == 0), else config_error.
std::vector<double> morris_shore_for_system(const SystemSpec& spec,
                                            double omega_mhz);

enum class BranchTag { dark, bright, chameleon_candidate };

std::string to_string(BranchTag tag);

/// One eigenstate tracked continuously over the drive-strength grid.
struct Branch {
  int block_id = 0;       // 0..blocks-1, then one id per dark singleton
  HalfInt block_mtilde;
  bool singleton = false;
  std::vector<double> energies_mhz;        // per grid point
  std::vector<Eigen::VectorXd> vectors;    // full-basis components per point
  BranchTag tag = BranchTag::bright;       // filled by classify_branches
};

struct EigenBranchSet {
  std::vector<double> omega_grid;
  std::vector<BasisState> labels;
  BlockDecomposition decomposition;
  std::vector<Branch> branches;
  std::vector<std::string> log;  // pairing-ambiguity notes
};

/// Diagonalizes every symmetry block at every grid point and pairs branches
/// between consecutive points by maximum absolute eigenvector overlap
/// (greedy, largest first; ties within 1e-6 resolved by energy proximity and
/// logged).  Degenerate eigenvector clusters are aligned with the adjacent
/// grid point so branches vary continuously through level crossings.
EigenBranchSet sweep(const SystemSpec& spec, const std::vector<double>& omega_grid);

/// Weak-coupling two-level reduction of one hyperfine level |F, m_F>:
/// effective Rabi frequency per unit drive, detuning from the resonant level
/// and the resulting extrapolated energy pair per grid point.
struct ExtrapolatedLevel {
  HalfInt f;
  HalfInt m_f;
  double rabi_slope = 0.0;   // Omega_F / Omega
  double delta_mhz = 0.0;    // detuning of this level from the driven one
  double offset_mhz = 0.0;   // energy of the bare |F, m_F> level
  std::vector<double> lower_energies_mhz;  // per grid point
  std::vector<double> upper_energies_mhz;
};

/// Dashed-line reference: for every lower-manifold hyperfine level in the
/// block, the hypothetical independent two-level energies
/// offset + two_level_reference(rabi_slope * omega, delta).  Requires a
/// degenerate upper manifold (hyperfine A == 0), else config_error.
std::vector<ExtrapolatedLevel> two_level_extrapolation(
    const SystemSpec& spec, const Block& block,
    const std::vector<BasisState>& labels,
    const std::vector<double>& omega_grid);

struct ClassifyPolicy {
  /// Energy-deviation threshold for darkness, relative to max(omega_grid).
  double dark_rel_tol = 1e-6;
  /// Fraction of the grid (from the top) that must be strictly decreasing.
  double window_fraction = 0.25;
  /// Require the admixture maximum at an interior grid point (a genuine
  /// turnover) rather than at the first point.
  bool require_interior_max = true;
};

struct Classification {
  BranchTag tag = BranchTag::bright;
  std::vector<double> admixture;   // |<probe|Psi>|^2 per grid point
  int turnover_index = -1;         // argmax of the admixture
  double turnover_omega_mhz = 0.0;
};

/// Classifies one branch against the probed basis state: dark if its energy
/// never moves, chameleon-candidate if the probed admixture peaks at an
/// interior drive strength and then decreases strictly across the top window
/// of the grid, bright otherwise.
Classification classify(const Branch& branch,
                        const std::vector<double>& omega_grid,
                        const std::vector<BasisState>& labels,
                        const BasisState& probe_state,
                        const ClassifyPolicy& policy = {});

/// Classifies every branch in place and returns the per-branch details.
std::vector<Classification> classify_branches(EigenBranchSet& set,
                                              const BasisState& probe_state,
                                              const ClassifyPolicy& policy = {});

}  // namespace levelmix
