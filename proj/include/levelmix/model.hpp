#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "levelmix/halfint.hpp"

namespace levelmix {

enum class Manifold { lower, upper };

/// One product state |manifold, m_j, m_I> of the uncoupled basis.
struct BasisState {
  Manifold manifold = Manifold::lower;
  HalfInt m_j;
  HalfInt m_i;

  bool operator==(const BasisState&) const = default;
  /// "L(3/2,1/2)" / "U(5/2,-3/2)"
  std::string str() const;
};

/// One Zeeman manifold: electronic J, nuclear I, hyperfine constant A and a
/// constant energy offset.  A = 0 gives a fully degenerate manifold.
struct ManifoldSpec {
  std::string label;
  HalfInt j;
  HalfInt i;
  double hyperfine_a_mhz = 0.0;
  double base_energy_mhz = 0.0;

  int dimension() const { return multiplicity(j) * multiplicity(i); }
  void validate() const;
};

enum class DetuningMode { resonant_with_f, explicit_delta };

/// Declarative description of the driven two-manifold system.
struct SystemSpec {
  ManifoldSpec lower;
  ManifoldSpec upper;
  /// Drive polarization: -1 (sigma-), 0 (pi), +1 (sigma+).
  int polarization_q = 1;
  DetuningMode detuning_mode = DetuningMode::resonant_with_f;
  /// Hyperfine level the drive is resonant with (resonant_with_f mode).
  HalfInt resonant_f;
  /// Upper-manifold offset in MHz (explicit_delta mode).
  double explicit_delta_mhz = 0.0;
  /// Transition that defines the Rabi frequency: the coupling entry between
  /// these m_j values (at the same m_I) is exactly omega/2.
  HalfInt reference_lower_mj;
  HalfInt reference_upper_mj;

  void validate() const;
  /// Upper-manifold diagonal offset implementing the detuning convention.
  double effective_delta_mhz() const;
  /// Clebsch-Gordan coefficient of the reference transition (nonzero by
  /// validation).
  double reference_cg() const;
};

/// Dense real symmetric matrix in MHz with per-row/column basis labels.
/// Immutable by convention once built.
struct LabeledMatrix {
  std::vector<BasisState> labels;
  Eigen::MatrixXd entries;

  int dim() const { return static_cast<int>(labels.size()); }
  /// Index of a state, -1 if absent.
  int index_of(const BasisState& s) const;
};

/// Uncoupled product basis: lower manifold first, then upper; within a
/// manifold m_j descending then m_I descending.
std::vector<BasisState> build_basis(const SystemSpec& spec);

/// Drive coupling matrix over the full basis: support only on the
/// lower<->upper block.  Entry between |lower, m_j, m_I> and
/// |upper, m_j+q, m_I> is (omega/2) * CG(J_low m_j; 1 q | J_up m_j+q) / CG_ref.
LabeledMatrix build_coupling(const SystemSpec& spec, double omega_mhz);

/// Full Hamiltonian: hyperfine blocks on the diagonal, the coupling on the
/// off-diagonal block and the effective detuning on the upper diagonal.
LabeledMatrix build_hamiltonian(const SystemSpec& spec, double omega_mhz);

}  // namespace levelmix
