#include "levelmix/model.hpp"

#include <cmath>

#include "levelmix/angmom.hpp"
#include "levelmix/errors.hpp"

namespace levelmix {

std::string BasisState::str() const {
  return std::string(manifold == Manifold::lower ? "L(" : "U(") + m_j.str() +
         "," + m_i.str() + ")";
}

void ManifoldSpec::validate() const {
  if (j.twice() < 0 || i.twice() < 0) {
    throw config_error("manifold '" + label + "': J and I must be >= 0");
  }
}

void SystemSpec::validate() const {
  lower.validate();
  upper.validate();
  if (polarization_q < -1 || polarization_q > 1) {
    throw config_error("polarization_q must be -1, 0 or +1");
  }
  if (reference_upper_mj - reference_lower_mj !=
      HalfInt::from_int(polarization_q)) {
    throw config_error("reference transition violates the selection rule "
                       "upper m_j = lower m_j + q");
  }
  if (!valid_projection(lower.j, reference_lower_mj) ||
      !valid_projection(upper.j, reference_upper_mj)) {
    throw config_error("reference transition m_j outside the manifolds");
  }
  if (std::abs(reference_cg()) < 1e-14) {
    throw config_error("reference transition has zero Clebsch-Gordan "
                       "coefficient; it cannot define the Rabi frequency");
  }
  if (detuning_mode == DetuningMode::resonant_with_f) {
    const HalfInt fmin = lower.j > lower.i ? lower.j - lower.i
                                           : lower.i - lower.j;
    const HalfInt fmax = lower.j + lower.i;
    if (resonant_f < fmin || resonant_f > fmax ||
        (fmax.twice() - resonant_f.twice()) % 2 != 0) {
      throw config_error("resonant F = " + resonant_f.str() +
                         " outside |J-I|..J+I = " + fmin.str() + ".." +
                         fmax.str());
    }
  }
}

double SystemSpec::reference_cg() const {
  return clebsch_gordan(lower.j, reference_lower_mj, HalfInt::from_int(1),
                        HalfInt::from_int(polarization_q), upper.j,
                        reference_upper_mj);
}

double SystemSpec::effective_delta_mhz() const {
  if (detuning_mode == DetuningMode::explicit_delta) return explicit_delta_mhz;
  // Drive resonant with the F0 hyperfine level of the lower manifold.
  return lower.hyperfine_a_mhz * lande_idotj(resonant_f, lower.j, lower.i) +
         lower.base_energy_mhz - upper.base_energy_mhz;
}

int LabeledMatrix::index_of(const BasisState& s) const {
  for (size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == s) return static_cast<int>(k);
  }
  return -1;
}

std::vector<BasisState> build_basis(const SystemSpec& spec) {
  spec.validate();
  std::vector<BasisState> basis;
  basis.reserve(static_cast<size_t>(spec.lower.dimension()) +
                spec.upper.dimension());
  for (const auto& [mj, mi] : spin_pair_basis(spec.lower.j, spec.lower.i)) {
    basis.push_back({Manifold::lower, mj, mi});
  }
  for (const auto& [mj, mi] : spin_pair_basis(spec.upper.j, spec.upper.i)) {
    basis.push_back({Manifold::upper, mj, mi});
  }
  return basis;
}

LabeledMatrix build_coupling(const SystemSpec& spec, double omega_mhz) {
  if (omega_mhz < 0) throw config_error("omega must be >= 0");
  LabeledMatrix out;
  out.labels = build_basis(spec);
  const int n = out.dim();
  const int nl = spec.lower.dimension();
  out.entries = Eigen::MatrixXd::Zero(n, n);

  const double cg_ref = spec.reference_cg();
  const HalfInt q = HalfInt::from_int(spec.polarization_q);
  const HalfInt one = HalfInt::from_int(1);
  for (int k = 0; k < nl; ++k) {
    const BasisState& low = out.labels[k];
    const BasisState up{Manifold::upper, low.m_j + q, low.m_i};
    if (!valid_projection(spec.upper.j, up.m_j) ||
        !valid_projection(spec.upper.i, up.m_i)) {
      continue;
    }
    const int ku = out.index_of(up);
    if (ku < 0) continue;
    const double cg = clebsch_gordan(spec.lower.j, low.m_j, one, q,
                                     spec.upper.j, up.m_j);
    const double v = 0.5 * omega_mhz * cg / cg_ref;
    out.entries(k, ku) = v;
    out.entries(ku, k) = v;
  }
  return out;
}

LabeledMatrix build_hamiltonian(const SystemSpec& spec, double omega_mhz) {
  LabeledMatrix h = build_coupling(spec, omega_mhz);
  const int nl = spec.lower.dimension();
  const int nu = spec.upper.dimension();

  h.entries.block(0, 0, nl, nl) +=
      spec.lower.hyperfine_a_mhz * idotj_matrix(spec.lower.j, spec.lower.i);
  h.entries.block(nl, nl, nu, nu) +=
      spec.upper.hyperfine_a_mhz * idotj_matrix(spec.upper.j, spec.upper.i);

  const double diag_low = spec.lower.base_energy_mhz;
  const double diag_up = spec.upper.base_energy_mhz + spec.effective_delta_mhz();
  for (int k = 0; k < nl; ++k) h.entries(k, k) += diag_low;
  for (int k = nl; k < nl + nu; ++k) h.entries(k, k) += diag_up;

  const double asym = (h.entries - h.entries.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, h.entries.cwiseAbs().maxCoeff());
  if (asym > 1e-12 * scale) {
    throw numeric_error("assembled Hamiltonian is not symmetric");
  }
  return h;
}

}  // namespace levelmix
