#include "levelmix/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "levelmix/angmom.hpp"
#include "levelmix/errors.hpp"

namespace levelmix {

EighResult eigh_symmetric(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (m.cols() != n) throw std::invalid_argument("eigh_symmetric: not square");
  if (n == 0) return {Eigen::VectorXd(0), Eigen::MatrixXd(0, 0)};

  const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * scale) {
    throw std::invalid_argument("eigh_symmetric: matrix not symmetric (max "
                                "asymmetry " + std::to_string(asym) + ")");
  }

  Eigen::MatrixXd a = 0.5 * (m + m.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double total_norm = a.norm();
  const double tol = 1e-12 * std::max(total_norm, 1e-300);

  const auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    }
    return std::sqrt(s);
  };

  int sweeps = 0;
  while (off_norm() > tol) {
    if (++sweeps > 100) {
      throw numeric_error("eigh_symmetric: no convergence after 100 sweeps "
                          "(n = " + std::to_string(n) + ", off-diagonal norm " +
                          std::to_string(off_norm()) + ")");
    }
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Stable rotation choice (smaller angle root).
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return a(x, x) < a(y, y); });
  EighResult out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

std::pair<double, double> two_level_reference(double omega_mhz,
                                              double delta_mhz) {
  if (omega_mhz < 0) throw std::invalid_argument("two_level_reference: omega < 0");
  const double r = std::hypot(delta_mhz, omega_mhz);
  return {(delta_mhz - r) / 2.0, (delta_mhz + r) / 2.0};
}

std::vector<double> morris_shore_reference(const Eigen::MatrixXd& half_coupling,
                                           double delta_mhz) {
  const int nl = static_cast<int>(half_coupling.rows());
  const int nu = static_cast<int>(half_coupling.cols());
  // Singular values from the smaller Gram matrix.
  Eigen::MatrixXd gram;
  if (nl <= nu) {
    gram = half_coupling * half_coupling.transpose();
  } else {
    gram = half_coupling.transpose() * half_coupling;
  }
  const EighResult g = eigh_symmetric(gram);
  std::vector<double> values;
  values.reserve(static_cast<size_t>(nl) + nu);
  for (int k = 0; k < g.values.size(); ++k) {
    const double sk = std::sqrt(std::max(0.0, g.values[k]));
    const double r = std::hypot(delta_mhz, 2.0 * sk);
    values.push_back((delta_mhz - r) / 2.0);
    values.push_back((delta_mhz + r) / 2.0);
  }
  const int surplus = std::abs(nl - nu);
  for (int k = 0; k < surplus; ++k) {
    values.push_back(nl > nu ? 0.0 : delta_mhz);
  }
  std::sort(values.begin(), values.end());
  return values;
}

std::vector<double> morris_shore_for_system(const SystemSpec& spec,
                                            double omega_mhz) {
  if (spec.lower.hyperfine_a_mhz != 0.0 || spec.upper.hyperfine_a_mhz != 0.0) {
    throw config_error("Morris-Shore reference requires degenerate manifolds "
                       "(hyperfine A = 0 on both)");
  }
  const LabeledMatrix c = build_coupling(spec, omega_mhz);
  const int nl = spec.lower.dimension();
  const int nu = spec.upper.dimension();
  const Eigen::MatrixXd half = c.entries.block(0, nl, nl, nu);
  std::vector<double> values =
      morris_shore_reference(half, spec.effective_delta_mhz());
  const double base_low = spec.lower.base_energy_mhz;
  for (double& v : values) v += base_low;
  return values;
}

std::string to_string(BranchTag tag) {
  switch (tag) {
    case BranchTag::dark: return "dark";
    case BranchTag::bright: return "bright";
    case BranchTag::chameleon_candidate: return "chameleon-candidate";
  }
  return "?";
}

namespace {

// Indices grouped into clusters of (numerically) equal eigenvalues.
std::vector<std::vector<int>> degenerate_clusters(const Eigen::VectorXd& w,
                                                  double tol) {
  std::vector<std::vector<int>> clusters;
  int start = 0;
  for (int k = 1; k <= w.size(); ++k) {
    if (k == w.size() || w[k] - w[k - 1] > tol) {
      if (k - start > 1) {
        std::vector<int> c(static_cast<size_t>(k - start));
        std::iota(c.begin(), c.end(), start);
        clusters.push_back(std::move(c));
      }
      start = k;
    }
  }
  return clusters;
}

// Rotates the eigenvector columns of each degenerate cluster so they match
// the reference point's vectors: project the best-overlapping reference
// columns into the cluster span and re-orthonormalize.  Without this the
// solver's arbitrary basis inside a degeneracy (e.g. at zero drive) breaks
// branch continuity.
void align_degenerate_clusters(Eigen::MatrixXd& v, const Eigen::VectorXd& w,
                               const Eigen::MatrixXd& v_ref, double tol) {
  for (const auto& cluster : degenerate_clusters(w, tol)) {
    const int d = static_cast<int>(cluster.size());
    Eigen::MatrixXd basis(v.rows(), d);
    for (int c = 0; c < d; ++c) basis.col(c) = v.col(cluster[c]);
    // Reference columns ranked by their projection onto the cluster span.
    const Eigen::MatrixXd coeff = basis.transpose() * v_ref;  // d x n
    std::vector<int> by_proj(v_ref.cols());
    std::iota(by_proj.begin(), by_proj.end(), 0);
    std::stable_sort(by_proj.begin(), by_proj.end(), [&](int a, int b) {
      return coeff.col(a).squaredNorm() > coeff.col(b).squaredNorm();
    });
    std::vector<Eigen::VectorXd> replacement;
    int pick = 0;
    for (int c = 0; c < d; ++c) {
      Eigen::VectorXd cand;
      double nrm = 0.0;
      while (pick < static_cast<int>(by_proj.size())) {
        cand = basis * coeff.col(by_proj[pick]);
        ++pick;
        for (const auto& u : replacement) cand -= u.dot(cand) * u;
        nrm = cand.norm();
        if (nrm > 1e-6) break;
      }
      if (nrm <= 1e-6) {
        // Not enough independent reference directions; keep original column.
        cand = basis.col(c);
        for (const auto& u : replacement) cand -= u.dot(cand) * u;
        nrm = cand.norm();
      }
      replacement.push_back(cand / nrm);
    }
    for (int c = 0; c < d; ++c) v.col(cluster[c]) = replacement[c];
  }
}

// Greedy max-overlap assignment between consecutive grid points.
// Returns perm with perm[branch] = column of v_next continuing that branch.
std::vector<int> pair_branches(const Eigen::MatrixXd& v_prev,
                               const Eigen::VectorXd& e_prev,
                               const Eigen::MatrixXd& v_next,
                               const Eigen::VectorXd& e_next, double omega,
                               std::vector<std::string>* log) {
  const int n = static_cast<int>(v_prev.cols());
  const Eigen::MatrixXd overlap = (v_prev.transpose() * v_next).cwiseAbs();
  struct Entry {
    double o;
    int r, c;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) entries.push_back({overlap(r, c), r, c});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.o != b.o) return a.o > b.o;
    return a.r != b.r ? a.r < b.r : a.c < b.c;
  });
  std::vector<int> perm(n, -1);
  std::vector<char> used(n, 0);
  size_t k = 0;
  int assigned = 0;
  while (assigned < n && k < entries.size()) {
    const Entry e = entries[k];
    if (perm[e.r] >= 0 || used[e.c]) {
      ++k;
      continue;
    }
    // Ambiguity: another free column overlaps this row equally well.
    int chosen = e.c;
    for (size_t k2 = k + 1; k2 < entries.size() && entries[k2].o > e.o - 1e-6;
         ++k2) {
      const Entry& e2 = entries[k2];
      if (e2.r != e.r || used[e2.c]) continue;
      if (std::abs(e_next[e2.c] - e_prev[e.r]) <
          std::abs(e_next[chosen] - e_prev[e.r])) {
        chosen = e2.c;
      }
    }
    if (chosen != e.c && log) {
      log->push_back("ambiguous branch pairing at omega = " +
                     std::to_string(omega) + "; resolved by energy proximity");
    }
    perm[e.r] = chosen;
    used[chosen] = 1;
    ++assigned;
    ++k;
  }
  for (int r = 0; r < n; ++r) {
    if (perm[r] < 0) {
      for (int c = 0; c < n; ++c) {
        if (!used[c]) {
          perm[r] = c;
          used[c] = 1;
          break;
        }
      }
    }
  }
  return perm;
}

}  // namespace

EigenBranchSet sweep(const SystemSpec& spec,
                     const std::vector<double>& omega_grid) {
  if (omega_grid.empty()) throw config_error("sweep: empty omega grid");
  for (size_t k = 0; k < omega_grid.size(); ++k) {
    if (omega_grid[k] < 0) throw config_error("sweep: omega grid must be >= 0");
    if (k > 0 && omega_grid[k] <= omega_grid[k - 1]) {
      throw config_error("sweep: omega grid must be strictly ascending");
    }
  }

  EigenBranchSet set;
  set.omega_grid = omega_grid;

  // Block structure from a strictly positive reference drive; the pattern is
  // identical for every omega > 0.
  const double omega_ref = std::max(1.0, omega_grid.back());
  const LabeledMatrix h_ref = build_hamiltonian(spec, omega_ref);
  set.labels = h_ref.labels;
  set.decomposition = decompose(h_ref, spec.polarization_q);

  const size_t np = omega_grid.size();
  std::vector<Eigen::MatrixXd> hs(np);
  for (size_t gi = 0; gi < np; ++gi) {
    hs[gi] = build_hamiltonian(spec, omega_grid[gi]).entries;
  }
  const int dim = static_cast<int>(set.labels.size());

  int block_id = 0;
  for (const Block& block : set.decomposition.blocks) {
    const int nb = block.size();
    std::vector<Eigen::VectorXd> evals(np);
    std::vector<Eigen::MatrixXd> evecs(np);
    double emax = 0.0;
    for (size_t gi = 0; gi < np; ++gi) {
      Eigen::MatrixXd hb(nb, nb);
      for (int r = 0; r < nb; ++r) {
        for (int c = 0; c < nb; ++c) {
          hb(r, c) = hs[gi](block.indices[r], block.indices[c]);
        }
      }
      EighResult res = eigh_symmetric(hb);
      evals[gi] = std::move(res.values);
      evecs[gi] = std::move(res.vectors);
      emax = std::max(emax, evals[gi].cwiseAbs().maxCoeff());
    }
    const double cluster_tol = 1e-6 * std::max(1.0, emax);
    for (size_t gi = 1; gi < np; ++gi) {
      align_degenerate_clusters(evecs[gi], evals[gi], evecs[gi - 1], cluster_tol);
    }
    if (np > 1) {
      align_degenerate_clusters(evecs[0], evals[0], evecs[1], cluster_tol);
    }

    // Pair consecutive points; perms[gi] maps branch -> column at point gi.
    std::vector<std::vector<int>> perms(np);
    perms[0].resize(nb);
    std::iota(perms[0].begin(), perms[0].end(), 0);
    for (size_t gi = 1; gi < np; ++gi) {
      Eigen::MatrixXd vp(nb, nb);
      Eigen::VectorXd ep(nb);
      for (int b = 0; b < nb; ++b) {
        vp.col(b) = evecs[gi - 1].col(perms[gi - 1][b]);
        ep[b] = evals[gi - 1][perms[gi - 1][b]];
      }
      perms[gi] = pair_branches(vp, ep, evecs[gi], evals[gi], omega_grid[gi],
                                &set.log);
    }

    std::vector<Branch> block_branches(nb);
    for (int b = 0; b < nb; ++b) {
      Branch& br = block_branches[b];
      br.block_id = block_id;
      br.block_mtilde = block.mtilde;
      br.energies_mhz.resize(np);
      br.vectors.resize(np);
    }
    for (size_t gi = 0; gi < np; ++gi) {
      for (int b = 0; b < nb; ++b) {
        const int col = perms[gi][b];
        Branch& br = block_branches[b];
        br.energies_mhz[gi] = evals[gi][col];
        Eigen::VectorXd full = Eigen::VectorXd::Zero(dim);
        Eigen::VectorXd local = evecs[gi].col(col);
        // Sign continuity along the branch.
        if (gi > 0) {
          double dot = 0.0;
          for (int r = 0; r < nb; ++r) {
            dot += br.vectors[gi - 1][block.indices[r]] * local[r];
          }
          if (dot < 0) local = -local;
          evecs[gi].col(col) = local;
        }
        for (int r = 0; r < nb; ++r) full[block.indices[r]] = local[r];
        br.vectors[gi] = std::move(full);
      }
    }
    // Stable branch ids: ascending energy at the last grid point.
    std::sort(block_branches.begin(), block_branches.end(),
              [](const Branch& a, const Branch& b) {
                return a.energies_mhz.back() < b.energies_mhz.back();
              });
    for (Branch& br : block_branches) set.branches.push_back(std::move(br));
    ++block_id;
  }

  for (int idx : set.decomposition.dark_singletons) {
    Branch br;
    br.block_id = block_id++;
    br.block_mtilde = mtilde(set.labels[idx], spec.polarization_q);
    br.singleton = true;
    br.energies_mhz.resize(np);
    br.vectors.resize(np);
    for (size_t gi = 0; gi < np; ++gi) {
      br.energies_mhz[gi] = hs[gi](idx, idx);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      v[idx] = 1.0;
      br.vectors[gi] = std::move(v);
    }
    set.branches.push_back(std::move(br));
  }
  return set;
}

std::vector<ExtrapolatedLevel> two_level_extrapolation(
    const SystemSpec& spec, const Block& block,
    const std::vector<BasisState>& labels,
    const std::vector<double>& omega_grid) {
  if (spec.upper.hyperfine_a_mhz != 0.0) {
    throw config_error("two_level_extrapolation requires a degenerate upper "
                       "manifold (hyperfine A = 0)");
  }
  std::vector<int> lower_local;
  for (size_t k = 0; k < block.indices.size(); ++k) {
    if (labels[block.indices[k]].manifold == Manifold::lower) {
      lower_local.push_back(static_cast<int>(k));
    }
  }
  std::vector<ExtrapolatedLevel> out;
  if (lower_local.empty()) return out;

  // Lower block states share m_F = mtilde; hyperfine levels F >= |m_F|.
  const HalfInt m_f = block.mtilde;
  const LabeledMatrix c1 = build_coupling(spec, 1.0);
  const double e_upper =
      spec.upper.base_energy_mhz + spec.effective_delta_mhz();

  HalfInt f = spec.lower.j > spec.lower.i ? spec.lower.j - spec.lower.i
                                          : spec.lower.i - spec.lower.j;
  const HalfInt f_max = spec.lower.j + spec.lower.i;
  for (; f <= f_max; f = f + HalfInt::from_int(1)) {
    if (!valid_projection(f, m_f)) continue;
    ExtrapolatedLevel lvl;
    lvl.f = f;
    lvl.m_f = m_f;
    lvl.offset_mhz = spec.lower.base_energy_mhz +
                     spec.lower.hyperfine_a_mhz *
                         lande_idotj(f, spec.lower.j, spec.lower.i);
    lvl.delta_mhz = e_upper - lvl.offset_mhz;
    // |F, m_F> over the block's lower states, then its coupling-row norm.
    Eigen::VectorXd image = Eigen::VectorXd::Zero(block.size());
    for (int kl : lower_local) {
      const BasisState& s = labels[block.indices[kl]];
      const double cg = clebsch_gordan(spec.lower.j, s.m_j, spec.lower.i,
                                       s.m_i, f, m_f);
      if (cg == 0.0) continue;
      for (size_t k = 0; k < block.indices.size(); ++k) {
        image[k] += cg * c1.entries(block.indices[k], block.indices[kl]);
      }
    }
    lvl.rabi_slope = 2.0 * image.norm();
    lvl.lower_energies_mhz.reserve(omega_grid.size());
    lvl.upper_energies_mhz.reserve(omega_grid.size());
    for (double omega : omega_grid) {
      const auto [lo, hi] =
          two_level_reference(lvl.rabi_slope * omega, lvl.delta_mhz);
      lvl.lower_energies_mhz.push_back(lvl.offset_mhz + lo);
      lvl.upper_energies_mhz.push_back(lvl.offset_mhz + hi);
    }
    out.push_back(std::move(lvl));
  }
  return out;
}

Classification classify(const Branch& branch,
                        const std::vector<double>& omega_grid,
                        const std::vector<BasisState>& labels,
                        const BasisState& probe_state,
                        const ClassifyPolicy& policy) {
  Classification result;
  const size_t np = omega_grid.size();
  int probe_idx = -1;
  for (size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == probe_state) probe_idx = static_cast<int>(k);
  }
  if (probe_idx < 0) {
    throw config_error("classify: probe state " + probe_state.str() +
                       " not in the basis");
  }
  result.admixture.resize(np);
  for (size_t gi = 0; gi < np; ++gi) {
    const double c = branch.vectors[gi][probe_idx];
    result.admixture[gi] = c * c;
  }

  double emin = branch.energies_mhz.front();
  double emax = emin;
  for (double e : branch.energies_mhz) {
    emin = std::min(emin, e);
    emax = std::max(emax, e);
  }
  const double omega_max = omega_grid.back();
  if (emax - emin < policy.dark_rel_tol * std::max(omega_max, 1e-12)) {
    result.tag = BranchTag::dark;
    return result;
  }

  const auto it = std::max_element(result.admixture.begin(),
                                   result.admixture.end());
  result.turnover_index = static_cast<int>(it - result.admixture.begin());
  result.turnover_omega_mhz = omega_grid[result.turnover_index];

  result.tag = BranchTag::bright;
  if (np >= 3) {
    const int start = static_cast<int>(
        std::ceil((1.0 - policy.window_fraction) * (np - 1)));
    bool decreasing = start < static_cast<int>(np) - 1;
    for (int k = start; k + 1 < static_cast<int>(np); ++k) {
      if (!(result.admixture[k] > result.admixture[k + 1])) {
        decreasing = false;
        break;
      }
    }
    const bool interior =
        !policy.require_interior_max ||
        (result.turnover_index > 0 && result.turnover_index < start);
    if (decreasing && interior) result.tag = BranchTag::chameleon_candidate;
  }
  return result;
}

std::vector<Classification> classify_branches(EigenBranchSet& set,
                                              const BasisState& probe_state,
                                              const ClassifyPolicy& policy) {
  std::vector<Classification> out;
  out.reserve(set.branches.size());
  for (Branch& br : set.branches) {
    out.push_back(classify(br, set.omega_grid, set.labels, probe_state, policy));
    br.tag = out.back().tag;
  }
  return out;
}

}  // namespace levelmix
