#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "levelmix/blocks.hpp"
#include "levelmix/errors.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace levelmix;
using levelmix::test::default_scenario;
using levelmix::test::h2;

TEST_CASE("mtilde") {
  CHECK(mtilde({Manifold::lower, h2(3), h2(3)}, 1) == h2(6));
  CHECK(mtilde({Manifold::upper, h2(5), h2(3)}, 1) == h2(6));
  CHECK(mtilde({Manifold::upper, h2(-5), h2(-3)}, 1) == h2(-10));
  CHECK(mtilde({Manifold::lower, h2(1), h2(-3)}, -1) == h2(-2));
  CHECK(mtilde({Manifold::upper, h2(1), h2(-3)}, -1) == h2(0));
}

TEST_CASE("decompose: default scenario census") {
  const SystemSpec rb = default_scenario();
  const LabeledMatrix h = build_hamiltonian(rb, 200.0);
  const BlockDecomposition dec = decompose(h, rb.polarization_q);

  // Sizes by descending mtilde, from the brute-force component oracle below.
  REQUIRE(dec.blocks.size() == 7);
  const int expected_twice[7] = {6, 4, 2, 0, -2, -4, -6};
  const int expected_size[7] = {2, 4, 6, 8, 6, 4, 2};
  for (int b = 0; b < 7; ++b) {
    CHECK(dec.blocks[b].mtilde == h2(expected_twice[b]));
    CHECK(dec.blocks[b].size() == expected_size[b]);
  }

  // Eight dark singletons: the upper states with m_j in {-3/2, -5/2}.
  REQUIRE(dec.dark_singletons.size() == 8);
  for (int idx : dec.dark_singletons) {
    CHECK(h.labels[idx].manifold == Manifold::upper);
    CHECK(h.labels[idx].m_j <= h2(-3));
  }

  // Independent route: components from the plain DFS oracle.
  const double thr = 1e-12 * h.entries.cwiseAbs().maxCoeff();
  const auto comps = test::brute_force_components(h.entries, thr);
  std::multiset<size_t> sizes_oracle, sizes_dec;
  for (const auto& c : comps) sizes_oracle.insert(c.size());
  for (const auto& b : dec.blocks) sizes_dec.insert(b.indices.size());
  for (size_t k = 0; k < dec.dark_singletons.size(); ++k) sizes_dec.insert(1);
  CHECK(sizes_oracle == sizes_dec);

  // Blocks and singletons partition the basis.
  std::set<int> all;
  for (const auto& b : dec.blocks) all.insert(b.indices.begin(), b.indices.end());
  all.insert(dec.dark_singletons.begin(), dec.dark_singletons.end());
  CHECK(all.size() == 40);

  // No nonzero entry crosses a block boundary.
  std::vector<int> owner(40, -1);
  for (size_t b = 0; b < dec.blocks.size(); ++b) {
    for (int i : dec.blocks[b].indices) owner[i] = static_cast<int>(b);
  }
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      if (i != j && std::abs(h.entries(i, j)) > thr) CHECK(owner[i] == owner[j]);
    }
  }
}

TEST_CASE("decompose: Omega = 0 leaves hyperfine chains and 24 upper singletons") {
  const SystemSpec rb = default_scenario();
  const LabeledMatrix h = build_hamiltonian(rb, 0.0);
  const BlockDecomposition dec = decompose(h, rb.polarization_q);
  // Lower flip-flop chains with m_F = 2..-2 (sizes 2,3,4,3,2); the stretched
  // lower states and all upper states are singletons.
  REQUIRE(dec.blocks.size() == 5);
  const int expected_size[5] = {2, 3, 4, 3, 2};
  for (int b = 0; b < 5; ++b) {
    CHECK(dec.blocks[b].size() == expected_size[b]);
    for (int idx : dec.blocks[b].indices) {
      CHECK(h.labels[idx].manifold == Manifold::lower);
    }
  }
  CHECK(dec.dark_singletons.size() == 26);
}

TEST_CASE("decompose: A = 0 gives Morris-Shore pairs only") {
  SystemSpec s = default_scenario();
  s.lower.hyperfine_a_mhz = 0.0;
  const LabeledMatrix h = build_hamiltonian(s, 150.0);
  const BlockDecomposition dec = decompose(h, s.polarization_q);
  REQUIRE(dec.blocks.size() == 16);
  for (const auto& b : dec.blocks) {
    CHECK(b.size() == 2);
    CHECK(h.labels[b.indices[0]].manifold == Manifold::lower);
    CHECK(h.labels[b.indices[1]].manifold == Manifold::upper);
  }
  CHECK(dec.dark_singletons.size() == 8);
}

TEST_CASE("decompose: eigenvalue union property over random (Omega, A)") {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> omega_dist(0.5, 900.0);
  std::uniform_real_distribution<double> a_dist(0.0, 120.0);
  SystemSpec s = default_scenario();
  for (int trial = 0; trial < 100; ++trial) {
    s.lower.hyperfine_a_mhz = a_dist(rng);
    const double omega = omega_dist(rng);
    const LabeledMatrix h = build_hamiltonian(s, omega);
    const BlockDecomposition dec = decompose(h, s.polarization_q);

    std::vector<double> collected;
    for (const auto& b : dec.blocks) {
      Eigen::MatrixXd hb(b.size(), b.size());
      for (int r = 0; r < b.size(); ++r) {
        for (int c = 0; c < b.size(); ++c) {
          hb(r, c) = h.entries(b.indices[r], b.indices[c]);
        }
      }
      const Eigen::VectorXd ev = test::reference_eigenvalues(hb);
      for (int k = 0; k < ev.size(); ++k) collected.push_back(ev[k]);
    }
    for (int idx : dec.dark_singletons) collected.push_back(h.entries(idx, idx));
    std::sort(collected.begin(), collected.end());

    const Eigen::VectorXd full = test::reference_eigenvalues(h.entries);
    REQUIRE(collected.size() == static_cast<size_t>(full.size()));
    for (int k = 0; k < full.size(); ++k) {
      CHECK(std::abs(full[k] - collected[static_cast<size_t>(k)]) < 1e-9);
    }
  }
}

TEST_CASE("decompose: dark singleton energies are drive-independent") {
  const SystemSpec rb = default_scenario();
  const LabeledMatrix h200 = build_hamiltonian(rb, 200.0);
  const BlockDecomposition dec = decompose(h200, rb.polarization_q);
  for (double omega : {0.0, 50.0, 400.0, 800.0}) {
    const LabeledMatrix h = build_hamiltonian(rb, omega);
    for (int idx : dec.dark_singletons) {
      CHECK(std::abs(h.entries(idx, idx) - h200.entries(idx, idx)) < 1e-12);
      // The singleton's eigenvector in the full problem is the basis vector:
      // its row carries no off-diagonal weight.
      double off = 0.0;
      for (int j = 0; j < h.dim(); ++j) {
        if (j != idx) off += std::abs(h.entries(idx, j));
      }
      CHECK(off == 0.0);
    }
  }
}

TEST_CASE("decompose: block structure invariant under drive rescaling") {
  const SystemSpec rb = default_scenario();
  const BlockDecomposition a =
      decompose(build_hamiltonian(rb, 3.0), rb.polarization_q);
  const BlockDecomposition b =
      decompose(build_hamiltonian(rb, 777.0), rb.polarization_q);
  REQUIRE(a.blocks.size() == b.blocks.size());
  for (size_t k = 0; k < a.blocks.size(); ++k) {
    CHECK(a.blocks[k].indices == b.blocks[k].indices);
  }
  CHECK(a.dark_singletons == b.dark_singletons);
}

TEST_CASE("decompose: mixed mtilde raises symmetry_error") {
  const SystemSpec rb = default_scenario();
  LabeledMatrix h = build_hamiltonian(rb, 200.0);
  // Pollute the polarization: couple two states of different mtilde.
  const int a = h.index_of({Manifold::lower, h2(3), h2(3)});
  const int b = h.index_of({Manifold::upper, h2(3), h2(3)});
  h.entries(a, b) = h.entries(b, a) = 5.0;
  CHECK_THROWS_AS(decompose(h, rb.polarization_q), symmetry_error);
}

TEST_CASE("rcm_order: identity and tridiagonal") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(6, 6);
  const std::vector<int> id_perm = rcm_order(eye);
  CHECK(id_perm == std::vector<int>{0, 1, 2, 3, 4, 5});

  Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(7, 7);
  for (int k = 0; k < 6; ++k) {
    tri(k, k + 1) = tri(k + 1, k) = 1.0;
    tri(k, k) = 2.0;
  }
  CHECK(pattern_bandwidth(tri, rcm_order(tri)) == 1);
}

TEST_CASE("rcm_order: deterministic, valid, and never worse than identity") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 3 + static_cast<int>(unit(rng) * 20);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (unit(rng) < 0.25) m(i, j) = m(j, i) = unit(rng);
      }
    }
    const std::vector<int> perm = rcm_order(m);
    CHECK(perm == rcm_order(m));
    std::set<int> seen(perm.begin(), perm.end());
    CHECK(seen.size() == static_cast<size_t>(n));
    std::vector<int> identity(n);
    for (int k = 0; k < n; ++k) identity[k] = k;
    CHECK(pattern_bandwidth(m, perm) <= pattern_bandwidth(m, identity));
  }
}

TEST_CASE("decomposition permutation: Fig-3b style ordering") {
  const SystemSpec rb = default_scenario();
  const LabeledMatrix h = build_hamiltonian(rb, 200.0);
  const BlockDecomposition dec = decompose(h, rb.polarization_q);

  // Valid permutation.
  std::set<int> seen(dec.permutation.begin(), dec.permutation.end());
  REQUIRE(seen.size() == 40);

  // Blocks appear in descending-mtilde order, singletons at the end.
  size_t pos = 0;
  for (const auto& b : dec.blocks) {
    std::set<int> want(b.indices.begin(), b.indices.end());
    std::set<int> got(dec.permutation.begin() + pos,
                      dec.permutation.begin() + pos + b.indices.size());
    CHECK(want == got);
    pos += b.indices.size();
  }
  std::set<int> tail(dec.permutation.begin() + pos, dec.permutation.end());
  CHECK(tail == std::set<int>(dec.dark_singletons.begin(),
                              dec.dark_singletons.end()));

  // Permuted pattern is block diagonal: nonzeros only inside block ranges.
  std::vector<int> pos_of(40);
  for (int k = 0; k < 40; ++k) pos_of[dec.permutation[k]] = k;
  size_t start = 0;
  std::vector<std::pair<size_t, size_t>> ranges;
  for (const auto& b : dec.blocks) {
    ranges.emplace_back(start, start + b.indices.size());
    start += b.indices.size();
  }
  const double thr = 1e-12 * h.entries.cwiseAbs().maxCoeff();
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      if (i == j || std::abs(h.entries(i, j)) <= thr) continue;
      const size_t pi = pos_of[i], pj = pos_of[j];
      bool same_range = false;
      for (const auto& [lo, hi] : ranges) {
        if (pi >= lo && pi < hi && pj >= lo && pj < hi) same_range = true;
      }
      CHECK(same_range);
    }
  }
}

TEST_CASE("decompose: q = -1 mirror census") {
  const std::string path = levelmix::test::data_dir() + "/rb87_6p25d.json";
  const SystemSpec s = load_scenario_with_overrides(
      path, {"polarization_q=-1", "reference_transition.lower_m_j=-1.5",
             "reference_transition.upper_m_j=-2.5"});
  const LabeledMatrix h = build_hamiltonian(s, 200.0);
  const BlockDecomposition dec = decompose(h, s.polarization_q);
  REQUIRE(dec.blocks.size() == 7);
  const int expected_size[7] = {2, 4, 6, 8, 6, 4, 2};
  for (int b = 0; b < 7; ++b) CHECK(dec.blocks[b].size() == expected_size[b]);
  REQUIRE(dec.dark_singletons.size() == 8);
  for (int idx : dec.dark_singletons) {
    CHECK(h.labels[idx].manifold == Manifold::upper);
    CHECK(h.labels[idx].m_j >= h2(3));  // mirror image of the sigma+ case
  }
}
