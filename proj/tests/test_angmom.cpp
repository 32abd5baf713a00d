#include <doctest.h>

#include <cmath>

#include "levelmix/angmom.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace levelmix;
using levelmix::test::h2;
using levelmix::test::LadderCgTable;

TEST_CASE("clebsch_gordan: pinned values") {
  // Fully stretched case.
  CHECK(clebsch_gordan(h2(3), h2(3), h2(2), h2(2), h2(5), h2(5)) ==
        doctest::Approx(1.0).epsilon(1e-14));
  // M != m1 + m2.
  CHECK(clebsch_gordan(h2(3), h2(3), h2(2), h2(-2), h2(5), h2(5)) == 0.0);
  // <3/2 1/2; 1 1 | 5/2 3/2> = sqrt(0.6), value frozen from the ladder oracle.
  CHECK(clebsch_gordan(h2(3), h2(1), h2(2), h2(2), h2(5), h2(3)) ==
        doctest::Approx(0.7745966692414834).epsilon(1e-13));
  // <1/2 1/2; 1/2 -1/2 | 0 0> = +1/sqrt(2), same oracle.
  CHECK(clebsch_gordan(h2(1), h2(1), h2(1), h2(-1), h2(0), h2(0)) ==
        doctest::Approx(0.7071067811865476).epsilon(1e-13));
  // Triangle violations return 0.
  CHECK(clebsch_gordan(h2(3), h2(1), h2(2), h2(0), h2(9), h2(1)) == 0.0);
  CHECK(clebsch_gordan(h2(2), h2(0), h2(2), h2(0), h2(6), h2(0)) == 0.0);
  CHECK(clebsch_gordan(h2(4), h2(0), h2(1), h2(1), h2(1), h2(1)) == 0.0);
}

TEST_CASE("clebsch_gordan: invalid (j, m) pairings throw") {
  CHECK_THROWS_AS(clebsch_gordan(h2(3), h2(2), h2(2), h2(0), h2(5), h2(2)),
                  std::invalid_argument);  // parity mismatch m1 vs j1
  CHECK_THROWS_AS(clebsch_gordan(h2(3), h2(5), h2(2), h2(0), h2(5), h2(5)),
                  std::invalid_argument);  // |m1| > j1
  CHECK_THROWS_AS(clebsch_gordan(h2(-2), h2(0), h2(2), h2(0), h2(2), h2(0)),
                  std::invalid_argument);  // negative magnitude
}

TEST_CASE("clebsch_gordan matches the ladder-operator oracle for all j <= 5/2") {
  for (int tj1 = 0; tj1 <= 5; ++tj1) {
    for (int tj2 = 0; tj2 <= 5; ++tj2) {
      const LadderCgTable table(h2(tj1), h2(tj2));
      for (HalfInt big_j : table.coupled_js()) {
        for (HalfInt big_m : projections_desc(big_j)) {
          for (HalfInt m1 : projections_desc(h2(tj1))) {
            for (HalfInt m2 : projections_desc(h2(tj2))) {
              const double want = table.cg(m1, m2, big_j, big_m);
              const double got =
                  clebsch_gordan(h2(tj1), m1, h2(tj2), m2, big_j, big_m);
              CHECK(got == doctest::Approx(want).epsilon(1e-12).scale(1.0));
            }
          }
        }
      }
    }
  }
}

TEST_CASE("clebsch_gordan orthonormality sums") {
  for (int tj1 = 0; tj1 <= 6; tj1 += 2) {
    for (int tj2 = 1; tj2 <= 5; tj2 += 2) {
      const HalfInt j1 = h2(tj1), j2 = h2(tj2);
      // Fixed (m1, m2): sum over (J, M) of CG^2 is 1.
      for (HalfInt m1 : projections_desc(j1)) {
        for (HalfInt m2 : projections_desc(j2)) {
          double sum = 0.0;
          for (int tJ = std::abs(tj1 - tj2); tJ <= tj1 + tj2; tJ += 2) {
            const HalfInt big_j = h2(tJ);
            const HalfInt big_m = m1 + m2;
            if (!valid_projection(big_j, big_m)) continue;
            const double c = clebsch_gordan(j1, m1, j2, m2, big_j, big_m);
            sum += c * c;
          }
          CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
      // Fixed (J, M): sum over (m1, m2) of CG^2 is 1.
      for (int tJ = std::abs(tj1 - tj2); tJ <= tj1 + tj2; tJ += 2) {
        const HalfInt big_j = h2(tJ);
        for (HalfInt big_m : projections_desc(big_j)) {
          double sum = 0.0;
          for (HalfInt m1 : projections_desc(j1)) {
            const HalfInt m2 = big_m - m1;
            if (!valid_projection(j2, m2)) continue;
            const double c = clebsch_gordan(j1, m1, j2, m2, big_j, big_m);
            sum += c * c;
          }
          CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("clebsch_gordan exchange symmetry for all j <= 3") {
  for (int tj1 = 0; tj1 <= 6; ++tj1) {
    for (int tj2 = 0; tj2 <= 6; ++tj2) {
      for (int tJ = std::abs(tj1 - tj2); tJ <= tj1 + tj2; tJ += 2) {
        const HalfInt j1 = h2(tj1), j2 = h2(tj2), big_j = h2(tJ);
        const int phase = ((tj1 + tj2 - tJ) / 2) % 2 == 0 ? 1 : -1;
        for (HalfInt m1 : projections_desc(j1)) {
          for (HalfInt m2 : projections_desc(j2)) {
            const HalfInt big_m = m1 + m2;
            if (!valid_projection(big_j, big_m)) continue;
            const double a = clebsch_gordan(j1, m1, j2, m2, big_j, big_m);
            const double b = clebsch_gordan(j2, m2, j1, m1, big_j, big_m);
            CHECK(a == doctest::Approx(phase * b).epsilon(1e-12).scale(1.0));
          }
        }
      }
    }
  }
}

TEST_CASE("ladder_element") {
  CHECK(ladder_element(h2(1), h2(-1), Ladder::raise) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ladder_element(h2(1), h2(1), Ladder::raise) == 0.0);
  CHECK(ladder_element(h2(1), h2(-1), Ladder::lower) == 0.0);
  // sqrt((5/2+1/2)(5/2-1/2+1)) = sqrt(9) = 3; frozen from the direct formula
  // and cross-checked against the J- matrix representation below.
  CHECK(ladder_element(h2(5), h2(1), Ladder::lower) ==
        doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS(ladder_element(h2(2), h2(1), Ladder::raise),
                  std::invalid_argument);
}

TEST_CASE("ladder_element agrees with the J- matrix built from CG machinery") {
  // In the coupled |J M> basis of j1 x j2, J- acts as j1- + j2-; the CG
  // table gives an independent matrix representation to compare against.
  const HalfInt j1 = h2(3), j2 = h2(2);
  const LadderCgTable table(j1, j2);
  for (HalfInt big_j : table.coupled_js()) {
    for (HalfInt m : projections_desc(big_j)) {
      if (m == -big_j) continue;
      const HalfInt m_lo = m - HalfInt::from_int(1);
      double elem = 0.0;  // <J, m-1 | (j1- + j2-) | J, m>
      for (HalfInt m1 : projections_desc(j1)) {
        for (HalfInt m2 : projections_desc(j2)) {
          const double c = table.cg(m1, m2, big_j, m);
          if (c == 0.0) continue;
          if (valid_projection(j1, m1 - HalfInt::from_int(1))) {
            elem += c * ladder_element(j1, m1, Ladder::lower) *
                    table.cg(m1 - HalfInt::from_int(1), m2, big_j, m_lo);
          }
          if (valid_projection(j2, m2 - HalfInt::from_int(1))) {
            elem += c * ladder_element(j2, m2, Ladder::lower) *
                    table.cg(m1, m2 - HalfInt::from_int(1), big_j, m_lo);
          }
        }
      }
      CHECK(elem ==
            doctest::Approx(ladder_element(big_j, m, Ladder::lower))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("idotj_matrix: singlet/triplet and structure") {
  const Eigen::MatrixXd m = idotj_matrix(h2(1), h2(1));
  REQUIRE(m.rows() == 4);
  const Eigen::VectorXd ev = test::reference_eigenvalues(m);
  CHECK(ev[0] == doctest::Approx(-0.75).epsilon(1e-13));
  CHECK(ev[1] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(ev[2] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(ev[3] == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("idotj_matrix: J=3/2, I=3/2 Lande spectrum") {
  const Eigen::MatrixXd m = idotj_matrix(h2(3), h2(3));
  REQUIRE(m.rows() == 16);
  const Eigen::VectorXd ev = test::reference_eigenvalues(m);
  // (F(F+1) - 7.5)/2 for F = 0..3 with multiplicity 2F+1.
  const double expected[16] = {-3.75, -2.75, -2.75, -2.75, -0.75, -0.75,
                               -0.75, -0.75, -0.75, 2.25,  2.25,  2.25,
                               2.25,  2.25,  2.25,  2.25};
  for (int k = 0; k < 16; ++k) {
    CHECK(ev[k] == doctest::Approx(expected[k]).epsilon(1e-12));
  }
}

TEST_CASE("idotj_matrix: Lande formula to 1e-12 for all J, I <= 5/2") {
  for (int tj = 0; tj <= 5; ++tj) {
    for (int ti = 0; ti <= 5; ++ti) {
      const HalfInt j = h2(tj), i = h2(ti);
      const Eigen::MatrixXd m = idotj_matrix(j, i);
      CHECK(std::abs(m.trace()) < 1e-12);
      // Entries only between states of equal m_j + m_I.
      const auto states = spin_pair_basis(j, i);
      for (size_t a = 0; a < states.size(); ++a) {
        for (size_t b = 0; b < states.size(); ++b) {
          if (states[a].first + states[a].second !=
              states[b].first + states[b].second) {
            CHECK(m(static_cast<int>(a), static_cast<int>(b)) == 0.0);
          }
        }
      }
      std::vector<double> expected;
      for (int tf = std::abs(tj - ti); tf <= tj + ti; tf += 2) {
        const double lande = lande_idotj(h2(tf), j, i);
        for (int d = 0; d < tf + 1; ++d) expected.push_back(lande);
      }
      std::sort(expected.begin(), expected.end());
      const Eigen::VectorXd ev = test::reference_eigenvalues(m);
      REQUIRE(static_cast<size_t>(ev.size()) == expected.size());
      for (int k = 0; k < ev.size(); ++k) {
        CHECK(std::abs(ev[k] - expected[static_cast<size_t>(k)]) < 1e-12);
      }
    }
  }
}

TEST_CASE("spin_pair_basis ordering") {
  const auto states = spin_pair_basis(h2(1), h2(1));
  REQUIRE(states.size() == 4);
  CHECK(states[0] == std::pair{h2(1), h2(1)});
  CHECK(states[1] == std::pair{h2(1), h2(-1)});
  CHECK(states[2] == std::pair{h2(-1), h2(1)});
  CHECK(states[3] == std::pair{h2(-1), h2(-1)});
}

TEST_CASE("HalfInt basics") {
  CHECK(h2(3).value() == 1.5);
  CHECK(h2(3).str() == "3/2");
  CHECK(h2(-1).str() == "-1/2");
  CHECK(h2(4).str() == "2");
  CHECK(HalfInt::from_double(1.5) == h2(3));
  CHECK_THROWS_AS(HalfInt::from_double(1.3), std::invalid_argument);
  CHECK(HalfInt::parse("3/2") == h2(3));
  CHECK(HalfInt::parse("-1/2") == h2(-1));
  CHECK(HalfInt::parse("2") == h2(4));
  CHECK(HalfInt::parse("1.5") == h2(3));
  CHECK_THROWS_AS(HalfInt::parse("x"), std::invalid_argument);
  CHECK(valid_projection(h2(3), h2(1)));
  CHECK(!valid_projection(h2(3), h2(2)));
  CHECK(!valid_projection(h2(3), h2(5)));
  CHECK(multiplicity(h2(3)) == 4);
}
