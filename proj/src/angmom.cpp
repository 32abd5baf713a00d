#include "levelmix/angmom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace levelmix {

namespace {

// Exact factorials 0!..20!; 20! is the largest that fits in uint64_t.
constexpr std::uint64_t kFactorial[21] = {
    1ull,
    1ull,
    2ull,
    6ull,
    24ull,
    120ull,
    720ull,
    5040ull,
    40320ull,
    362880ull,
    3628800ull,
    39916800ull,
    479001600ull,
    6227020800ull,
    87178291200ull,
    1307674368000ull,
    20922789888000ull,
    355687428096000ull,
    6402373705728000ull,
    121645100408832000ull,
    2432902008176640000ull};

double fact(int n) {
  if (n < 0 || n > 20) {
    throw std::invalid_argument(
        "factorial argument out of supported range (angular momenta too large)");
  }
  return static_cast<double>(kFactorial[n]);
}

void require_valid_pair(HalfInt j, HalfInt m, const char* what) {
  if (j.twice() < 0) {
    throw std::invalid_argument(std::string(what) + ": negative magnitude " + j.str());
  }
  if (!valid_projection(j, m)) {
    throw std::invalid_argument(std::string(what) + ": projection " + m.str() +
                                " invalid for magnitude " + j.str());
  }
}

}  // namespace

double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2,
                      HalfInt big_j, HalfInt big_m) {
  require_valid_pair(j1, m1, "clebsch_gordan(j1, m1)");
  require_valid_pair(j2, m2, "clebsch_gordan(j2, m2)");
  require_valid_pair(big_j, big_m, "clebsch_gordan(J, M)");

  if (big_m.twice() != m1.twice() + m2.twice()) return 0.0;
  // Triangle rule, including the parity requirement that j1 + j2 - J be integral.
  if ((j1.twice() + j2.twice() - big_j.twice()) % 2 != 0) return 0.0;
  if (big_j.twice() > j1.twice() + j2.twice()) return 0.0;
  if (big_j.twice() < std::abs(j1.twice() - j2.twice())) return 0.0;

  // Integer combinations entering the Racah formula, all guaranteed integral
  // by the parity checks above.
  const int a = (j1.twice() + j2.twice() - big_j.twice()) / 2;   // j1+j2-J
  const int b = (j1.twice() - j2.twice() + big_j.twice()) / 2;   // j1-j2+J
  const int c = (-j1.twice() + j2.twice() + big_j.twice()) / 2;  // -j1+j2+J
  const int d = (j1.twice() + j2.twice() + big_j.twice()) / 2 + 1;
  const int j1pm1 = (j1.twice() + m1.twice()) / 2;
  const int j1mm1 = (j1.twice() - m1.twice()) / 2;
  const int j2pm2 = (j2.twice() + m2.twice()) / 2;
  const int j2mm2 = (j2.twice() - m2.twice()) / 2;
  const int jpm = (big_j.twice() + big_m.twice()) / 2;
  const int jmm = (big_j.twice() - big_m.twice()) / 2;

  const double pref =
      std::sqrt(static_cast<double>(multiplicity(big_j)) * fact(a) * fact(b) *
                fact(c) / fact(d)) *
      std::sqrt(fact(j1pm1) * fact(j1mm1) * fact(j2pm2) * fact(j2mm2) *
                fact(jpm) * fact(jmm));

  // Sum limits: every factorial argument must stay nonnegative.
  const int k_j2mJmm1 = (j2.twice() - big_j.twice() - m1.twice()) / 2;
  const int k_j1mJpm2 = (j1.twice() - big_j.twice() + m2.twice()) / 2;
  const int kmin = std::max({0, k_j2mJmm1, k_j1mJpm2});
  const int kmax = std::min({a, j1mm1, j2pm2});

  double sum = 0.0;
  for (int k = kmin; k <= kmax; ++k) {
    const double den = fact(k) * fact(a - k) * fact(j1mm1 - k) *
                       fact(j2pm2 - k) * fact(k - k_j2mJmm1) *
                       fact(k - k_j1mJpm2);
    sum += (k % 2 == 0 ? 1.0 : -1.0) / den;
  }
  return pref * sum;
}

double ladder_element(HalfInt j, HalfInt m, Ladder direction) {
  require_valid_pair(j, m, "ladder_element");
  // (j -+ m) and (j +- m + 1) in doubled units are even by parity.
  const int first = direction == Ladder::raise ? (j.twice() - m.twice()) / 2
                                               : (j.twice() + m.twice()) / 2;
  const int second = direction == Ladder::raise
                         ? (j.twice() + m.twice()) / 2 + 1
                         : (j.twice() - m.twice()) / 2 + 1;
  if (first <= 0) return 0.0;
  return std::sqrt(static_cast<double>(first) * static_cast<double>(second));
}

std::vector<std::pair<HalfInt, HalfInt>> spin_pair_basis(HalfInt j, HalfInt i) {
  std::vector<std::pair<HalfInt, HalfInt>> states;
  states.reserve(static_cast<size_t>(multiplicity(j)) * multiplicity(i));
  for (HalfInt mj : projections_desc(j)) {
    for (HalfInt mi : projections_desc(i)) {
      states.emplace_back(mj, mi);
    }
  }
  return states;
}

Eigen::MatrixXd idotj_matrix(HalfInt j, HalfInt i) {
  if (j.twice() < 0 || i.twice() < 0) {
    throw std::invalid_argument("idotj_matrix: negative magnitude");
  }
  const auto states = spin_pair_basis(j, i);
  const int n = static_cast<int>(states.size());
  const int ni = multiplicity(i);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const auto [mj, mi] = states[k];
    m(k, k) = mj.value() * mi.value();
    // Flip-flop (1/2)(J+ I- + J- I+); fill the (mj+1, mi-1) partner, the
    // transpose entry covers the other ordering.
    if (mj < j && mi > -i) {
      // Basis is ordered mj desc then mi desc: raising mj moves ni slots back,
      // lowering mi moves one slot forward.
      const int kk = k - ni + 1;
      const double v = 0.5 * ladder_element(j, mj, Ladder::raise) *
                       ladder_element(i, mi, Ladder::lower);
      m(kk, k) += v;
      m(k, kk) += v;
    }
  }
  return m;
}

double lande_idotj(HalfInt f, HalfInt j, HalfInt i) {
  const auto ff = [](HalfInt x) {
    return static_cast<double>(x.twice()) * (x.twice() + 2) / 4.0;
  };
  return (ff(f) - ff(j) - ff(i)) / 2.0;
}

}  // namespace levelmix
