#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace levelmix::test {

namespace {

double lower_factor(HalfInt j, HalfInt m) {
  // <j, m-1| J- |j, m> = sqrt((j+m)(j-m+1))
  const double jp = (j.twice() + m.twice()) / 2.0;
  const double jm = (j.twice() - m.twice()) / 2.0;
  return std::sqrt(jp * (jm + 1.0));
}

}  // namespace

LadderCgTable::LadderCgTable(HalfInt j1, HalfInt j2) : j1_(j1), j2_(j2) {
  for (HalfInt m1 : projections_desc(j1)) {
    for (HalfInt m2 : projections_desc(j2)) {
      basis_.emplace_back(m1, m2);
    }
  }
  const int dim = static_cast<int>(basis_.size());

  for (HalfInt big_j : coupled_js()) {
    // Top state |J, J>: within the M = J subspace, orthogonal to every
    // already-built |J', J> with J' > J.
    Eigen::VectorXd top = Eigen::VectorXd::Zero(dim);
    if (big_j == j1 + j2) {
      top[index_of(j1, j2)] = 1.0;
    } else {
      std::vector<int> sub;
      for (int k = 0; k < dim; ++k) {
        if (basis_[k].first + basis_[k].second == big_j) sub.push_back(k);
      }
      // Start from an arbitrary subspace vector and project out higher-J tops,
      // retrying with another seed if the projection annihilates it.
      for (int seed : sub) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
        v[seed] = 1.0;
        for (HalfInt jp : coupled_js()) {
          if (jp <= big_j) continue;
          const Eigen::VectorXd& u = vectors_.at({jp.twice(), big_j.twice()});
          v -= u.dot(v) * u;
        }
        if (v.norm() > 1e-8) {
          top = v / v.norm();
          break;
        }
      }
      if (top.norm() < 0.5) throw std::logic_error("ladder oracle: no top state");
      // Condon-Shortley: the m1 = j1 component is positive.
      const int cs = index_of(j1, big_j - j1);
      if (cs >= 0 && top[cs] < 0) top = -top;
    }
    vectors_[{big_j.twice(), big_j.twice()}] = top;

    HalfInt m = big_j;
    while (m > -big_j) {
      const Eigen::VectorXd& cur = vectors_.at({big_j.twice(), m.twice()});
      Eigen::VectorXd next = Eigen::VectorXd::Zero(dim);
      for (int k = 0; k < dim; ++k) {
        if (cur[k] == 0.0) continue;
        const auto [m1, m2] = basis_[k];
        if (m1 > -j1_) {
          next[index_of(m1 - HalfInt::from_int(1), m2)] +=
              cur[k] * lower_factor(j1_, m1);
        }
        if (m2 > -j2_) {
          next[index_of(m1, m2 - HalfInt::from_int(1))] +=
              cur[k] * lower_factor(j2_, m2);
        }
      }
      next /= lower_factor(big_j, m);
      m = m - HalfInt::from_int(1);
      vectors_[{big_j.twice(), m.twice()}] = next;
    }
  }
}

int LadderCgTable::index_of(HalfInt m1, HalfInt m2) const {
  for (int k = 0; k < static_cast<int>(basis_.size()); ++k) {
    if (basis_[k].first == m1 && basis_[k].second == m2) return k;
  }
  return -1;
}

double LadderCgTable::cg(HalfInt m1, HalfInt m2, HalfInt big_j,
                         HalfInt big_m) const {
  const auto it = vectors_.find({big_j.twice(), big_m.twice()});
  if (it == vectors_.end()) return 0.0;
  const int k = index_of(m1, m2);
  return k < 0 ? 0.0 : it->second[k];
}

std::vector<HalfInt> LadderCgTable::coupled_js() const {
  std::vector<HalfInt> js;
  const HalfInt lo = j1_ > j2_ ? j1_ - j2_ : j2_ - j1_;
  for (HalfInt j = j1_ + j2_; j >= lo; j = j - HalfInt::from_int(1)) {
    js.push_back(j);
  }
  return js;
}

Eigen::VectorXd reference_eigenvalues(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  return solver.eigenvalues();
}

std::vector<std::vector<int>> brute_force_components(const Eigen::MatrixXd& m,
                                                     double threshold) {
  const int n = static_cast<int>(m.rows());
  std::vector<std::vector<int>> comps;
  std::vector<char> seen(n, 0);
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::vector<int> comp{s};
    seen[s] = 1;
    std::vector<int> stack{s};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w = 0; w < n; ++w) {
        if (w != v && !seen[w] && std::abs(m(v, w)) > threshold) {
          seen[w] = 1;
          comp.push_back(w);
          stack.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(comp);
  }
  return comps;
}

}  // namespace levelmix::test
