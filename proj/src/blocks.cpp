#include "levelmix/blocks.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "levelmix/errors.hpp"

namespace levelmix {

namespace {

// Adjacency lists of the off-diagonal pattern; entries with magnitude below
// 1e-12 * max|m| are structural zeros so floating-point dust cannot merge
// blocks.
std::vector<std::vector<int>> pattern_adjacency(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  const double scale = m.size() > 0 ? m.cwiseAbs().maxCoeff() : 0.0;
  const double threshold = 1e-12 * scale;
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(m(i, j)) > threshold || std::abs(m(j, i)) > threshold) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  return adj;
}

// Cuthill-McKee on a vertex subset, reversed.  Neighbor and start-vertex ties
// break by ascending degree then ascending index.
std::vector<int> rcm_on(const std::vector<std::vector<int>>& adj,
                        const std::vector<int>& vertices) {
  std::vector<int> degree(adj.size(), 0);
  std::vector<char> in_set(adj.size(), 0);
  for (int v : vertices) in_set[v] = 1;
  for (int v : vertices) {
    for (int w : adj[v]) {
      if (in_set[w]) ++degree[v];
    }
  }
  const auto by_degree = [&](int a, int b) {
    return degree[a] != degree[b] ? degree[a] < degree[b] : a < b;
  };

  std::vector<char> visited(adj.size(), 0);
  std::vector<int> order;
  order.reserve(vertices.size());
  std::vector<int> starts = vertices;
  std::sort(starts.begin(), starts.end(), by_degree);
  for (int start : starts) {
    if (visited[start]) continue;
    std::deque<int> queue{start};
    visited[start] = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      order.push_back(v);
      std::vector<int> next;
      for (int w : adj[v]) {
        if (in_set[w] && !visited[w]) next.push_back(w);
      }
      std::sort(next.begin(), next.end(), by_degree);
      for (int w : next) {
        visited[w] = 1;
        queue.push_back(w);
      }
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

}  // namespace

HalfInt mtilde(const BasisState& state, int q) {
  const int photon = state.manifold == Manifold::upper ? q : 0;
  return state.m_j + state.m_i - HalfInt::from_int(photon);
}

BlockDecomposition decompose(const LabeledMatrix& h, int q) {
  const int n = h.dim();
  const auto adj = pattern_adjacency(h.entries);

  // Structural symmetry check: every edge must conserve mtilde.
  for (int i = 0; i < n; ++i) {
    for (int j : adj[i]) {
      if (j < i) continue;
      if (mtilde(h.labels[i], q) != mtilde(h.labels[j], q)) {
        throw symmetry_error(
            "coupling between different mtilde sectors: " + h.labels[i].str() +
            " (mtilde " + mtilde(h.labels[i], q).str() + ") <-> " +
            h.labels[j].str() + " (mtilde " + mtilde(h.labels[j], q).str() +
            "); check the polarization purity of the input");
      }
    }
  }

  // Connected components by BFS, ascending start index.
  BlockDecomposition out;
  std::vector<char> visited(n, 0);
  for (int start = 0; start < n; ++start) {
    if (visited[start]) continue;
    std::vector<int> comp;
    std::deque<int> queue{start};
    visited[start] = 1;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      comp.push_back(v);
      for (int w : adj[v]) {
        if (!visited[w]) {
          visited[w] = 1;
          queue.push_back(w);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    if (comp.size() == 1) {
      out.dark_singletons.push_back(comp.front());
    } else {
      out.blocks.push_back({mtilde(h.labels[comp.front()], q), comp});
    }
  }
  std::sort(out.dark_singletons.begin(), out.dark_singletons.end());
  std::sort(out.blocks.begin(), out.blocks.end(),
            [](const Block& a, const Block& b) {
              if (a.mtilde != b.mtilde) return a.mtilde > b.mtilde;
              if (a.indices.size() != b.indices.size()) {
                return a.indices.size() > b.indices.size();
              }
              return a.indices.front() < b.indices.front();
            });

  // Display ordering: RCM inside each block, blocks by descending mtilde,
  // singletons last (descending mtilde, then ascending index).
  out.permutation.reserve(n);
  for (const Block& b : out.blocks) {
    const auto local = rcm_on(adj, b.indices);
    out.permutation.insert(out.permutation.end(), local.begin(), local.end());
  }
  std::vector<int> singles = out.dark_singletons;
  std::sort(singles.begin(), singles.end(), [&](int a, int b) {
    const HalfInt ma = mtilde(h.labels[a], q);
    const HalfInt mb = mtilde(h.labels[b], q);
    return ma != mb ? ma > mb : a < b;
  });
  out.permutation.insert(out.permutation.end(), singles.begin(), singles.end());
  return out;
}

std::vector<int> rcm_order(const Eigen::MatrixXd& matrix) {
  const int n = static_cast<int>(matrix.rows());
  const auto adj = pattern_adjacency(matrix);
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> order = rcm_on(adj, all);
  if (pattern_bandwidth(matrix, order) >= pattern_bandwidth(matrix, all)) {
    return all;  // keep the original order unless RCM strictly improves it
  }
  return order;
}

std::vector<int> rcm_order(const LabeledMatrix& h) { return rcm_order(h.entries); }

int pattern_bandwidth(const Eigen::MatrixXd& matrix,
                      const std::vector<int>& permutation) {
  const int n = static_cast<int>(matrix.rows());
  std::vector<int> pos(n);
  for (int k = 0; k < n; ++k) pos[permutation[k]] = k;
  const double scale = matrix.size() > 0 ? matrix.cwiseAbs().maxCoeff() : 0.0;
  const double threshold = 1e-12 * scale;
  int bw = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(matrix(i, j)) > threshold) {
        bw = std::max(bw, std::abs(pos[i] - pos[j]));
      }
    }
  }
  return bw;
}

}  // namespace levelmix
