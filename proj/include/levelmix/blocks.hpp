#pragma once

#include <Eigen/Dense>
#include <vector>

#include "levelmix/model.hpp"

namespace levelmix {

/// Conserved projection of the total atom+light angular momentum,
/// m_j + m_I - n_p, with n_p = q for upper-manifold states and 0 for lower.
HalfInt mtilde(const BasisState& state, int q);

/// One connected multi-state subsystem with a uniform mtilde label.
struct Block {
  HalfInt mtilde;
  std::vector<int> indices;  // ascending basis indices

  int size() const { return static_cast<int>(indices.size()); }
};

/// Partition of the basis into coupled blocks and uncoupled singletons.
struct BlockDecomposition {
  /// Multi-state blocks sorted by descending mtilde (ties: larger first,
  /// then lower first index).
  std::vector<Block> blocks;
  /// Indices of states with no off-diagonal connection, ascending.
  std::vector<int> dark_singletons;
  /// Display ordering of the full basis: each block RCM-ordered internally,
  /// blocks by descending mtilde, singletons last.  permutation[k] is the
  /// original index shown at position k.
  std::vector<int> permutation;
};

/// Finds the connected components of the off-diagonal pattern of h
/// (entries below 1e-12 * max|h| are structural zeros) and labels each with
/// its mtilde.  Throws symmetry_error if any nonzero entry connects states
/// of different mtilde.
BlockDecomposition decompose(const LabeledMatrix& h, int q);

/// Reverse Cuthill-McKee ordering of the pattern of a symmetric matrix.
/// Deterministic: start vertices and BFS neighbors are taken by ascending
/// degree, then ascending index.  Keeps the original (ascending) order
/// unless the reordering strictly reduces the bandwidth.  Returns the
/// permutation as original indices in their new order.
std::vector<int> rcm_order(const Eigen::MatrixXd& matrix);
std::vector<int> rcm_order(const LabeledMatrix& h);

/// Bandwidth of the permuted pattern: max |pos(i) - pos(j)| over nonzero
/// off-diagonal entries.
int pattern_bandwidth(const Eigen::MatrixXd& matrix,
                      const std::vector<int>& permutation);

}  // namespace levelmix
