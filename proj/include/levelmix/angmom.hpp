#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "levelmix/halfint.hpp"

namespace levelmix {

/// Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> in the Condon-Shortley
/// phase convention, evaluated from the Racah closed form with exact integer
/// factorials (conversion to floating point happens only in the final ratio).
///
/// Returns 0 when M != m1 + m2 or the triangle rule |j1-j2| <= J <= j1+j2
/// fails.  Throws std::invalid_argument for an invalid (j, m) pairing
/// (|m| > j or parity mismatch) or negative magnitude.
double clebsch_gordan(HalfInt j1, HalfInt m1, HalfInt j2, HalfInt m2,
                      HalfInt big_j, HalfInt big_m);

enum class Ladder { raise, lower };

/// Matrix element of J+/J-: sqrt((j -+ m)(j +- m + 1)).  Zero at the
/// boundary (raising from m = j, lowering from m = -j).
double ladder_element(HalfInt j, HalfInt m, Ladder direction);

/// Product states |m_j, m_I> of a (J, I) manifold, ordered m_j descending
/// then m_I descending.  This ordering is shared with the basis builder.
std::vector<std::pair<HalfInt, HalfInt>> spin_pair_basis(HalfInt j, HalfInt i);

/// Dimensionless I.J interaction matrix over spin_pair_basis(j, i):
/// diagonal m_j * m_I, off-diagonal flip-flop entries
/// (1/2) J+-(m_j) I-+(m_I) connecting (m_j, m_I) <-> (m_j+-1, m_I-+1).
/// Eigenvalues are (F(F+1) - J(J+1) - I(I+1)) / 2 with multiplicity 2F+1.
Eigen::MatrixXd idotj_matrix(HalfInt j, HalfInt i);

/// Lande interval value (F(F+1) - J(J+1) - I(I+1)) / 2.
double lande_idotj(HalfInt f, HalfInt j, HalfInt i);

}  // namespace levelmix
