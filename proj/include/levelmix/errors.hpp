#pragma once

#include <stdexcept>
#include <string>

namespace levelmix {

/// Invalid system description, scenario file, or command parameters.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Nonzero Hamiltonian entry connecting different symmetry sectors
/// (polluted polarization or corrupted matrix input).
struct symmetry_error : config_error {
  using config_error::config_error;
};

/// Numerical failure: solver non-convergence or bad matrix data.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace levelmix
