#pragma once

#include <string>
#include <vector>

#include "levelmix/spectro.hpp"

namespace levelmix {

/// Shortest round-trippable decimal form, C locale ('.' decimal point).
std::string fmt_double(double v);

/// RFC-4180 quoting: wraps the field in quotes when it contains a comma,
/// quote or newline.
std::string csv_field(const std::string& s);

void write_spectrum_csv(const std::string& path, const Spectrum& spectrum);

/// Reads a two-column (detuning_MHz, signal) CSV with a header row.
Spectrum read_spectrum_csv(const std::string& path);

}  // namespace levelmix
