#include "levelmix/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "levelmix/errors.hpp"

namespace levelmix {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_spectrum_csv(const std::string& path, const Spectrum& spectrum) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot write: " + path);
  out << "detuning_MHz,signal\n";
  for (size_t i = 0; i < spectrum.detuning_mhz.size(); ++i) {
    out << fmt_double(spectrum.detuning_mhz[i]) << ','
        << fmt_double(spectrum.signal[i]) << '\n';
  }
}

Spectrum read_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open spectrum file: " + path);
  Spectrum s;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.find("detuning") != std::string::npos) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw config_error("spectrum CSV: malformed line '" + line + "'");
    }
    try {
      s.detuning_mhz.push_back(std::stod(line.substr(0, comma)));
      s.signal.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw config_error("spectrum CSV: malformed line '" + line + "'");
    }
  }
  if (s.detuning_mhz.empty()) {
    throw config_error("spectrum CSV: no data rows in " + path);
  }
  return s;
}

}  // namespace levelmix
