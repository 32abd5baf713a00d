#include "levelmix/halfint.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace levelmix {

HalfInt HalfInt::from_double(double v) {
  const double t = 2.0 * v;
  const double r = std::round(t);
  if (std::abs(t - r) > 1e-9 || std::abs(r) > 1e6) {
    throw std::invalid_argument("not a half-integer: " + std::to_string(v));
  }
  return HalfInt(static_cast<int>(r));
}

HalfInt HalfInt::parse(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("empty half-integer string");
  const auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      const int num = std::stoi(s.substr(0, slash));
      const int den = std::stoi(s.substr(slash + 1));
      if (den == 2) return HalfInt(num);
      if (den == 1) return HalfInt(2 * num);
      throw std::invalid_argument("");
    }
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return from_double(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("cannot parse half-integer: '" + s + "'");
  }
}

std::string HalfInt::str() const {
  if (twice_ % 2 == 0) return std::to_string(twice_ / 2);
  return std::to_string(twice_) + "/2";
}

std::vector<HalfInt> projections_desc(HalfInt j) {
  std::vector<HalfInt> out;
  out.reserve(static_cast<size_t>(multiplicity(j)));
  for (int t = j.twice(); t >= -j.twice(); t -= 2) {
    out.push_back(HalfInt::from_twice(t));
  }
  return out;
}

}  // namespace levelmix
