#pragma once

#include <compare>
#include <string>
#include <vector>

namespace levelmix {

/// Exact half-integer quantum number, stored as twice its value.
///
/// All angular momentum bookkeeping (projections, block labels, selection
/// rules) compares these exactly; no floating-point tolerance is ever
/// involved in deciding whether two quantum numbers are equal.
class HalfInt {
 public:
  constexpr HalfInt() = default;

  static constexpr HalfInt from_twice(int t) { return HalfInt(t); }
  static constexpr HalfInt from_int(int n) { return HalfInt(2 * n); }
  /// Accepts values representable as k/2 (e.g. scenario-file numbers);
  /// throws std::invalid_argument otherwise.
  static HalfInt from_double(double v);
  /// Parses "3", "-2", "1.5", "3/2", "-1/2".
  static HalfInt parse(const std::string& s);

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return twice_ / 2.0; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }

  friend constexpr auto operator<=>(HalfInt a, HalfInt b) = default;
  friend constexpr HalfInt operator+(HalfInt a, HalfInt b) {
    return HalfInt(a.twice_ + b.twice_);
  }
  friend constexpr HalfInt operator-(HalfInt a, HalfInt b) {
    return HalfInt(a.twice_ - b.twice_);
  }
  constexpr HalfInt operator-() const { return HalfInt(-twice_); }

  /// "3/2", "-1/2", "2", "0"
  std::string str() const;

 private:
  constexpr explicit HalfInt(int t) : twice_(t) {}
  int twice_ = 0;
};

/// True when m is a valid projection of magnitude j: |m| <= j and j - m integral.
constexpr bool valid_projection(HalfInt j, HalfInt m) {
  const int mt = m.twice() < 0 ? -m.twice() : m.twice();
  return mt <= j.twice() && (j.twice() - m.twice()) % 2 == 0;
}

/// 2j+1
constexpr int multiplicity(HalfInt j) { return j.twice() + 1; }

/// Projections j, j-1, ..., -j in descending order.
std::vector<HalfInt> projections_desc(HalfInt j);

}  // namespace levelmix
