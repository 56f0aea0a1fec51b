#pragma once

namespace quench {

// Time as an unevaluated sum hi + lo. Near quench T - t falls far below the
// spacing of doubles around t, so the clock carries the low-order part.
struct Time {
  double hi = 0.0;
  double lo = 0.0;

  Time() = default;
  Time(double value) : hi(value) {}  // NOLINT: implicit from double is intended
  Time(double h, double l) : hi(h), lo(l) {}

  double value() const { return hi + lo; }

  Time& operator+=(double dt);
  friend Time operator+(Time t, double dt) { return t += dt; }
  // Difference a - b rounded to double, accurate to the low-order part.
  friend double operator-(const Time& a, const Time& b);
  friend bool operator<(const Time& a, const Time& b) { return a - b < 0.0; }
  friend bool operator>=(const Time& a, const Time& b) { return !(a < b); }
};

}  // namespace quench
