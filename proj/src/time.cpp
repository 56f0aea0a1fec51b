#include "quench/time.hpp"

namespace quench {

namespace {
// Error-free transformation: s + e == a + b exactly.
void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bb = s - a;
  e = (a - (s - bb)) + (b - bb);
}
}  // namespace

Time& Time::operator+=(double dt) {
  double s = 0.0;
  double e = 0.0;
  two_sum(hi, dt, s, e);
  e += lo;
  two_sum(s, e, hi, lo);
  return *this;
}

double operator-(const Time& a, const Time& b) {
  double s = 0.0;
  double e = 0.0;
  two_sum(a.hi, -b.hi, s, e);
  return s + (e + (a.lo - b.lo));
}

}  // namespace quench
