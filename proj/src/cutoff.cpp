#include "quench/cutoff.hpp"

#include <cmath>

namespace quench {

namespace {
double bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
}  // namespace

double chi0(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  const double up = bump(2.0 - x);
  return up / (up + bump(x - 1.0));
}

}  // namespace quench
