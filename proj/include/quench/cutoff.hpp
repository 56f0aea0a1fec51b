#pragma once

namespace quench {

// Smooth cut-off χ0: 1 on [0,1], 0 on [2,∞), C^∞ and decreasing in between.
double chi0(double x);

}  // namespace quench
