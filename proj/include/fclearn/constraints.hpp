#pragma once

#include <span>
#include <vector>

namespace fclearn {

// Growth-curve plausibility constraints, checked on a fixed age grid.
// Three independent checks, each contributing one violation:
//   1. physical volume: V(0) <= birth_max and V(t) >= 0 everywhere on the grid
//   2. bounded adult size: V(100) <= adult_max
//   3. monotone non-decreasing over the grid
struct GrowthConstraints {
    double birth_max = 0.01;    // cc
    double adult_max = 1500.0;  // cc
};

// Ages 0..100, step 1 (101 samples).
const std::vector<double>& constraint_age_grid();

int count_violations(std::span<const double> grid_predictions,
                     const GrowthConstraints& c = GrowthConstraints{});

}  // namespace fclearn
