#pragma once

#include "curvseg/grid.hpp"

namespace curvseg {

/// f minus its median over the edge-clamped (2*radius+1)^n box. Flattens a
/// slowly varying background to ~0 so the two-means data term applies.
ScalarField median_subtract(const ScalarField& f, int radius);

/// Min-max rescale to [0, 1]; a constant field maps to all zeros.
ScalarField normalize_unit(const ScalarField& f);

}  // namespace curvseg
