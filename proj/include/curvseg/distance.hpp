#pragma once

#include "curvseg/grid.hpp"

namespace curvseg {

/// Exact Euclidean distance (physical units) from every foreground cell to the
/// nearest background cell; 0 on background. Cells outside the grid do not
/// count as background, so a mask with no background cell yields +inf on
/// every cell.
ScalarField distance_map(const BinaryMask& m);

/// Exact squared Euclidean distance (physical units) from every cell to the
/// nearest cell set in `sites`; +inf everywhere if `sites` is empty.
ScalarField squared_distance_to(const BinaryMask& sites);

}  // namespace curvseg
