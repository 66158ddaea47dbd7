#pragma once

#include "curvseg/grid.hpp"

namespace curvseg {

/// Topology-preserving thinning to a curve skeleton.
///
/// Directional sub-iterations (4 in 2D, 6 in 3D) delete border cells that are
/// simple for the (8,4) / (26,6) adjacency pair and are not curve end points
/// (exactly one foreground neighbor). Candidates of one sub-iteration are
/// re-validated one by one before deletion, so every deletion is simple at
/// the moment it happens. The result is a subset of the input with the same
/// components and (2D) holes, one cell wide in 2D.
BinaryMask skeletonize(const BinaryMask& m);

/// True if deleting `cell` from `m` preserves topology (simple point).
bool is_simple_point(const BinaryMask& m, Index cell);

}  // namespace curvseg
