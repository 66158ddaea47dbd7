#pragma once

#include <cstddef>
#include <vector>

#include "curvseg/grid.hpp"

namespace curvseg {

enum class MorphOp { Dilate, Erode, Close };

/// Binary morphology with a discrete Euclidean ball: an offset belongs to the
/// element iff its length in cells is <= radius. Cells outside the grid are
/// background for dilation and foreground for erosion, so erosion is the exact
/// dual of dilation and closing is extensive up to the border.
BinaryMask morph(const BinaryMask& m, MorphOp op, double radius);

/// Maximal connected regions labeled 1..K in order of their first cell in a
/// row-major scan; 0 is background.
LabelField connected_components(const BinaryMask& m, Connectivity connectivity);

/// Number of components in a labeling (the largest label).
int label_count(const LabelField& labels);

/// Cell count per label; index 0 holds the background count.
std::vector<std::size_t> label_sizes(const LabelField& labels);

/// Drops foreground components with fewer than `min_size` cells.
BinaryMask remove_small_components(const BinaryMask& m, std::size_t min_size,
                                   Connectivity connectivity = Connectivity::Full);

/// Fills background components that do not touch the grid border and have
/// fewer than `max_size` cells. Background uses `connectivity`.
BinaryMask fill_small_holes(const BinaryMask& m, std::size_t max_size,
                            Connectivity connectivity = Connectivity::Face);

}  // namespace curvseg
