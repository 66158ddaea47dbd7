#pragma once

#include "curvseg/grid.hpp"

namespace curvseg {

/// Forward differences per axis divided by spacing; Neumann boundary (zero at
/// the last cell of each axis).
VectorField gradient(const ScalarField& u);

/// Backward differences. Exactly the negative adjoint of gradient:
/// <grad u, v> = -<u, div v> under the plain (unweighted) sum.
ScalarField divergence(const VectorField& v);

/// Upper bound on the squared spectral norm of the gradient: sum_k 4 / h_k^2,
/// i.e. 8 in 2D and 12 in 3D for unit spacing.
double operator_norm_sq(const Shape& shape);

double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);

/// Isotropic total variation: sum over cells of the 2-norm of the gradient.
double total_variation(const ScalarField& u);

}  // namespace curvseg
