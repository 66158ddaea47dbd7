#pragma once

// Data-parallel inner loops used by the solver and the grid operators.
//
// Every kernel exists twice: `serial` is the straightforward reference kept
// for testing, `parallel` is the OpenMP version the library calls. Both
// perform the same floating-point operations in the same order per cell, so
// their outputs are bitwise identical; tests/test_kernels.cpp enforces this.
//
// Vector-valued arrays are component-major (see VectorField).

#include <cstddef>
#include <span>

#include "curvseg/grid.hpp"

namespace curvseg::kernels {

/// Lower envelope of parabolas along one line: out[x] = min_q (h(x-q))^2 + f[q].
/// `f` is read with the given stride and may hold +inf; `out` is contiguous.
/// `v` needs n slots, `z` n+1.
void edt_line(const double* f, double* out, Index n, Index stride, double h, Index* v, double* z);

/// Median of the edge-clamped (2r+1)^n box around `cell`. `window` needs
/// (2r+1)^n slots.
double box_median(const Shape& shape, std::span<const double> f, Index cell, int radius, double* window);

namespace serial {

void gradient(const Shape& shape, std::span<const double> u, std::span<double> out);
void divergence(const Shape& shape, std::span<const double> v, std::span<double> out);
void project_unit_interval(std::span<const double> in, std::span<double> out);
void prox_dual_tv(int ndim, std::span<const double> w, double lambda, std::span<double> out);
void chan_weight(std::span<const double> f, double c1, double c2, std::span<double> out);
void primal_forward(std::span<const double> u, std::span<const double> cf, std::span<const double> div_v,
                    double tau, std::span<double> p);
void axpy(std::span<const double> a, double sigma, std::span<const double> g, std::span<double> out);
void extrapolate(std::span<const double> a, std::span<const double> b, std::span<double> out);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
void median_filter(const Shape& shape, std::span<const double> f, int radius, std::span<double> out);
void squared_edt(const Shape& shape, std::span<double> values);

}  // namespace serial

namespace parallel {

/// Forward differences divided by spacing, zero at the last cell of each axis.
void gradient(const Shape& shape, std::span<const double> u, std::span<double> out);
/// Backward differences; the exact negative adjoint of gradient.
void divergence(const Shape& shape, std::span<const double> v, std::span<double> out);
void project_unit_interval(std::span<const double> in, std::span<double> out);
/// Per-cell projection of the n-vector onto the Euclidean ball of radius lambda.
void prox_dual_tv(int ndim, std::span<const double> w, double lambda, std::span<double> out);
/// (c1 - f)^2 - (c2 - f)^2
void chan_weight(std::span<const double> f, double c1, double c2, std::span<double> out);
/// p = u - tau * (cf - div_v)
void primal_forward(std::span<const double> u, std::span<const double> cf, std::span<const double> div_v,
                    double tau, std::span<double> p);
/// out = a + sigma * g
void axpy(std::span<const double> a, double sigma, std::span<const double> g, std::span<double> out);
/// out = 2a - b
void extrapolate(std::span<const double> a, std::span<const double> b, std::span<double> out);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
void median_filter(const Shape& shape, std::span<const double> f, int radius, std::span<double> out);
/// In-place squared Euclidean distance transform in physical units. Input is
/// 0 at sites and +inf elsewhere.
void squared_edt(const Shape& shape, std::span<double> values);

}  // namespace parallel

/// Threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace curvseg::kernels
