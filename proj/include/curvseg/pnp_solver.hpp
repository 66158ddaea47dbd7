#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "curvseg/grid.hpp"
#include "curvseg/reconnector.hpp"

namespace curvseg {

/// Point at which the dual update extrapolates: 2p - u_i (P) or
/// 2u_{i+1} - u_i (U).
enum class DualExtrapolation { P, U };

enum class Backend { Serial, Parallel };

/// Parameters of the primal-dual segmentation.
///
/// The data weight is c_f = (c1 - f)^2 - (c2 - f)^2 and the solver minimizes
/// <u, c_f>, so u tends to 1 where f is closer to c1. In other words c1 is
/// the mean intensity of the structure being segmented and c2 the mean of the
/// rest of the image.
struct SolverConfig {
  double lambda = 0.01;
  double tau = 1.587;
  double sigma = 1e-3;
  std::optional<int> alpha;  // defaults to max_iter / 2
  int max_iter = 1000;
  double tol = 1e-6;
  double c1 = 1.0;
  double c2 = 0.0;
  double threshold = 0.5;
  DualExtrapolation dual_extrapolation = DualExtrapolation::P;
  Backend backend = Backend::Parallel;

  int resolved_alpha() const { return alpha ? *alpha : max_iter / 2; }

  /// Range checks on every field (InvalidArgument) and the step-size
  /// condition for `shape` (StepSize).
  void validate(const Shape& shape) const;
};

struct SolverState {
  ScalarField u;
  VectorField v;
  int iter = 0;
  double last_delta = 0.0;
};

/// (c1 - f)^2 - (c2 - f)^2 per cell.
ScalarField chan_weight(const ScalarField& f, double c1, double c2);

/// Per-cell projection onto the Euclidean ball of radius lambda.
VectorField prox_dual_tv(const VectorField& w, double lambda);

ScalarField project_unit_interval(const ScalarField& u);

/// True iff 1/tau - sigma * operator_norm_sq(shape) >= 0.
bool check_step_sizes(double tau, double sigma, const Shape& shape);

/// u0 = min-max normalized f, v0 = 0.
SolverState initial_state(const ScalarField& f);

/// One iteration:
///   p = u - tau (c_f - div v)
///   u' = proj(p) if iter < alpha, reconnector(proj(p)) otherwise
///   v' = prox_dual_tv(v + sigma grad(2p - u), lambda)   (or 2u' - u)
void fbpd_step(SolverState& state, const SolverConfig& config, const ScalarField& cf, Reconnector& reconnector);

/// Primal energy <u, c_f> + lambda TV(u).
double primal_energy(const ScalarField& u, const ScalarField& cf, double lambda);

struct SegmentResult {
  BinaryMask mask;
  SolverState state;
  bool converged = false;  // stopped on tol before max_iter
};

/// Optional per-iteration observer (state after the step).
using IterationHook = std::function<void(const SolverState&)>;

/// Iterates from initial_state(f) until max_iter or, once the reconnector is
/// active (or never will be), until last_delta < tol. Throws Divergence if u
/// becomes non-finite.
SegmentResult segment(const ScalarField& f, const SolverConfig& config, Reconnector& reconnector,
                      const IterationHook& hook = {});

/// Two-class 1-D k-means on intensities, initialized at min / max. Returns
/// (lower, upper) centroids. Throws DegenerateImage on a constant field.
std::pair<double, double> estimate_means(const ScalarField& f);

nlohmann::json to_json(const SolverConfig& c);
/// Missing keys keep their defaults; unknown keys throw Config.
SolverConfig solver_config_from_json(const nlohmann::json& j);

std::string to_string(DualExtrapolation d);
std::string to_string(Backend b);

}  // namespace curvseg
