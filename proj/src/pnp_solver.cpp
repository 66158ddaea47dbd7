#include "curvseg/pnp_solver.hpp"

#include <algorithm>
#include <cmath>

#include "curvseg/differential.hpp"
#include "curvseg/filters.hpp"
#include "curvseg/kernels.hpp"

namespace curvseg {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

// Dispatch table over the two kernel sets.
struct Kernels {
  decltype(&kernels::parallel::gradient) gradient;
  decltype(&kernels::parallel::divergence) divergence;
  decltype(&kernels::parallel::project_unit_interval) project;
  decltype(&kernels::parallel::prox_dual_tv) prox;
  decltype(&kernels::parallel::chan_weight) chan;
  decltype(&kernels::parallel::primal_forward) forward;
  decltype(&kernels::parallel::axpy) axpy;
  decltype(&kernels::parallel::extrapolate) extrapolate;
  decltype(&kernels::parallel::max_abs_diff) max_abs_diff;
};

const Kernels& kernels_for(Backend b) {
  namespace s = kernels::serial;
  namespace p = kernels::parallel;
  static const Kernels serial{s::gradient, s::divergence, s::project_unit_interval, s::prox_dual_tv, s::chan_weight,
                              s::primal_forward, s::axpy, s::extrapolate, s::max_abs_diff};
  static const Kernels parallel{p::gradient, p::divergence, p::project_unit_interval, p::prox_dual_tv, p::chan_weight,
                                p::primal_forward, p::axpy, p::extrapolate, p::max_abs_diff};
  return b == Backend::Serial ? serial : parallel;
}

bool all_finite(const ScalarField& u) {
  return std::all_of(u.values().begin(), u.values().end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void SolverConfig::validate(const Shape& shape) const {
  require(lambda >= 0.0 && std::isfinite(lambda), "lambda must be >= 0");
  require(tau > 0.0 && std::isfinite(tau), "tau must be > 0");
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be > 0");
  require(resolved_alpha() >= 0, "alpha must be >= 0");
  require(max_iter >= 1, "max_iter must be >= 1");
  require(tol >= 0.0, "tol must be >= 0");
  require(std::isfinite(c1) && std::isfinite(c2), "c1 and c2 must be finite");
  require(threshold >= 0.0 && threshold <= 1.0, "threshold must be in [0, 1]");
  if (!check_step_sizes(tau, sigma, shape))
    throw Error(ErrorCode::StepSize, "1/tau - sigma * ||grad||^2 = " +
                                         std::to_string(1.0 / tau - sigma * operator_norm_sq(shape)) + " < 0");
}

ScalarField chan_weight(const ScalarField& f, double c1, double c2) {
  ScalarField out(f.shape());
  kernels::parallel::chan_weight(f.values(), c1, c2, out.values());
  return out;
}

VectorField prox_dual_tv(const VectorField& w, double lambda) {
  require(lambda >= 0.0, "lambda must be >= 0");
  VectorField out(w.shape());
  kernels::parallel::prox_dual_tv(w.arity(), w.data(), lambda, out.data());
  return out;
}

ScalarField project_unit_interval(const ScalarField& u) {
  ScalarField out(u.shape());
  kernels::parallel::project_unit_interval(u.values(), out.values());
  return out;
}

bool check_step_sizes(double tau, double sigma, const Shape& shape) {
  require(tau > 0.0 && sigma > 0.0, "tau and sigma must be > 0");
  return 1.0 / tau - sigma * operator_norm_sq(shape) >= 0.0;
}

SolverState initial_state(const ScalarField& f) {
  SolverState s;
  s.u = normalize_unit(f);
  s.v = VectorField(f.shape());
  return s;
}

void fbpd_step(SolverState& state, const SolverConfig& config, const ScalarField& cf, Reconnector& reconnector) {
  const Shape& shape = state.u.shape();
  require_same_dims(shape, cf.shape(), "fbpd_step");
  const Kernels& k = kernels_for(config.backend);
  const std::size_t n = shape.size();

  ScalarField div_v(shape), p(shape), q(shape);
  k.divergence(shape, state.v.data(), div_v.values());
  k.forward(state.u.values(), cf.values(), div_v.values(), config.tau, p.values());
  k.project(p.values(), q.values());

  ScalarField next;
  if (state.iter < config.resolved_alpha()) {
    next = std::move(q);
  } else {
    next = reconnector.apply(q);
    if (!next.shape().same_dims(shape))
      throw Error(ErrorCode::ReconnectorContract, reconnector.name() + " changed the field dims");
    for (std::size_t i = 0; i < n; ++i)
      if (!(next[i] >= 0.0 && next[i] <= 1.0))
        throw Error(ErrorCode::ReconnectorContract,
                    reconnector.name() + " produced " + std::to_string(next[i]) + " outside [0, 1]");
  }

  ScalarField e(shape);
  if (config.dual_extrapolation == DualExtrapolation::P) {
    k.extrapolate(p.values(), state.u.values(), e.values());
  } else {
    k.extrapolate(next.values(), state.u.values(), e.values());
  }
  VectorField g(shape);
  k.gradient(shape, e.values(), g.data());
  k.axpy(state.v.data(), config.sigma, g.data(), g.data());
  k.prox(shape.ndim(), g.data(), config.lambda, state.v.data());

  state.last_delta = k.max_abs_diff(next.values(), state.u.values());
  state.u = std::move(next);
  ++state.iter;
}

double primal_energy(const ScalarField& u, const ScalarField& cf, double lambda) {
  return inner(u, cf) + lambda * total_variation(u);
}

SegmentResult segment(const ScalarField& f, const SolverConfig& config, Reconnector& reconnector,
                      const IterationHook& hook) {
  config.validate(f.shape());
  const ScalarField cf = [&] {
    ScalarField out(f.shape());
    kernels_for(config.backend).chan(f.values(), config.c1, config.c2, out.values());
    return out;
  }();
  SegmentResult r;
  r.state = initial_state(f);
  if (!all_finite(r.state.u)) throw Error(ErrorCode::Divergence, "non-finite initial iterate");
  const int alpha = config.resolved_alpha();
  while (r.state.iter < config.max_iter) {
    fbpd_step(r.state, config, cf, reconnector);
    if (!all_finite(r.state.u))
      throw Error(ErrorCode::Divergence, "non-finite iterate at iteration " + std::to_string(r.state.iter));
    if (hook) hook(r.state);
    // Stagnation only ends the run once the reconnector has had its turn.
    const bool may_stop = r.state.iter > alpha || alpha >= config.max_iter;
    if (may_stop && r.state.last_delta < config.tol) {
      r.converged = true;
      break;
    }
  }
  r.mask = threshold(r.state.u, config.threshold);
  return r;
}

std::pair<double, double> estimate_means(const ScalarField& f) {
  const auto [mn, mx] = std::minmax_element(f.values().begin(), f.values().end());
  if (f.empty() || !(*mx > *mn)) throw Error(ErrorCode::DegenerateImage, "constant image");
  double lo = *mn, hi = *mx;
  for (int it = 0; it < 200; ++it) {
    double sum_lo = 0.0, sum_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    const double cut = 0.5 * (lo + hi);
    for (double x : f.values()) {
      if (x <= cut) {
        sum_lo += x;
        ++n_lo;
      } else {
        sum_hi += x;
        ++n_hi;
      }
    }
    const double new_lo = sum_lo / double(n_lo);
    const double new_hi = n_hi ? sum_hi / double(n_hi) : hi;
    if (new_lo == lo && new_hi == hi) break;
    lo = new_lo;
    hi = new_hi;
  }
  return {lo, hi};
}

std::string to_string(DualExtrapolation d) { return d == DualExtrapolation::P ? "p" : "u"; }
std::string to_string(Backend b) { return b == Backend::Serial ? "serial" : "parallel"; }

nlohmann::json to_json(const SolverConfig& c) {
  return {{"lambda", c.lambda},
          {"tau", c.tau},
          {"sigma", c.sigma},
          {"alpha", c.resolved_alpha()},
          {"max_iter", c.max_iter},
          {"tol", c.tol},
          {"c1", c.c1},
          {"c2", c.c2},
          {"threshold", c.threshold},
          {"dual_extrapolation", to_string(c.dual_extrapolation)},
          {"backend", to_string(c.backend)}};
}

SolverConfig solver_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Config, "solver config must be an object");
  SolverConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "lambda") c.lambda = value.get<double>();
      else if (key == "tau") c.tau = value.get<double>();
      else if (key == "sigma") c.sigma = value.get<double>();
      else if (key == "alpha") c.alpha = value.get<int>();
      else if (key == "max_iter") c.max_iter = value.get<int>();
      else if (key == "tol") c.tol = value.get<double>();
      else if (key == "c1") c.c1 = value.get<double>();
      else if (key == "c2") c.c2 = value.get<double>();
      else if (key == "threshold") c.threshold = value.get<double>();
      else if (key == "dual_extrapolation") {
        const auto s = value.get<std::string>();
        if (s != "p" && s != "u") throw Error(ErrorCode::Config, "dual_extrapolation must be p or u");
        c.dual_extrapolation = s == "p" ? DualExtrapolation::P : DualExtrapolation::U;
      } else if (key == "backend") {
        const auto s = value.get<std::string>();
        if (s != "serial" && s != "parallel") throw Error(ErrorCode::Config, "backend must be serial or parallel");
        c.backend = s == "serial" ? Backend::Serial : Backend::Parallel;
      } else {
        throw Error(ErrorCode::Config, "unknown solver key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Config, "bad value for '" + key + "': " + e.what());
    }
  }
  return c;
}

}  // namespace curvseg
