#include "pdmp/bias.hpp"

#include <cmath>

#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"
#include "pdmp/flow.hpp"

namespace pdmp {

namespace {

double checked(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::scheme_contract, "U must be finite and strictly positive");
  }
  return v;
}

}  // namespace

double effective_u(const BiasScheme& scheme, const State& z, double s) {
  return z.m_d ? 1.0 : checked(scheme.u(z, s));
}

double effective_u_boundary(const BiasScheme& scheme, const State& z, double s) {
  return z.m_d ? 1.0 : checked(scheme.u_boundary(z, s));
}

State finalize_arrival(const Model& model, const State& z_minus, State arrival) {
  if (z_minus.m_d || model.in_failure_region(arrival)) arrival.m_d = true;
  return arrival;
}

BiasedRates importance_intensity(const Model& model, const BiasScheme& scheme, const State& z,
                                 double s, double elapsed, const SimOptions& opts) {
  const State here = integrate_flow(model, z, elapsed, opts.step);
  const double t = s + elapsed;
  std::vector<Transition> trans;
  model.transitions(here, trans);
  BiasedRates out;
  if (here.m_d || (!scheme.mode_only() && t >= model.horizon())) {
    for (const auto& tr : trans) {
      out.per_transition.push_back(tr.rate);
      out.total += tr.rate;
    }
    return out;
  }
  const double u0 = effective_u(scheme, here, t);
  for (const auto& tr : trans) {
    const State arr = finalize_arrival(model, here, tr.arrival);
    const double rate = tr.rate * effective_u(scheme, arr, t) / u0;
    out.per_transition.push_back(rate);
    out.total += rate;
  }
  return out;
}

std::vector<KernelOutcome> importance_kernel(const Model& model, const BiasScheme& scheme,
                                             const State& z_minus, double s) {
  std::vector<KernelOutcome> kernel;
  model.boundary_kernel(z_minus, kernel);
  validate_kernel(z_minus, kernel);
  double total = 0.0;
  for (auto& k : kernel) {
    k.arrival = finalize_arrival(model, z_minus, k.arrival);
    k.probability *= effective_u_boundary(scheme, k.arrival, s);
    total += k.probability;
  }
  for (auto& k : kernel) k.probability /= total;
  return kernel;
}

double u_minus(const Model& model, const BiasScheme& scheme, const State& z_minus, double s,
               JumpKind kind) {
  if (kind == JumpKind::boundary) {
    std::vector<KernelOutcome> kernel;
    model.boundary_kernel(z_minus, kernel);
    double acc = 0.0;
    for (const auto& k : kernel) {
      acc += k.probability *
             effective_u_boundary(scheme, finalize_arrival(model, z_minus, k.arrival), s);
    }
    return acc;
  }
  std::vector<Transition> trans;
  model.transitions(z_minus, trans);
  double total = 0.0;
  double acc = 0.0;
  for (const auto& t : trans) {
    total += t.rate;
    acc += t.rate * effective_u(scheme, finalize_arrival(model, z_minus, t.arrival), s);
  }
  if (!(total > 0.0)) throw Error(ErrorCode::domain, "no spontaneous jump from this state");
  return acc / total;
}

WeightedSkeleton simulate_importance_trajectory(const Model& model, const BiasScheme& scheme,
                                                RngStream& rng, const SimOptions& opts) {
  SimOptions full = opts;
  full.stop_at_failure = false;
  TrajectoryEngine engine(model, &scheme, full);
  WeightedSkeleton ws;
  const TrajectoryOutcome out = engine.run(rng, &ws.skeleton);
  ws.log_weight = out.log_weight;
  ws.hit_failure = out.hit_failure;
  return ws;
}

}  // namespace pdmp
