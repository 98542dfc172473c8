#pragma once

#include <vector>

#include "pdmp/model.hpp"
#include "pdmp/options.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/state.hpp"

namespace pdmp {

/// Positive approximation U_alpha(z, s) of the failure probability
/// U*(z, s) = P(failure before the horizon | Z_s = z).
///
/// Importance intensities multiply each transition's hazard by
/// U(arrival, s) / U(departure, s); importance kernels reweight each atom by
/// U(arrival, s) and renormalise. On states with `m_d` set the engine forces
/// U = 1, so the dynamics after a failure are never biased.
class BiasScheme {
 public:
  virtual ~BiasScheme() = default;

  virtual double u(const State& z, double s) const = 0;

  /// Value used to reweight boundary-kernel atoms. Defaults to `u`.
  virtual double u_boundary(const State& z_plus, double s) const { return u(z_plus, s); }

  /// True when U depends on the mode (and flag) only, not on position or
  /// time. The simulator then computes rate multipliers once per segment.
  virtual bool mode_only() const { return false; }

  virtual std::vector<double> params() const { return {}; }
};

/// U = 1 everywhere: the original process.
class NeutralScheme final : public BiasScheme {
 public:
  double u(const State&, double) const override { return 1.0; }
  bool mode_only() const override { return true; }
};

/// U with the post-failure convention applied; throws scheme_contract when
/// the scheme returns a non-positive or non-finite value.
double effective_u(const BiasScheme& scheme, const State& z, double s);
double effective_u_boundary(const BiasScheme& scheme, const State& z, double s);

/// Arrival state with `m_d` propagated from the departure and set on entry
/// into D.
State finalize_arrival(const Model& model, const State& z_minus, State arrival);

struct BiasedRates {
  double total = 0.0;
  std::vector<double> per_transition;
};

/// Importance jump rates at Phi_z(elapsed), for a segment that started at
/// absolute time s. At the horizon a time-dependent scheme gives the original
/// rates.
BiasedRates importance_intensity(const Model& model, const BiasScheme& scheme, const State& z,
                                 double s, double elapsed, const SimOptions& opts = {});

/// Importance boundary kernel at a boundary departure state.
std::vector<KernelOutcome> importance_kernel(const Model& model, const BiasScheme& scheme,
                                             const State& z_minus, double s);

/// Kernel-averaged U at a departure state: over the boundary kernel for a
/// boundary jump, over the transition probabilities for a spontaneous one.
double u_minus(const Model& model, const BiasScheme& scheme, const State& z_minus, double s,
               JumpKind kind);

struct WeightedSkeleton {
  Skeleton skeleton;
  double log_weight = 0.0;  // log f - log g
  bool hit_failure = false;
};

WeightedSkeleton simulate_importance_trajectory(const Model& model, const BiasScheme& scheme,
                                                RngStream& rng, const SimOptions& opts = {});

}  // namespace pdmp
