#pragma once

#include <limits>

#include "pdmp/model.hpp"
#include "pdmp/options.hpp"
#include "pdmp/state.hpp"

namespace pdmp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Flow map Phi_z(dt) by fixed-step RK4. Mode and flag are unchanged.
State integrate_flow(const Model& model, const State& z, double dt, double step = 0.01);

struct BoundaryHit {
  double time = kInfinity;  // +inf when no crossing before the limit
  State state;              // flow state snapped onto the boundary
};

/// First time the flow from `z` crosses the boundary of its mode's domain,
/// searched on [0, limit].
BoundaryHit boundary_hit_time(const Model& model, const State& z, double limit,
                              const SimOptions& opts = {});

/// Throws numerical_blowup when a position component is not finite.
void check_finite(const State& z);

}  // namespace pdmp
