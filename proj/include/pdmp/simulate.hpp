#pragma once

#include "pdmp/model.hpp"
#include "pdmp/options.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/state.hpp"

namespace pdmp {

struct JumpTime {
  double time;
  JumpKind kind;
};

/// Time to the next jump from interior state `z`, censored by the boundary
/// and by `budget`. The cumulative hazard is the trapezoid rule on the RK4
/// nodes, inverted exactly for the piecewise-linear hazard it implies.
JumpTime sample_jump_time(const Model& model, const State& z, double budget, RngStream& rng,
                          const SimOptions& opts = {});

/// Arrival state of a jump departing from z_minus. Spontaneous jumps pick a
/// transition with probability lambda^j / lambda; boundary jumps draw from
/// the boundary kernel.
State sample_transition(const Model& model, const State& z_minus, JumpKind kind, RngStream& rng);

/// One trajectory of the original process on [0, horizon].
Skeleton simulate_trajectory(const Model& model, RngStream& rng, const SimOptions& opts = {});

}  // namespace pdmp
