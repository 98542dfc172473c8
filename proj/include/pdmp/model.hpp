#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdmp/state.hpp"

namespace pdmp {

/// Spontaneous transition available from an interior state.
struct Transition {
  double rate;    // lambda^j(z), >= 0
  State arrival;  // state right after the jump
};

/// One atom of a boundary jump kernel.
struct KernelOutcome {
  double probability;
  State arrival;
};

/// A piecewise deterministic Markov process with boundaries.
///
/// Contract:
///  - `hazards` and `transitions` list the same transitions in the same
///    order; their count and arrival modes depend on the mode only.
///  - `boundary_function` is negative inside the mode's domain; the flow
///    hits the boundary when it crosses zero from below.
///  - kernels have countable (here: finite) support summing to one and
///    never map a state onto itself.
///  - the failure region D is entered either through a spontaneous or a
///    boundary arrival, or by the flow; the simulator sets `m_d` in both
///    cases.
/// Implementations must be immutable once built: one instance is shared by
/// every worker.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::size_t dimension() const = 0;
  virtual double horizon() const = 0;
  virtual State initial_state() const = 0;

  virtual void vector_field(const State& z, std::span<double> dxdt) const = 0;

  /// Advances `z` by one RK4 step of length dt. Models with a cheap
  /// closed-form vector field may override this with an inlined version.
  virtual void flow_step(State& z, double dt) const;

  virtual double boundary_function(const State& z) const = 0;

  /// States that lie outside their mode's domain and must jump at once
  /// (zero-duration boundary cascade).
  virtual bool immediate_boundary(const State& /*z*/) const { return false; }

  /// Moves a located boundary point exactly onto the boundary.
  virtual void snap_to_boundary(State& /*z*/) const {}

  virtual std::size_t transition_count(const State& z) const = 0;
  virtual void hazards(const State& z, std::span<double> rates) const = 0;
  virtual void transitions(const State& z, std::vector<Transition>& out) const = 0;

  virtual void boundary_kernel(const State& z_minus, std::vector<KernelOutcome>& out) const = 0;

  virtual bool in_failure_region(const State& z) const = 0;

  /// Total interior hazard, the sum of `hazards`.
  double total_hazard(const State& z) const;

  // Finite-mode support, used by the dynamic-programming oracle.
  virtual std::optional<std::size_t> mode_count() const { return std::nullopt; }
  virtual bool static_position() const { return false; }
  virtual std::size_t mode_index(const State& z) const;
  virtual State state_for_mode(std::size_t index) const;

  /// Column names and values describing a mode, for trajectory dumps.
  virtual std::vector<std::string> mode_columns() const { return {"mode"}; }
  virtual std::vector<std::string> describe_mode(const State& z) const;
};

}  // namespace pdmp
