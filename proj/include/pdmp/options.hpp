#pragma once

#include <cstddef>

namespace pdmp {

/// Numerical controls shared by every simulation path.
struct SimOptions {
  /// RK4 step; also the node spacing of the hazard quadrature.
  double step = 0.01;
  /// Boundary location accuracy in time.
  double bisection_tol = 1e-10;
  /// Zeno guard.
  std::size_t max_jumps = 1'000'000;
  /// Absolute error target for the cumulative intensity over one RK4 step.
  /// Zero keeps the plain trapezoid rule on RK4 nodes; a positive value
  /// splits steps where the intensity is strongly curved.
  double quadrature_tol = 0.0;
  /// Deepest split of one RK4 step under adaptive quadrature.
  int quadrature_max_depth = 40;
  /// End the trajectory as soon as D has been visited. Valid for
  /// estimation: post-failure dynamics carry no weight and no outcome.
  bool stop_at_failure = false;
};

}  // namespace pdmp
