#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "pdmp/flow.hpp"
#include "pdmp/model.hpp"
#include "pdmp/models/ctmc.hpp"
#include "pdmp/state.hpp"

namespace pdmp::testing {

using Gauss = boost::math::quadrature::gauss<double, 20>;

/// Two components tracked individually: bit k set means component k failed.
models::ConstantRateChain two_components(double a, double b, double horizon);

/// Mode state with m_d set when the mode is a failure mode.
State chain_state(const Model& model, int mode);

Skeleton make_skeleton(double horizon, std::vector<SkeletonEntry> entries);

/// exp of log_density.
double density(const Model& model, const Skeleton& skeleton);

/// 20-point Gauss-Legendre on unit-length panels.
template <class F>
double integrate_panels(F f, double a, double b) {
  const int panels = std::max(1, static_cast<int>(std::ceil(b - a)));
  const double w = (b - a) / panels;
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) sum += Gauss::integrate(f, a + i * w, a + (i + 1) * w);
  return sum;
}

/// Integral of lambda(phi(u)) exp(-Lambda(u)) over (0, T] plus the atom at T,
/// T being the first of boundary hit, entry into D and budget.
double segment_mass(const Model& model, const State& z, double budget,
                    double d_entry = kInfinity);

/// Total density mass of two_components(a, b, tf) over paths with at most
/// two jumps; tf must be short enough for three jumps to be negligible.
double short_horizon_total_mass(double a, double b, double tf);

/// Worst |segment_mass - 1| over `count` random states and budgets.
double worst_segment_mass_error_chain(std::size_t count, std::uint64_t seed);
double worst_segment_mass_error_heated_room(std::size_t count, std::uint64_t seed);

}  // namespace pdmp::testing
