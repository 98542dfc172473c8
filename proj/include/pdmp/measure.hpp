#pragma once

#include <vector>

#include "pdmp/bias.hpp"
#include "pdmp/model.hpp"
#include "pdmp/options.hpp"
#include "pdmp/state.hpp"

namespace pdmp {

/// Contribution of one skeleton segment to the trajectory log-density.
/// The kernel term belongs to the jump that ends the segment.
struct SegmentDensity {
  double log_hazard = 0.0;  // log lambda at the jump; spontaneous segments only
  double survival = 0.0;    // -Lambda over the segment, <= 0
  double log_kernel = 0.0;  // log K(z_{k+1}) for the jump that ends the segment
  bool has_hazard = false;
  bool has_kernel = false;
};

struct LogDensityBreakdown {
  std::vector<SegmentDensity> segments;
  double total = 0.0;
};

/// Lambda_z(t): integral of the total hazard along the flow from z.
/// Throws domain when t lies beyond the boundary hitting time.
double cumulative_intensity(const Model& model, const State& z, double t,
                            const SimOptions& opts = {});

/// Log-density of a skeleton with respect to the reference measure built
/// from Lebesgue measure on jump times, Dirac atoms at boundary times and
/// counting measures on kernel supports. Segments ended by a boundary or by
/// the horizon contribute their survival factor only.
LogDensityBreakdown log_density(const Model& model, const Skeleton& skeleton,
                                const SimOptions& opts = {});

/// Same density for the importance process defined by `scheme`.
LogDensityBreakdown log_density_under_scheme(const Model& model, const BiasScheme& scheme,
                                             const Skeleton& skeleton,
                                             const SimOptions& opts = {});

/// log f(s) - log g(s), both terms evaluated on one shared quadrature grid.
double log_likelihood_ratio(const Model& model, const BiasScheme& scheme, const Skeleton& skeleton,
                            const SimOptions& opts = {});

}  // namespace pdmp
