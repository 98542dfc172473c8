#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "pdmp/bias.hpp"
#include "pdmp/ce.hpp"
#include "pdmp/model.hpp"
#include "pdmp/options.hpp"

namespace pdmp {

/// U*(z, s) on a uniform time grid for every mode index of a finite-mode,
/// frozen-position model. Values between grid times are interpolated with
/// cubic Hermite polynomials using the stored time derivatives.
class UStarTable {
 public:
  UStarTable(std::size_t modes, double horizon, std::size_t steps);

  std::size_t modes() const { return modes_; }
  std::size_t steps() const { return steps_; }
  double horizon() const { return horizon_; }
  double step() const { return horizon_ / static_cast<double>(steps_); }
  double grid_time(std::size_t k) const { return step() * static_cast<double>(k); }

  double at(std::size_t mode, std::size_t k) const { return values_[k * modes_ + mode]; }
  double slope_at(std::size_t mode, std::size_t k) const { return slopes_[k * modes_ + mode]; }
  void set(std::size_t mode, std::size_t k, double value, double slope);

  /// Interpolated value; s is clamped to [0, horizon].
  double value(std::size_t mode, double s) const;
  double value(const Model& model, const State& z, double s) const;

  /// Rows "mode,s,value".
  void write_csv(std::ostream& out) const;

 private:
  std::size_t modes_;
  double horizon_;
  std::size_t steps_;
  std::vector<double> values_;  // time-major
  std::vector<double> slopes_;  // dU*/ds
};

/// Backward RK4 for dU*/dv = sum_j lambda^j (U*(arrival_j) - U*) in
/// v = t_f - s, from U*(., t_f) = 1{m_d}. Throws unsupported unless the
/// model has a finite mode set and a frozen position.
UStarTable compute_ustar_dp(const Model& model, double h_dp = 1e-3);

/// Smallest value the oracle schemes hand to the simulator; U* vanishes at
/// the horizon for states that cannot fail in zero time.
inline constexpr double kUStarFloor = 1e-100;

/// Bias scheme with U = U*^power read from the table; power 1 is the
/// zero-variance scheme.
class UStarScheme final : public BiasScheme {
 public:
  UStarScheme(const Model& model, std::shared_ptr<const UStarTable> table, double power = 1.0);
  double u(const State& z, double s) const override;
  std::vector<double> params() const override { return {power_}; }

 private:
  const Model& model_;
  std::shared_ptr<const UStarTable> table_;
  double power_;
};

/// Quadrature settings under which the zero-variance scheme is resolved:
/// the biased intensity blows up near the horizon.
SimOptions oracle_sim_options();

std::unique_ptr<BiasScheme> exact_optimal_scheme(const Model& model,
                                                 std::shared_ptr<const UStarTable> table);

/// U*^alpha for alpha in [0, max_power]; contains the optimum at alpha = 1.
class UStarPowerFamily final : public ParametricFamily {
 public:
  UStarPowerFamily(const Model& model, std::shared_ptr<const UStarTable> table,
                   double max_power = 3.0)
      : model_(model), table_(std::move(table)), max_power_(max_power) {}
  std::size_t dimension() const override { return 1; }
  std::unique_ptr<BiasScheme> make(std::span<const double> alpha) const override {
    return std::make_unique<UStarScheme>(model_, table_, alpha[0]);
  }
  std::vector<double> lower() const override { return {0.0}; }
  std::vector<double> upper() const override { return {max_power_}; }
  std::string name() const override { return "ustar_power"; }

 private:
  const Model& model_;
  std::shared_ptr<const UStarTable> table_;
  double max_power_;
};

struct UStarEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t m = 0;
};

/// Monte-Carlo estimate of U*(z, s) from m trajectories started at (z, s).
/// With a scheme the trajectories are importance-sampled and weighted.
UStarEstimate estimate_ustar_mc(const Model& model, const State& z, double s, std::size_t m,
                                std::uint64_t seed, const BiasScheme* scheme = nullptr,
                                const SimOptions& opts = {}, int workers = 0);

struct IdentityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct IdentityReport {
  std::vector<IdentityCheck> checks;
  bool passed() const;
  void add(std::string name, double lhs, double rhs, double tolerance);
};

/// U*(z, s) = E[U*(Z_{s+delta}, s+delta)] with the right side averaged over
/// m simulated states; tolerance three standard errors plus `slack`.
IdentityCheck tower_check(const Model& model, const UStarTable& table, const State& z, double s,
                          double delta, std::size_t m, std::uint64_t seed, double slack = 1e-9);

/// Central difference of U* along the flow against lambda (U* - U-), on
/// grid points; tolerance 5 h_dp.
IdentityCheck derivative_check(const Model& model, const UStarTable& table, std::size_t mode,
                               std::size_t grid_index);

/// U*(z_pre, s_pre) against the kernel average U- at the point where the
/// flow from z_pre meets the boundary, both by Monte Carlo. Start z_pre
/// close to the boundary so the flow-side value approximates the limit.
IdentityCheck boundary_invariance_check(const Model& model, const State& z_pre, double s_pre,
                                        std::size_t m, std::uint64_t seed,
                                        const BiasScheme* scheme = nullptr,
                                        const SimOptions& opts = {});

/// Nested Monte Carlo tower check for models without a table: outer draws
/// of Z_{s+delta}, each scored by `m_inner` continuations. With a scheme the
/// outer draws come from the importance process, weighted by f/g.
IdentityCheck nested_tower_check(const Model& model, const State& z, double s, double delta,
                                 std::size_t m_direct, std::size_t m_outer, std::size_t m_inner,
                                 std::uint64_t seed, const BiasScheme* scheme = nullptr,
                                 const SimOptions& opts = {});

/// Tower, derivative and absorption checks on the table at `points` random
/// (mode, time) pairs.
IdentityReport check_ustar_identities(const Model& model, const UStarTable& table,
                                      std::size_t points, std::size_t m, std::uint64_t seed);

}  // namespace pdmp
