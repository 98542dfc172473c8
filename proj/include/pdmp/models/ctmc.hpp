#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pdmp/bias.hpp"
#include "pdmp/model.hpp"

namespace pdmp::models {

/// Finite-mode process with constant rates and a frozen position: the
/// degenerate PDMP without flow or boundaries.
class ConstantRateChain final : public Model {
 public:
  struct Edge {
    int to;
    double rate;
  };

  ConstantRateChain(std::vector<std::vector<Edge>> edges, std::vector<bool> failure_modes,
                    double horizon, int initial_mode = 0);

  std::size_t modes() const { return edges_.size(); }

  std::size_t dimension() const override { return 1; }
  double horizon() const override { return horizon_; }
  State initial_state() const override { return State::scalar(0.0, initial_mode_); }

  void vector_field(const State&, std::span<double> dxdt) const override { dxdt[0] = 0.0; }
  void flow_step(State&, double) const override {}
  double boundary_function(const State&) const override { return -1.0; }

  std::size_t transition_count(const State& z) const override;
  void hazards(const State& z, std::span<double> rates) const override;
  void transitions(const State& z, std::vector<Transition>& out) const override;
  void boundary_kernel(const State& z_minus, std::vector<KernelOutcome>& out) const override;
  bool in_failure_region(const State& z) const override;

  std::optional<std::size_t> mode_count() const override { return 2 * edges_.size(); }
  bool static_position() const override { return true; }
  std::size_t mode_index(const State& z) const override;
  State state_for_mode(std::size_t index) const override;

 private:
  std::vector<std::vector<Edge>> edges_;
  std::vector<bool> failure_;
  double horizon_;
  int initial_mode_;
};

/// n identical components with failure rate a and repair rate b each; the
/// mode counts failed components and D is "all failed".
ConstantRateChain tiny_ctmc_model(double a, double b, int n_comp, double horizon);

/// U(z) = exp(alpha * (mode - top)), which is 1 on the top mode. On
/// tiny_ctmc_model chains the mode is the failed count and top = n_comp, so
/// failures are sped up by e^alpha and repairs slowed down by the same
/// factor.
class ModeExponentialScheme final : public BiasScheme {
 public:
  ModeExponentialScheme(double alpha, int top);
  double u(const State& z, double) const override { return std::exp(alpha_ * (z.mode - top_)); }
  bool mode_only() const override { return true; }
  std::vector<double> params() const override { return {alpha_}; }

 private:
  int top_;
  double alpha_;
};

}  // namespace pdmp::models
