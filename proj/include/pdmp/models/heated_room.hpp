#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pdmp/bias.hpp"
#include "pdmp/model.hpp"

namespace pdmp::models {

enum class HeaterStatus : int { on = 0, off = 1, failed = 2 };

/// Which heaters are exposed to spontaneous failures.
enum class FailureExposure { all, active_only };

struct HeatedRoomParams {
  double x_min = 0.5;
  double x_max = 5.5;
  double x_ext = -1.5;
  double beta1 = 0.1;  // heat exchange rate with the exterior
  double beta2 = 5.0;  // heating power
  double gamma = 0.01;  // failure-on-demand probability
  double failure_base = 0.0021;
  double failure_slope = 0.00015;  // per unit of temperature
  double repair_rate = 0.2;
  double horizon = 100.0;
  double x0 = 7.5;
  std::array<HeaterStatus, 3> initial{HeaterStatus::off, HeaterStatus::off, HeaterStatus::off};
  FailureExposure failures = FailureExposure::all;

  void validate() const;
};

using HeaterModes = std::array<HeaterStatus, 3>;

int encode_mode(const HeaterModes& statuses);
HeaterModes decode_mode(int mode);
int failed_count(int mode);

/// Room heated by three identical heaters in passive redundancy, with a
/// thermostat keeping the temperature in (x_min, x_max) and failure region
/// D = {x < 0}.
class HeatedRoom final : public Model {
 public:
  explicit HeatedRoom(HeatedRoomParams params = {});

  const HeatedRoomParams& params() const { return p_; }

  State make_state(double x, const HeaterModes& statuses, bool m_d = false) const;

  double failure_rate(double x) const { return p_.failure_base + p_.failure_slope * x; }

  std::size_t dimension() const override { return 1; }
  double horizon() const override { return p_.horizon; }
  State initial_state() const override;

  void vector_field(const State& z, std::span<double> dxdt) const override;
  void flow_step(State& z, double dt) const override;
  double boundary_function(const State& z) const override;
  bool immediate_boundary(const State& z) const override;
  void snap_to_boundary(State& z) const override;

  std::size_t transition_count(const State&) const override { return 3; }
  void hazards(const State& z, std::span<double> rates) const override;
  void transitions(const State& z, std::vector<Transition>& out) const override;
  void boundary_kernel(const State& z_minus, std::vector<KernelOutcome>& out) const override;
  bool in_failure_region(const State& z) const override { return z.x[0] < 0.0; }

  std::vector<std::string> mode_columns() const override;
  std::vector<std::string> describe_mode(const State& z) const override;

 private:
  HeatedRoomParams p_;
  std::array<bool, 27> any_on_{};
  std::array<bool, 27> all_failed_{};
};

/// U_alpha(z) = exp(alpha1 * b(z)^2) in the interior and exp(alpha2 * b^2)
/// for the atoms of boundary kernels, b(z) being the number of failed
/// heaters. Failure rates are multiplied by exp(alpha1 (2b + 1)), repair
/// rates divided by exp(alpha1 (2b - 1)).
class HeatedRoomScheme final : public BiasScheme {
 public:
  HeatedRoomScheme(double alpha1, double alpha2);

  double u(const State& z, double s) const override;
  double u_boundary(const State& z_plus, double s) const override;
  bool mode_only() const override { return true; }
  std::vector<double> params() const override { return {alpha1_, alpha2_}; }

  double alpha1() const { return alpha1_; }
  double alpha2() const { return alpha2_; }

 private:
  double alpha1_;
  double alpha2_;
};

}  // namespace pdmp::models
