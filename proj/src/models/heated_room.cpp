#include "pdmp/models/heated_room.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/error.hpp"

namespace pdmp::models {

void HeatedRoomParams::validate() const {
  if (!(x_ext < 0.0 && 0.0 < x_min && x_min < x_max)) {
    throw Error(ErrorCode::invalid_argument, "need x_ext < 0 < x_min < x_max");
  }
  if (!(beta1 > 0.0 && beta2 >= 0.0)) throw Error(ErrorCode::invalid_argument, "bad flow rates");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw Error(ErrorCode::invalid_argument, "gamma in [0,1)");
  if (!(failure_base >= 0.0 && failure_base + failure_slope * std::min(0.0, x_ext) >= 0.0 &&
        repair_rate >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "rates must be non-negative");
  }
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw Error(ErrorCode::invalid_argument, "horizon must be finite and >= 0");
  }
}

int encode_mode(const HeaterModes& s) {
  return static_cast<int>(s[0]) + 3 * static_cast<int>(s[1]) + 9 * static_cast<int>(s[2]);
}

HeaterModes decode_mode(int mode) {
  return {static_cast<HeaterStatus>(mode % 3), static_cast<HeaterStatus>((mode / 3) % 3),
          static_cast<HeaterStatus>(mode / 9)};
}

int failed_count(int mode) {
  int b = 0;
  for (auto s : decode_mode(mode)) b += s == HeaterStatus::failed;
  return b;
}

HeatedRoom::HeatedRoom(HeatedRoomParams params) : p_(params) {
  p_.validate();
  for (int m = 0; m < 27; ++m) {
    const auto s = decode_mode(m);
    any_on_[m] = std::any_of(s.begin(), s.end(), [](auto v) { return v == HeaterStatus::on; });
    all_failed_[m] = failed_count(m) == 3;
  }
}

State HeatedRoom::make_state(double x, const HeaterModes& statuses, bool m_d) const {
  return State::scalar(x, encode_mode(statuses), m_d);
}

State HeatedRoom::initial_state() const { return make_state(p_.x0, p_.initial); }

void HeatedRoom::vector_field(const State& z, std::span<double> dxdt) const {
  dxdt[0] = p_.beta1 * (p_.x_ext - z.x[0]) + (any_on_[z.mode] ? p_.beta2 : 0.0);
}

void HeatedRoom::flow_step(State& z, double dt) const {
  // RK4 on the scalar field, written out
  const double c = p_.beta1 * p_.x_ext + (any_on_[z.mode] ? p_.beta2 : 0.0);
  const double b = p_.beta1;
  const double x = z.x[0];
  const double k1 = c - b * x;
  const double k2 = c - b * (x + 0.5 * dt * k1);
  const double k3 = c - b * (x + 0.5 * dt * k2);
  const double k4 = c - b * (x + dt * k3);
  z.x[0] = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double HeatedRoom::boundary_function(const State& z) const {
  const double x = z.x[0];
  if (any_on_[z.mode] || all_failed_[z.mode]) return x - p_.x_max;
  return std::max(p_.x_min - x, x - p_.x_max);
}

bool HeatedRoom::immediate_boundary(const State& z) const {
  // an idle heater below the lower threshold must be asked to start
  return !any_on_[z.mode] && !all_failed_[z.mode] && z.x[0] <= p_.x_min;
}

void HeatedRoom::snap_to_boundary(State& z) const {
  if (any_on_[z.mode] || all_failed_[z.mode]) {
    z.x[0] = p_.x_max;
    return;
  }
  z.x[0] = std::abs(z.x[0] - p_.x_min) <= std::abs(z.x[0] - p_.x_max) ? p_.x_min : p_.x_max;
}

void HeatedRoom::hazards(const State& z, std::span<double> rates) const {
  const auto s = decode_mode(z.mode);
  const double fail = failure_rate(z.x[0]);
  for (std::size_t i = 0; i < 3; ++i) {
    switch (s[i]) {
      case HeaterStatus::failed: rates[i] = p_.repair_rate; break;
      case HeaterStatus::on: rates[i] = fail; break;
      case HeaterStatus::off:
        rates[i] = p_.failures == FailureExposure::all ? fail : 0.0;
        break;
    }
  }
}

void HeatedRoom::transitions(const State& z, std::vector<Transition>& out) const {
  out.clear();
  std::array<double, 3> rates{};
  hazards(z, rates);
  const auto s = decode_mode(z.mode);
  for (std::size_t i = 0; i < 3; ++i) {
    HeaterModes next = s;
    if (s[i] == HeaterStatus::failed) {
      bool others_failed = true;
      for (std::size_t k = 0; k < 3; ++k) {
        if (k != i && s[k] != HeaterStatus::failed) others_failed = false;
      }
      next[i] = z.x[0] <= p_.x_min && others_failed ? HeaterStatus::on : HeaterStatus::off;
    } else {
      next[i] = HeaterStatus::failed;
    }
    out.push_back({rates[i], make_state(z.x[0], next, z.m_d)});
  }
}

void HeatedRoom::boundary_kernel(const State& z_minus, std::vector<KernelOutcome>& out) const {
  out.clear();
  const auto s = decode_mode(z_minus.mode);
  const double x = z_minus.x[0];
  if (any_on_[z_minus.mode]) {
    HeaterModes next = s;
    for (auto& v : next) {
      if (v == HeaterStatus::on) v = HeaterStatus::off;
    }
    out.push_back({1.0, make_state(x, next, z_minus.m_d)});
    return;
  }
  if (all_failed_[z_minus.mode] || x > 0.5 * (p_.x_min + p_.x_max)) {
    throw Error(ErrorCode::model_contract, "no heater can act at this boundary point");
  }
  // lower threshold: heaters are asked in order, each failing on demand
  // with probability gamma
  HeaterModes cur = s;
  double mass = 1.0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (cur[i] != HeaterStatus::off) continue;
    HeaterModes started = cur;
    started[i] = HeaterStatus::on;
    out.push_back({mass * (1.0 - p_.gamma), make_state(x, started, z_minus.m_d)});
    mass *= p_.gamma;
    cur[i] = HeaterStatus::failed;
    if (mass == 0.0) return;
  }
  out.push_back({mass, make_state(x, cur, z_minus.m_d)});
}

std::vector<std::string> HeatedRoom::mode_columns() const {
  return {"heater1", "heater2", "heater3"};
}

std::vector<std::string> HeatedRoom::describe_mode(const State& z) const {
  std::vector<std::string> out;
  for (auto v : decode_mode(z.mode)) {
    out.emplace_back(v == HeaterStatus::on ? "ON" : v == HeaterStatus::off ? "OFF" : "F");
  }
  return out;
}

HeatedRoomScheme::HeatedRoomScheme(double alpha1, double alpha2)
    : alpha1_(alpha1), alpha2_(alpha2) {
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "heated-room scheme parameters must be >= 0");
  }
}

double HeatedRoomScheme::u(const State& z, double) const {
  const int b = failed_count(z.mode);
  return std::exp(alpha1_ * b * b);
}

double HeatedRoomScheme::u_boundary(const State& z_plus, double) const {
  const int b = failed_count(z_plus.mode);
  return std::exp(alpha2_ * b * b);
}

}  // namespace pdmp::models
