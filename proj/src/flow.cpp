#include "pdmp/flow.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/error.hpp"

namespace pdmp {

void check_finite(const State& z) {
  for (double v : z.position()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::numerical_blowup, "non-finite position");
  }
}

State integrate_flow(const Model& model, const State& z, double dt, double step) {
  if (!(dt >= 0.0)) throw Error(ErrorCode::invalid_argument, "flow duration must be >= 0");
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "RK4 step must be > 0");
  State out = z;
  double t = 0.0;
  for (std::size_t i = 0; t < dt; ++i) {
    const double next = std::min(static_cast<double>(i + 1) * step, dt);
    model.flow_step(out, next - t);
    check_finite(out);
    t = next;
  }
  return out;
}

BoundaryHit boundary_hit_time(const Model& model, const State& z, double limit,
                              const SimOptions& opts) {
  BoundaryHit hit;
  if (model.immediate_boundary(z)) {
    hit.time = 0.0;
    hit.state = z;
    return hit;
  }
  State a = z;
  double t = 0.0;
  double g_a = model.boundary_function(a);
  for (std::size_t i = 0; t < limit; ++i) {
    const double next = std::min(static_cast<double>(i + 1) * opts.step, limit);
    State b = a;
    model.flow_step(b, next - t);
    check_finite(b);
    const double g_b = model.boundary_function(b);
    if ((g_a < 0.0 && g_b >= 0.0) || (g_a == 0.0 && g_b > 0.0)) {
      double lo = 0.0;
      double hi = next - t;
      while (hi - lo > opts.bisection_tol) {
        const double mid = 0.5 * (lo + hi);
        State m = a;
        model.flow_step(m, mid);
        if (model.boundary_function(m) >= 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      hit.time = t + hi;
      hit.state = a;
      model.flow_step(hit.state, hi);
      model.snap_to_boundary(hit.state);
      return hit;
    }
    a = b;
    g_a = g_b;
    t = next;
  }
  hit.state = a;
  return hit;
}

void Model::flow_step(State& z, double dt) const {
  const std::size_t d = z.dim;
  std::array<double, kMaxDim> k1{}, k2{}, k3{}, k4{};
  State tmp = z;
  auto field = [&](const State& s, std::array<double, kMaxDim>& k) {
    vector_field(s, std::span<double>(k.data(), d));
  };
  field(z, k1);
  for (std::size_t i = 0; i < d; ++i) tmp.x[i] = z.x[i] + 0.5 * dt * k1[i];
  field(tmp, k2);
  for (std::size_t i = 0; i < d; ++i) tmp.x[i] = z.x[i] + 0.5 * dt * k2[i];
  field(tmp, k3);
  for (std::size_t i = 0; i < d; ++i) tmp.x[i] = z.x[i] + dt * k3[i];
  field(tmp, k4);
  for (std::size_t i = 0; i < d; ++i) {
    z.x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

double Model::total_hazard(const State& z) const {
  std::array<double, 64> buf{};
  const std::size_t n = transition_count(z);
  if (n > buf.size()) {
    std::vector<double> rates(n);
    hazards(z, rates);
    double s = 0.0;
    for (double r : rates) s += r;
    return s;
  }
  hazards(z, std::span<double>(buf.data(), n));
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += buf[j];
  return s;
}

std::size_t Model::mode_index(const State&) const {
  throw Error(ErrorCode::unsupported, "model does not enumerate its modes");
}

State Model::state_for_mode(std::size_t) const {
  throw Error(ErrorCode::unsupported, "model does not enumerate its modes");
}

std::vector<std::string> Model::describe_mode(const State& z) const {
  return {std::to_string(z.mode)};
}

}  // namespace pdmp
