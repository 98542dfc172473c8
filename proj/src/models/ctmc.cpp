#include "pdmp/models/ctmc.hpp"

#include <cmath>

#include "pdmp/error.hpp"

namespace pdmp::models {

ConstantRateChain::ConstantRateChain(std::vector<std::vector<Edge>> edges,
                                     std::vector<bool> failure_modes, double horizon,
                                     int initial_mode)
    : edges_(std::move(edges)),
      failure_(std::move(failure_modes)),
      horizon_(horizon),
      initial_mode_(initial_mode) {
  if (edges_.empty() || failure_.size() != edges_.size()) {
    throw Error(ErrorCode::invalid_argument, "one failure flag per mode required");
  }
  if (!(horizon_ >= 0.0) || !std::isfinite(horizon_)) {
    throw Error(ErrorCode::invalid_argument, "horizon must be finite and >= 0");
  }
  if (initial_mode_ < 0 || static_cast<std::size_t>(initial_mode_) >= edges_.size()) {
    throw Error(ErrorCode::invalid_argument, "initial mode out of range");
  }
  for (std::size_t m = 0; m < edges_.size(); ++m) {
    for (const Edge& e : edges_[m]) {
      if (e.to < 0 || static_cast<std::size_t>(e.to) >= edges_.size() ||
          static_cast<std::size_t>(e.to) == m) {
        throw Error(ErrorCode::invalid_argument, "edge target invalid or self-loop");
      }
      if (!(e.rate >= 0.0) || !std::isfinite(e.rate)) {
        throw Error(ErrorCode::invalid_argument, "rates must be finite and >= 0");
      }
    }
  }
}

std::size_t ConstantRateChain::transition_count(const State& z) const {
  return edges_[static_cast<std::size_t>(z.mode)].size();
}

void ConstantRateChain::hazards(const State& z, std::span<double> rates) const {
  const auto& e = edges_[static_cast<std::size_t>(z.mode)];
  for (std::size_t j = 0; j < e.size(); ++j) rates[j] = e[j].rate;
}

void ConstantRateChain::transitions(const State& z, std::vector<Transition>& out) const {
  out.clear();
  for (const Edge& e : edges_[static_cast<std::size_t>(z.mode)]) {
    out.push_back({e.rate, State::scalar(z.x[0], e.to, z.m_d)});
  }
}

void ConstantRateChain::boundary_kernel(const State&, std::vector<KernelOutcome>&) const {
  throw Error(ErrorCode::model_contract, "constant-rate chain has no boundary");
}

bool ConstantRateChain::in_failure_region(const State& z) const {
  return failure_[static_cast<std::size_t>(z.mode)];
}

std::size_t ConstantRateChain::mode_index(const State& z) const {
  return static_cast<std::size_t>(z.mode) + (z.m_d ? edges_.size() : 0);
}

State ConstantRateChain::state_for_mode(std::size_t index) const {
  const std::size_t n = edges_.size();
  return State::scalar(0.0, static_cast<int>(index % n), index >= n);
}

ConstantRateChain tiny_ctmc_model(double a, double b, int n_comp, double horizon) {
  if (!(a >= 0.0) || !(b >= 0.0) || n_comp < 1) {
    throw Error(ErrorCode::invalid_argument, "need a, b >= 0 and at least one component");
  }
  std::vector<std::vector<ConstantRateChain::Edge>> edges(static_cast<std::size_t>(n_comp) + 1);
  std::vector<bool> failure(edges.size(), false);
  failure.back() = true;
  for (int k = 0; k <= n_comp; ++k) {
    auto& out = edges[static_cast<std::size_t>(k)];
    if (k < n_comp && a > 0.0) out.push_back({k + 1, (n_comp - k) * a});
    if (k > 0 && b > 0.0) out.push_back({k - 1, k * b});
  }
  return ConstantRateChain(std::move(edges), std::move(failure), horizon);
}

ModeExponentialScheme::ModeExponentialScheme(double alpha, int top) : top_(top), alpha_(alpha) {
  if (!std::isfinite(alpha)) throw Error(ErrorCode::invalid_argument, "alpha must be finite");
}

}  // namespace pdmp::models
