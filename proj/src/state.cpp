#include "pdmp/state.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/error.hpp"

namespace pdmp {

State State::make(std::span<const double> pos, int mode, bool m_d) {
  if (pos.size() > kMaxDim) throw Error(ErrorCode::invalid_argument, "position dimension too large");
  State z;
  std::copy(pos.begin(), pos.end(), z.x.begin());
  z.dim = static_cast<std::uint8_t>(pos.size());
  z.mode = mode;
  z.m_d = m_d;
  return z;
}

bool operator==(const State& a, const State& b) {
  if (a.dim != b.dim || a.mode != b.mode || a.m_d != b.m_d) return false;
  return std::equal(a.x.begin(), a.x.begin() + a.dim, b.x.begin());
}

bool same_state(const State& a, const State& b, double tol) {
  if (a.dim != b.dim || a.mode != b.mode || a.m_d != b.m_d) return false;
  for (std::size_t i = 0; i < a.dim; ++i) {
    if (std::abs(a.x[i] - b.x[i]) > tol) return false;
  }
  return true;
}

std::string_view to_string(JumpKind kind) {
  switch (kind) {
    case JumpKind::spontaneous: return "spontaneous";
    case JumpKind::boundary: return "boundary";
    case JumpKind::horizon: return "horizon";
  }
  return "?";
}

double Skeleton::total_duration() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.duration;
  return s;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::numerical_blowup: return "numerical blow-up";
    case ErrorCode::model_contract: return "model contract";
    case ErrorCode::scheme_contract: return "scheme contract";
    case ErrorCode::runaway_model: return "runaway model";
    case ErrorCode::domain: return "domain";
    case ErrorCode::impossible_skeleton: return "impossible skeleton";
    case ErrorCode::support_violation: return "support violation";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::ce_initialization: return "cross-entropy initialisation";
    case ErrorCode::ce_objective: return "cross-entropy objective";
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::config: return "config";
  }
  return "error";
}

}  // namespace pdmp
