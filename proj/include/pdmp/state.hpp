#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace pdmp {

/// Largest position dimension supported without heap allocation.
inline constexpr std::size_t kMaxDim = 4;

/// Point of the augmented state space: position, mode and the
/// failure-visited flag. Trivially copyable so it can live in hot loops.
struct State {
  std::array<double, kMaxDim> x{};
  std::uint8_t dim = 0;
  int mode = 0;
  bool m_d = false;

  std::span<double> position() { return {x.data(), dim}; }
  std::span<const double> position() const { return {x.data(), dim}; }

  static State make(std::span<const double> pos, int mode, bool m_d = false);
  static State scalar(double x0, int mode, bool m_d = false) {
    State z;
    z.x[0] = x0;
    z.dim = 1;
    z.mode = mode;
    z.m_d = m_d;
    return z;
  }

  friend bool operator==(const State& a, const State& b);
};

/// True when modes and flags agree and positions differ by at most `tol`.
bool same_state(const State& a, const State& b, double tol);

enum class JumpKind : std::uint8_t { spontaneous, boundary, horizon };

std::string_view to_string(JumpKind kind);

struct SkeletonEntry {
  State state;      // arrival state z_k at the start of the segment
  double duration;  // t_k
  JumpKind kind;    // what ended the segment
};

/// Truncated embedded chain of a trajectory on [0, horizon].
struct Skeleton {
  std::vector<SkeletonEntry> entries;
  double horizon = 0.0;

  double total_duration() const;
  bool hit_failure() const { return !entries.empty() && final_state().m_d; }
  const State& final_state() const { return entries.back().state; }
};

}  // namespace pdmp
