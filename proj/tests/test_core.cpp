#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "pdmp/error.hpp"
#include "pdmp/flow.hpp"
#include "pdmp/models/ctmc.hpp"
#include "pdmp/models/heated_room.hpp"
#include "pdmp/rng.hpp"
#include "pdmp/simulate.hpp"
#include "stats.hpp"

namespace {

using namespace pdmp;
using models::HeatedRoom;
using models::HeaterStatus;
constexpr auto ON = HeaterStatus::on;
constexpr auto OFF = HeaterStatus::off;
constexpr auto F = HeaterStatus::failed;

TEST(Rng, SameSeedAndStreamRepeat) {
  RngStream a(42, 7), b(42, 7), c(42, 8);
  int differ = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    if (x != c.uniform()) ++differ;
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_GT(differ, 95);
}

TEST(Flow, ZeroStepIsIdentity) {
  HeatedRoom room;
  const State z = room.initial_state();
  EXPECT_EQ(integrate_flow(room, z, 0.0), z);
}

TEST(Flow, CoolingMatchesClosedForm) {
  HeatedRoom room;
  const State z = room.make_state(7.5, {OFF, OFF, OFF});
  EXPECT_NEAR(integrate_flow(room, z, 10.0).x[0], -1.5 + 9.0 * std::exp(-1.0), 1e-6);
  EXPECT_NEAR(integrate_flow(room, z, 10.0).x[0], 1.8110, 1e-4);
}

TEST(Flow, HeatingMatchesClosedForm) {
  HeatedRoom room;
  const State z = room.make_state(1.0, {ON, F, OFF});
  const State out = integrate_flow(room, z, 1.0);
  EXPECT_NEAR(out.x[0], 48.5 - 47.5 * std::exp(-0.1), 1e-6);
  EXPECT_EQ(out.mode, z.mode);
  EXPECT_EQ(out.m_d, z.m_d);
}

TEST(Flow, Rk4TracksExponentialOverHorizon) {
  HeatedRoom room;
  const State cool = room.make_state(7.5, {OFF, OFF, OFF});
  const State heat = room.make_state(1.0, {ON, F, OFF});
  double worst = 0.0;
  State zc = cool, zh = heat;
  for (int k = 1; k <= 100; ++k) {
    zc = integrate_flow(room, zc, 1.0);
    zh = integrate_flow(room, zh, 1.0);
    worst = std::max(worst, std::abs(zc.x[0] - (-1.5 + 9.0 * std::exp(-0.1 * k))));
    worst = std::max(worst, std::abs(zh.x[0] - (48.5 - 47.5 * std::exp(-0.1 * k))));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Flow, NonFinitePositionIsReported) {
  State z = State::scalar(std::nan(""), 0);
  try {
    check_finite(z);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::numerical_blowup);
  }
}

TEST(Boundary, UpperThresholdJustBelow) {
  HeatedRoom room;
  const auto hit = boundary_hit_time(room, room.make_state(5.49, {ON, OFF, OFF}), 100.0);
  EXPECT_NEAR(hit.time, 10.0 * std::log(43.01 / 43.0), 1e-9);
  EXPECT_NEAR(hit.time, 0.002326, 1e-6);
  EXPECT_NEAR(hit.state.x[0], 5.5, 1e-8);
}

TEST(Boundary, AllFailedCoolingNeverHits) {
  HeatedRoom room;
  const auto hit = boundary_hit_time(room, room.make_state(3.0, {F, F, F}), 100.0);
  EXPECT_TRUE(std::isinf(hit.time));
}

TEST(Boundary, LowerThresholdFromOne) {
  HeatedRoom room;
  const auto hit = boundary_hit_time(room, room.make_state(1.0, {OFF, OFF, OFF}), 100.0);
  EXPECT_NEAR(hit.time, std::log(2.5 / 2.0) / 0.1, 1e-9);
  EXPECT_NEAR(hit.state.x[0], 0.5, 1e-8);
}

TEST(Boundary, LimitCensorsTheSearch) {
  HeatedRoom room;
  const auto hit = boundary_hit_time(room, room.make_state(1.0, {OFF, OFF, OFF}), 1.0);
  EXPECT_TRUE(std::isinf(hit.time));
}

TEST(JumpTime, ZeroHazardReachesBudget) {
  auto chain = models::tiny_ctmc_model(0.0, 0.0, 2, 100.0);
  RngStream rng(1, 0);
  for (int i = 0; i < 100; ++i) {
    const auto jt = sample_jump_time(chain, chain.initial_state(), 100.0, rng);
    EXPECT_EQ(jt.kind, JumpKind::horizon);
    EXPECT_DOUBLE_EQ(jt.time, 100.0);
  }
}

TEST(JumpTime, ConstantRateMean) {
  auto chain = models::tiny_ctmc_model(0.1, 1.0, 2, 1.0);
  RngStream rng(3, 0);
  const int n = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto jt = sample_jump_time(chain, chain.initial_state(), kInfinity, rng);
    ASSERT_EQ(jt.kind, JumpKind::spontaneous);
    sum += jt.time;
  }
  EXPECT_NEAR(sum / n, 5.0, 3.0 * 5.0 / std::sqrt(double(n)));
}

TEST(JumpTime, BoundaryAtomProbability) {
  HeatedRoom room;
  const State z = room.make_state(1.0, {OFF, OFF, OFF});
  const double t_star = std::log(1.25) / 0.1;
  const double lambda =
      3.0 * (0.0021 * t_star + 0.00015 * (-1.5 * t_star + 25.0 * (1.0 - std::exp(-0.1 * t_star))));
  const double p = std::exp(-lambda);
  EXPECT_NEAR(lambda, 0.014801, 1e-6);

  RngStream rng(5, 0);
  const int n = 1'000'000;
  int boundary = 0;
  for (int i = 0; i < n; ++i) {
    const auto jt = sample_jump_time(room, z, 100.0, rng);
    if (jt.kind == JumpKind::boundary) {
      ++boundary;
      ASSERT_NEAR(jt.time, t_star, 1e-9);
    } else {
      ASSERT_EQ(jt.kind, JumpKind::spontaneous);
      ASSERT_LT(jt.time, t_star);
    }
  }
  const double sd = std::sqrt(p * (1 - p) / n);
  EXPECT_NEAR(double(boundary) / n, p, 3.0 * sd);
}

TEST(JumpTime, FirstJumpOfChainIsExponential) {
  auto chain = models::tiny_ctmc_model(0.1, 1.0, 2, 2.0);
  RngStream rng(11, 0);
  std::vector<double> t(100'000);
  for (auto& v : t) v = sample_jump_time(chain, chain.initial_state(), kInfinity, rng).time;
  const auto ks = pdmp::testing::ks_one_sample(t, [](double x) { return 1.0 - std::exp(-0.2 * x); });
  EXPECT_GT(ks.p_value, 0.01) << "D = " << ks.statistic;
}

TEST(Transition, LowerThresholdCascade) {
  HeatedRoom room;
  const State z = room.make_state(0.5, {OFF, F, OFF});
  const std::map<int, double> expected{
      {models::encode_mode({ON, F, OFF}), 0.99},
      {models::encode_mode({F, F, ON}), 0.0099},
      {models::encode_mode({F, F, F}), 0.0001},
  };
  std::map<int, double> seen;
  RngStream rng(13, 0);
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const State a = sample_transition(room, z, JumpKind::boundary, rng);
    ASSERT_TRUE(expected.count(a.mode)) << a.mode;
    ASSERT_EQ(a.x[0], 0.5);
    seen[a.mode] += 1.0;
  }
  std::vector<double> obs, exp;
  for (const auto& [mode, prob] : expected) {
    obs.push_back(seen[mode]);
    exp.push_back(prob * n);
  }
  EXPECT_GT(pdmp::testing::chi_square(obs, exp).p_value, 0.01);
}

TEST(Transition, RepairAgainstFailureRatio) {
  HeatedRoom room;
  // heater 1 failed, heater 2 ON, heater 3 OFF at x = 3
  const State z = room.make_state(3.0, {F, ON, OFF});
  std::vector<Transition> tr;
  room.transitions(z, tr);
  ASSERT_EQ(tr.size(), 3u);
  const double fail = 0.0021 + 0.00015 * 3.0;
  EXPECT_NEAR(tr[0].rate, 0.2, 1e-15);
  EXPECT_NEAR(tr[1].rate, fail, 1e-15);
  EXPECT_NEAR(0.2 / (0.2 + fail), 0.98741, 1e-5);

  RngStream rng(17, 0);
  const int n = 1'000'000;
  int repair = 0, fail_two = 0;
  for (int i = 0; i < n; ++i) {
    const State a = sample_transition(room, z, JumpKind::spontaneous, rng);
    if (a.mode == tr[0].arrival.mode) ++repair;
    if (a.mode == tr[1].arrival.mode) ++fail_two;
  }
  const double total = 0.2 + 2.0 * fail;
  const double p = 0.2 / total;
  EXPECT_NEAR(double(repair) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
  const double cond = double(repair) / (repair + fail_two);
  const double m = repair + fail_two;
  EXPECT_NEAR(cond, 0.2 / (0.2 + fail), 3.0 * std::sqrt(0.98741 * 0.01259 / m));
}

TEST(Transition, SingleTransitionIsCertain) {
  auto chain = models::tiny_ctmc_model(0.1, 0.0, 1, 1.0);
  RngStream rng(19, 0);
  for (int i = 0; i < 1000; ++i) {
    const State a = sample_transition(chain, chain.initial_state(), JumpKind::spontaneous, rng);
    ASSERT_EQ(a.mode, 1);
    ASSERT_TRUE(a.m_d);
  }
}

TEST(Transition, ZeroHazardSpontaneousIsAContractError) {
  auto chain = models::tiny_ctmc_model(0.0, 0.0, 1, 1.0);
  RngStream rng(1, 1);
  EXPECT_THROW(sample_transition(chain, chain.initial_state(), JumpKind::spontaneous, rng),
               Error);
}

TEST(Trajectory, ZeroHazardIsOneSegment) {
  auto chain = models::tiny_ctmc_model(0.0, 0.0, 2, 7.0);
  RngStream rng(1, 2);
  const Skeleton sk = simulate_trajectory(chain, rng);
  ASSERT_EQ(sk.entries.size(), 1u);
  EXPECT_EQ(sk.entries[0].state, chain.initial_state());
  EXPECT_EQ(sk.entries[0].duration, 7.0);
  EXPECT_EQ(sk.entries[0].kind, JumpKind::horizon);
}

TEST(Trajectory, SkeletonInvariantsOnHeatedRoom) {
  HeatedRoom room;
  std::vector<double> rates(3);
  std::size_t boundary_segments = 0;
  for (std::uint64_t i = 0; i < 300; ++i) {
    RngStream rng(23, i);
    const Skeleton sk = simulate_trajectory(room, rng);
    ASSERT_FALSE(sk.entries.empty());
    EXPECT_NEAR(sk.total_duration(), room.horizon(), 1e-9);
    EXPECT_EQ(sk.entries.back().kind, JumpKind::horizon);
    bool md = false;
    for (std::size_t k = 0; k < sk.entries.size(); ++k) {
      const auto& e = sk.entries[k];
      if (k + 1 < sk.entries.size()) {
        ASSERT_NE(e.kind, JumpKind::horizon);
      }
      ASSERT_GE(e.duration, 0.0);
      ASSERT_TRUE(!md || e.state.m_d);
      md = e.state.m_d;
      room.hazards(e.state, rates);
      EXPECT_DOUBLE_EQ(room.total_hazard(e.state), rates[0] + rates[1] + rates[2]);
      if (e.kind == JumpKind::boundary) {
        ++boundary_segments;
        const State end = integrate_flow(room, e.state, e.duration);
        const bool entered_d = !e.state.m_d && sk.entries[k + 1].state.m_d;
        if (!entered_d) {
          EXPECT_NEAR(room.boundary_function(end), 0.0, 1e-8);
        }
      }
    }
  }
  EXPECT_GT(boundary_segments, 1000u);
}

TEST(Trajectory, SameStreamSameSkeleton) {
  HeatedRoom room;
  RngStream a(99, 5), b(99, 5);
  const Skeleton s1 = simulate_trajectory(room, a);
  const Skeleton s2 = simulate_trajectory(room, b);
  ASSERT_EQ(s1.entries.size(), s2.entries.size());
  for (std::size_t k = 0; k < s1.entries.size(); ++k) {
    EXPECT_EQ(s1.entries[k].state, s2.entries[k].state);
    EXPECT_EQ(s1.entries[k].duration, s2.entries[k].duration);
    EXPECT_EQ(s1.entries[k].kind, s2.entries[k].kind);
  }
}

TEST(Trajectory, RunawayGuard) {
  auto chain = models::tiny_ctmc_model(50.0, 50.0, 2, 100.0);
  SimOptions opts;
  opts.max_jumps = 100;
  RngStream rng(1, 3);
  try {
    simulate_trajectory(chain, rng, opts);
    FAIL() << "expected runaway error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::runaway_model);
  }
}

}  // namespace
