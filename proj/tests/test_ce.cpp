#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "pdmp/ce.hpp"
#include "pdmp/error.hpp"
#include "pdmp/estimate.hpp"
#include "pdmp/measure.hpp"
#include "pdmp/models/ctmc.hpp"
#include "pdmp/models/heated_room.hpp"
#include "pdmp/oracle.hpp"

namespace {

using namespace pdmp;

models::ConstantRateChain chain() { return models::tiny_ctmc_model(0.1, 1.0, 2, 2.0); }

TEST(NelderMead, QuadraticInsideBox) {
  auto f = [](std::span<const double> x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + 3.0 * (x[1] + 2.0) * (x[1] + 2.0) + 0.5 * x[0] * x[1];
  };
  // stationary point: [2 0.5; 0.5 6] x = [2; -12]
  const double det = 2.0 * 6.0 - 0.25;
  const double ex = (2.0 * 6.0 - 0.5 * -12.0) / det;
  const double ey = (2.0 * -12.0 - 0.5 * 2.0) / det;
  const auto r = nelder_mead(f, {0.0, 0.0}, {-5.0, -5.0}, {5.0, 5.0});
  EXPECT_NEAR(r.x[0], ex, 1e-4);
  EXPECT_NEAR(r.x[1], ey, 1e-4);
  EXPECT_LE(r.value, f(std::vector<double>{ex, ey}) + 1e-8);
  EXPECT_GT(r.evaluations, 0u);
}

TEST(NelderMead, MinimumOutsideBoxLandsOnFace) {
  auto f = [](std::span<const double> x) { return (x[0] - 5.0) * (x[0] - 5.0) + x[1] * x[1]; };
  const auto r = nelder_mead(f, {1.0, 1.0}, {0.0, -1.0}, {3.0, 1.0});
  EXPECT_NEAR(r.x[0], 3.0, 1e-6);
  EXPECT_NEAR(r.x[1], 0.0, 1e-3);
}

TEST(NelderMead, RespectsEvaluationBudget) {
  auto f = [](std::span<const double> x) { return std::cos(3.0 * x[0]) + x[0] * x[0]; };
  NelderMeadOptions o;
  o.max_evaluations = 15;
  const auto r = nelder_mead(f, {2.0}, {-4.0}, {4.0}, o);
  EXPECT_GE(r.evaluations, 15u);
  EXPECT_LE(r.evaluations, 15u + 3u);
}

TEST(CrossEntropy, FixedFamilyStopsAfterOneStep) {
  const auto m = chain();
  FixedFamily fam(
      {1.5},
      [](std::span<const double> a) {
        return std::make_unique<models::ModeExponentialScheme>(a[0], 2);
      },
      true);
  CeConfig cfg;
  cfg.alpha0 = {1.5};
  const auto tr = ce_optimize(m, fam, cfg);
  ASSERT_EQ(tr.iterations.size(), 1u);
  EXPECT_TRUE(tr.converged);
  EXPECT_EQ(tr.alpha, std::vector<double>{1.5});
  EXPECT_EQ(tr.iterations[0].alpha_next, std::vector<double>{1.5});
  EXPECT_EQ(tr.iterations[0].objective, tr.iterations[0].objective_start);
  EXPECT_GE(tr.iterations[0].n_hits, cfg.n_ce);
}

TEST(CrossEntropy, ObjectiveNeverIncreasesWithinAStep) {
  const auto m = chain();
  ModeExponentialFamily fam(2);
  CeConfig cfg;
  cfg.alpha0 = {0.5};
  cfg.seed = 3;
  const auto tr = ce_optimize(m, fam, cfg);
  ASSERT_FALSE(tr.iterations.empty());
  for (const auto& it : tr.iterations) {
    EXPECT_LE(it.objective, it.objective_start);
    EXPECT_GE(it.n_hits, cfg.n_ce);
    EXPECT_GE(it.n_drawn, it.n_hits);
    EXPECT_GE(it.alpha_next[0], 0.0);
    EXPECT_LE(it.alpha_next[0], 6.0);
  }
  EXPECT_TRUE(tr.converged);
}

TEST(CrossEntropy, SelectedParameterReducesVariance) {
  const auto m = chain();
  ModeExponentialFamily fam(2);
  CeConfig cfg;
  cfg.alpha0 = {0.5};
  cfg.seed = 4;
  const auto tr = ce_optimize(m, fam, cfg);
  models::ModeExponentialScheme tuned(tr.alpha[0], 2);
  EstimatorConfig ec;
  ec.n = 100'000;
  ec.seed = 5;
  const auto is = importance_sampling(m, tuned, ec);
  const double p = compute_ustar_dp(m).value(m, m.initial_state(), 0.0);
  EXPECT_LT(is.sigma2, 0.25 * p * (1.0 - p));
  EXPECT_NEAR(is.p_hat, p, 3.0 * std::sqrt(is.var_hat));
}

TEST(CrossEntropy, ReproducibleForFixedSeed) {
  models::HeatedRoom room;
  HeatedRoomFamily fam;
  CeConfig cfg;
  cfg.alpha0 = {0.5, 0.5};
  cfg.max_iters = 2;
  cfg.seed = 6;
  cfg.workers = 1;
  const auto a = ce_optimize(room, fam, cfg);
  cfg.workers = 3;
  const auto b = ce_optimize(room, fam, cfg);
  ASSERT_EQ(a.iterations.size(), b.iterations.size());
  for (std::size_t i = 0; i < a.iterations.size(); ++i) {
    EXPECT_EQ(a.iterations[i].alpha, b.iterations[i].alpha);
    EXPECT_EQ(a.iterations[i].alpha_next, b.iterations[i].alpha_next);
    EXPECT_EQ(a.iterations[i].n_drawn, b.iterations[i].n_drawn);
    EXPECT_EQ(a.iterations[i].objective, b.iterations[i].objective);
  }
}

// Reference CE trace: about 1970 draws for 100 failures at (0.5, 0.5).
TEST(CrossEntropy, HeatedRoomFirstStepMovesTowardFailure) {
  models::HeatedRoom room;
  HeatedRoomFamily fam;
  CeConfig cfg;
  cfg.alpha0 = {0.5, 0.5};
  cfg.max_iters = 1;
  cfg.seed = 7;
  const auto tr = ce_optimize(room, fam, cfg);
  ASSERT_EQ(tr.iterations.size(), 1u);
  const auto& it = tr.iterations[0];
  EXPECT_EQ(it.n_hits, 100u);
  EXPECT_GT(it.n_drawn, 800u);
  EXPECT_LT(it.n_drawn, 5000u);
  EXPECT_GT(it.alpha_next[0], 0.5);
  EXPECT_FALSE(tr.converged);
}

TEST(CrossEntropy, RecordedObjectiveMatchesReintegration) {
  models::HeatedRoom room;
  HeatedRoomFamily fam;
  CeConfig cfg;
  cfg.alpha0 = {0.8, 0.9};
  cfg.max_iters = 1;
  cfg.n_ce = 40;
  cfg.restarts = 0;
  cfg.seed = 8;
  const auto fast = ce_optimize(room, fam, cfg);
  cfg.force_generic = true;
  const auto slow = ce_optimize(room, fam, cfg);
  const auto& f = fast.iterations[0];
  const auto& s = slow.iterations[0];
  EXPECT_EQ(f.n_drawn, s.n_drawn);
  // full skeletons add a parameter-free post-failure term
  EXPECT_NEAR(f.objective_start - f.objective, s.objective_start - s.objective, 1e-6);
  EXPECT_NEAR(f.alpha_next[0], s.alpha_next[0], 1e-3);
  EXPECT_NEAR(f.alpha_next[1], s.alpha_next[1], 1e-3);
}

TEST(CrossEntropy, RecordDensityMatchesSkeletonDensity) {
  models::HeatedRoom room;
  models::HeatedRoomScheme drawn(0.9, 1.1);
  models::HeatedRoomScheme other(1.4, 0.3);
  SimOptions opts;
  TrajectoryEngine engine(room, &drawn, opts);
  for (std::uint64_t i = 0; i < 50; ++i) {
    RngStream rng(9, i);
    Skeleton sk;
    TrajectoryRecord rec;
    engine.run(rng, &sk, &rec);
    for (const models::HeatedRoomScheme* s : {&drawn, &other}) {
      const double generic = log_density_under_scheme(room, *s, sk, opts).total;
      EXPECT_NEAR(record_log_density(*s, rec), generic, 1e-8 * std::max(1.0, std::abs(generic)));
    }
  }
}

TEST(CrossEntropy, RejectsBadConfiguration) {
  const auto m = chain();
  ModeExponentialFamily fam(2);
  CeConfig cfg;
  cfg.alpha0 = {0.5, 0.5};
  EXPECT_THROW(ce_optimize(m, fam, cfg), Error);
  cfg.alpha0 = {7.0};
  EXPECT_THROW(ce_optimize(m, fam, cfg), Error);
  cfg.alpha0 = {0.5};
  cfg.n_ce = 0;
  EXPECT_THROW(ce_optimize(m, fam, cfg), Error);
}

TEST(CrossEntropy, UnderBiasedStartReportsTrace) {
  const auto m = models::tiny_ctmc_model(0.01, 1.0, 3, 1.0);
  ModeExponentialFamily fam(3);
  CeConfig cfg;
  cfg.alpha0 = {0.0};
  cfg.max_draws_per_step = 2000;
  try {
    ce_optimize(m, fam, cfg);
    FAIL() << "expected a CE initialization failure";
  } catch (const CeFailure& e) {
    EXPECT_EQ(e.code(), ErrorCode::ce_initialization);
    EXPECT_TRUE(e.trace().iterations.empty());
  }
}

// U*^alpha contains the zero-variance scheme at alpha = 1.
TEST(CrossEntropy, UStarPowerFamilyFindsTheOptimum) {
  const auto m = chain();
  auto table = std::make_shared<const UStarTable>(compute_ustar_dp(m));
  UStarPowerFamily fam(m, table);
  std::vector<double> found;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    CeConfig cfg;
    cfg.alpha0 = {0.3};
    cfg.seed = seed;
    cfg.sim = oracle_sim_options();
    cfg.sim.quadrature_tol = 1e-5;
    found.push_back(ce_optimize(m, fam, cfg).alpha[0]);
  }
  std::nth_element(found.begin(), found.begin() + 25, found.end());
  EXPECT_NEAR(found[25], 1.0, 0.05);
}

}  // namespace
