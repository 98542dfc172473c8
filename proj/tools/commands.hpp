#pragma once

#include <cstdint>
#include <memory>
#include <ostream>

#include "config.hpp"
#include "pdmp/bias.hpp"
#include "pdmp/ce.hpp"
#include "pdmp/estimate.hpp"
#include "pdmp/model.hpp"
#include "pdmp/oracle.hpp"

namespace pdmpis {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

std::unique_ptr<pdmp::Model> make_model(const RunConfig& cfg);
pdmp::SimOptions sim_options(const RunConfig& cfg);

struct ZeroVarianceResult {
  double p = 0.0;            // dynamic-programming value
  double max_rel_dev = 0.0;  // max |w - p| / p over failing weights
  double var_ratio = 0.0;    // per-replication variance / p^2
  std::size_t n = 0;
  std::size_t hits = 0;
  double seconds = 0.0;
  bool passed = false;
};

/// IS with the exact U* scheme on a finite-mode chain. Passes when every
/// replication fails, each weight is within `rel_tol` of p and the
/// estimator variance is at most var_tol * p^2.
ZeroVarianceResult zero_variance_check(const pdmp::Model& model, const pdmp::UStarTable& table,
                                       std::size_t n, std::uint64_t seed, int workers,
                                       double rel_tol = 1e-5, double var_tol = 1e-10);

/// Nested Monte Carlo checks on the heated room: kernel-averaged U* against
/// U* just before the lower threshold from (F,F,OFF) and (OFF,OFF,OFF), and
/// a tower check from (F,OFF,OFF). Estimates use the importance scheme
/// (alpha1, alpha2) with m trajectories each.
pdmp::IdentityReport heated_room_spot_checks(const pdmp::models::HeatedRoomParams& params,
                                             double alpha1, double alpha2, std::size_t m,
                                             std::uint64_t seed, const pdmp::SimOptions& opts = {});

/// Executes cfg.method and writes its artifacts under cfg.output_dir.
/// Returns kExitOk, or kExitCheckFailed when validation fails. Errors
/// propagate as exceptions.
int run(const RunConfig& cfg, const ConfigStore& store, std::ostream& log);

/// run() with exceptions mapped onto exit codes.
int run_guarded(const ConfigStore& store, std::ostream& log, std::ostream& err);

}  // namespace pdmpis
