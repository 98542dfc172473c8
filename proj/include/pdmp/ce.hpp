#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pdmp/bias.hpp"
#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"
#include "pdmp/model.hpp"
#include "pdmp/options.hpp"

namespace pdmp {

/// A family of bias schemes indexed by a real parameter vector in a box.
class ParametricFamily {
 public:
  virtual ~ParametricFamily() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::unique_ptr<BiasScheme> make(std::span<const double> alpha) const = 0;
  virtual std::vector<double> lower() const = 0;
  virtual std::vector<double> upper() const = 0;
  /// Every member is mode-only; enables the recorded-segment objective.
  virtual bool mode_only() const { return false; }
  virtual std::string name() const = 0;
};

/// exp(a1 b^2) interior, exp(a2 b^2) at the lower-threshold kernel.
class HeatedRoomFamily final : public ParametricFamily {
 public:
  explicit HeatedRoomFamily(double upper_bound = 4.0) : upper_(upper_bound) {}
  std::size_t dimension() const override { return 2; }
  std::unique_ptr<BiasScheme> make(std::span<const double> alpha) const override;
  std::vector<double> lower() const override { return {0.0, 0.0}; }
  std::vector<double> upper() const override { return {upper_, upper_}; }
  bool mode_only() const override { return true; }
  std::string name() const override { return "heated_room"; }

 private:
  double upper_;
};

/// exp(alpha * (mode - top)) for alpha in [0, upper]; see
/// ModeExponentialScheme.
class ModeExponentialFamily final : public ParametricFamily {
 public:
  explicit ModeExponentialFamily(int top, double upper_bound = 6.0)
      : top_(top), upper_(upper_bound) {}
  std::size_t dimension() const override { return 1; }
  std::unique_ptr<BiasScheme> make(std::span<const double> alpha) const override;
  std::vector<double> lower() const override { return {0.0}; }
  std::vector<double> upper() const override { return {upper_}; }
  bool mode_only() const override { return true; }
  std::string name() const override { return "mode_exponential"; }

 private:
  int top_;
  double upper_;
};

/// Family with one admissible point; used to pin a scheme in CE.
class FixedFamily final : public ParametricFamily {
 public:
  using Factory = std::function<std::unique_ptr<BiasScheme>(std::span<const double>)>;
  FixedFamily(std::vector<double> point, Factory factory, bool mode_only)
      : point_(std::move(point)), factory_(std::move(factory)), mode_only_(mode_only) {}
  std::size_t dimension() const override { return point_.size(); }
  std::unique_ptr<BiasScheme> make(std::span<const double> alpha) const override {
    return factory_(alpha);
  }
  std::vector<double> lower() const override { return point_; }
  std::vector<double> upper() const override { return point_; }
  bool mode_only() const override { return mode_only_; }
  std::string name() const override { return "fixed"; }

 private:
  std::vector<double> point_;
  Factory factory_;
  bool mode_only_;
};

struct CeConfig {
  std::vector<double> alpha0;
  std::size_t n_ce = 100;
  double eps = 0.1;  // max-norm threshold on successive parameters
  std::size_t max_iters = 20;
  std::size_t max_draws_per_step = 1'000'000;
  int restarts = 3;
  double simplex_scale = 0.2;
  std::size_t batch = 512;
  int workers = 0;
  SimOptions sim{};
  std::uint64_t seed = 1;
  bool force_generic = false;  // re-evaluate stored skeletons even for mode-only families
};

struct CeIteration {
  std::vector<double> alpha;       // parameter the sample was drawn with
  std::vector<double> alpha_next;  // minimiser on that sample
  std::size_t n_drawn = 0;
  std::size_t n_hits = 0;
  double objective_start = 0.0;  // objective at alpha
  double objective = 0.0;        // objective at alpha_next
  std::size_t evaluations = 0;
};

struct CeTrace {
  std::vector<CeIteration> iterations;
  std::vector<double> alpha;
  bool converged = false;
};

/// Error carrying the iterations completed before the failure.
class CeFailure : public Error {
 public:
  CeFailure(ErrorCode code, const std::string& what, CeTrace trace)
      : Error(code, what), trace_(std::move(trace)) {}
  const CeTrace& trace() const { return trace_; }

 private:
  CeTrace trace_;
};

/// Simplified cross-entropy: at each step draw from the current member until
/// `n_ce` trajectories fail, then minimise the weighted negative
/// log-density of those trajectories over the family.
CeTrace ce_optimize(const Model& model, const ParametricFamily& family, const CeConfig& cfg);

/// Log-density of a recorded trajectory under a mode-only scheme, rebuilt
/// from per-transition hazard integrals without re-integrating the flow.
double record_log_density(const BiasScheme& scheme, const TrajectoryRecord& record);

struct NelderMeadOptions {
  double scale = 0.2;
  /// Checked before each iteration; one iteration uses at most d + 2.
  std::size_t max_evaluations = 400;
  double f_tol = 1e-10;
  double x_tol = 1e-7;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
};

/// Box-constrained Nelder-Mead; trial points are projected onto the box.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const std::vector<double>& lower,
                             const std::vector<double>& upper, const NelderMeadOptions& opts = {});

}  // namespace pdmp
