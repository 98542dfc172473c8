#include "pdmp/measure.hpp"

#include <cmath>

#include "pdmp/engine.hpp"
#include "pdmp/error.hpp"
#include "segment.hpp"

namespace pdmp {

namespace {

constexpr double kMatchTol = 1e-9;
constexpr double kBoundaryTimeTol = 1e-8;

struct DensityPair {
  LogDensityBreakdown f;
  LogDensityBreakdown g;
};

// Walks the skeleton once; `scheme` null means g = f.
DensityPair evaluate(const Model& model, const BiasScheme* scheme, const Skeleton& sk,
                     const SimOptions& opts) {
  if (sk.entries.empty() || sk.entries.back().kind != JumpKind::horizon) {
    throw Error(ErrorCode::invalid_argument, "skeleton must end with a horizon segment");
  }
  detail::SegmentWalker walker(model, scheme, opts);
  std::vector<Transition> trans;
  std::vector<KernelOutcome> kernel;
  DensityPair out;
  const double t_f = sk.horizon;
  double elapsed = 0.0;

  for (std::size_t k = 0; k < sk.entries.size(); ++k) {
    const SkeletonEntry& e = sk.entries[k];
    if (e.kind != JumpKind::horizon && k + 1 == sk.entries.size()) {
      throw Error(ErrorCode::invalid_argument, "only the last segment may end at the horizon");
    }
    detail::SegmentRequest req;
    req.start = e.state;
    req.start_time = elapsed;
    req.budget = t_f - elapsed;
    if (e.kind == JumpKind::spontaneous) req.target_time = e.duration;
    const auto& seg = walker.run(req);

    SegmentDensity fd, gd;
    fd.survival = -seg.lambda_f;
    gd.survival = -seg.lambda_g;

    switch (e.kind) {
      case JumpKind::spontaneous: {
        if (seg.end != detail::SegmentEnd::target_time) {
          throw Error(ErrorCode::impossible_skeleton, "spontaneous jump after a forced jump");
        }
        const State& next = sk.entries[k + 1].state;
        model.transitions(seg.end_state, trans);
        double f_match = 0.0, g_match = 0.0;
        for (std::size_t j = 0; j < trans.size(); ++j) {
          if (same_state(finalize_arrival(model, seg.end_state, trans[j].arrival), next,
                         kMatchTol)) {
            f_match += seg.f_end[j];
            g_match += seg.g_end[j];
          }
        }
        if (!(f_match > 0.0) || !(seg.f_total_end > 0.0)) {
          throw Error(ErrorCode::impossible_skeleton, "jump with zero hazard");
        }
        fd.has_hazard = gd.has_hazard = true;
        fd.has_kernel = gd.has_kernel = true;
        fd.log_hazard = std::log(seg.f_total_end);
        fd.log_kernel = std::log(f_match / seg.f_total_end);
        if (!(g_match > 0.0)) {
          throw Error(ErrorCode::support_violation, "importance process cannot take this jump");
        }
        gd.log_hazard = std::log(seg.g_total_end);
        gd.log_kernel = std::log(g_match / seg.g_total_end);
        break;
      }
      case JumpKind::boundary: {
        if (seg.end != detail::SegmentEnd::boundary ||
            std::abs(seg.duration - e.duration) > kBoundaryTimeTol) {
          throw Error(ErrorCode::impossible_skeleton, "boundary jump away from the boundary");
        }
        const State& next = sk.entries[k + 1].state;
        fd.has_kernel = gd.has_kernel = true;
        if (seg.failure_entry) {
          State expect = seg.end_state;
          expect.m_d = true;
          if (!same_state(expect, next, kMatchTol)) {
            throw Error(ErrorCode::impossible_skeleton, "entry into D must only set the flag");
          }
          break;  // kernel mass one under both laws
        }
        model.boundary_kernel(seg.end_state, kernel);
        validate_kernel(seg.end_state, kernel);
        const double s = elapsed + e.duration;
        const bool biased = scheme != nullptr && !seg.end_state.m_d;
        double f_match = 0.0, g_match = 0.0, g_total = 0.0;
        for (auto& atom : kernel) {
          atom.arrival = finalize_arrival(model, seg.end_state, atom.arrival);
          const double w =
              atom.probability * (biased ? effective_u_boundary(*scheme, atom.arrival, s) : 1.0);
          g_total += w;
          if (same_state(atom.arrival, next, kMatchTol)) {
            f_match += atom.probability;
            g_match += w;
          }
        }
        if (!(f_match > 0.0)) {
          throw Error(ErrorCode::impossible_skeleton, "arrival outside the kernel support");
        }
        fd.log_kernel = std::log(f_match);
        gd.log_kernel = std::log(g_match / g_total);
        break;
      }
      case JumpKind::horizon:
        if (seg.end != detail::SegmentEnd::horizon) {
          throw Error(ErrorCode::impossible_skeleton, "forced jump before the horizon");
        }
        break;
    }
    for (auto [bd, sd] : {std::pair{&out.f, &fd}, std::pair{&out.g, &gd}}) {
      bd->total += sd->survival + sd->log_hazard + sd->log_kernel;
      bd->segments.push_back(*sd);
    }
    elapsed += e.duration;
  }
  return out;
}

}  // namespace

double cumulative_intensity(const Model& model, const State& z, double t, const SimOptions& opts) {
  if (!(t >= 0.0)) throw Error(ErrorCode::domain, "negative time");
  detail::SegmentWalker walker(model, nullptr, opts);
  detail::SegmentRequest req;
  req.start = z;
  req.budget = t;
  req.target_time = t;
  const auto& seg = walker.run(req);
  if (seg.end == detail::SegmentEnd::boundary && seg.duration < t - kBoundaryTimeTol) {
    throw Error(ErrorCode::domain, "time lies beyond the boundary hitting time");
  }
  return seg.lambda_f;
}

LogDensityBreakdown log_density(const Model& model, const Skeleton& skeleton,
                                const SimOptions& opts) {
  return evaluate(model, nullptr, skeleton, opts).f;
}

LogDensityBreakdown log_density_under_scheme(const Model& model, const BiasScheme& scheme,
                                             const Skeleton& skeleton, const SimOptions& opts) {
  return evaluate(model, &scheme, skeleton, opts).g;
}

double log_likelihood_ratio(const Model& model, const BiasScheme& scheme, const Skeleton& skeleton,
                            const SimOptions& opts) {
  const DensityPair d = evaluate(model, &scheme, skeleton, opts);
  return d.f.total - d.g.total;
}

}  // namespace pdmp
