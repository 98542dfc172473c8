#include "pdmp/engine.hpp"

#include <cmath>

#include "pdmp/error.hpp"
#include "pdmp/simulate.hpp"
#include "segment.hpp"

namespace pdmp {

std::size_t draw_index(const std::vector<double>& weights, double total, RngStream& rng) {
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;  // rounding in the running sum
}

void validate_kernel(const State& z_minus, const std::vector<KernelOutcome>& kernel) {
  if (kernel.empty()) throw Error(ErrorCode::model_contract, "empty boundary kernel");
  double sum = 0.0;
  for (const auto& k : kernel) {
    if (!(k.probability >= 0.0)) throw Error(ErrorCode::model_contract, "negative kernel mass");
    if (k.probability > 0.0 && k.arrival == z_minus) {
      throw Error(ErrorCode::model_contract, "kernel puts mass on a self-jump");
    }
    sum += k.probability;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw Error(ErrorCode::model_contract, "kernel masses do not sum to one");
  }
}

TrajectoryEngine::TrajectoryEngine(const Model& model, const BiasScheme* scheme,
                                   const SimOptions& opts)
    : model_(model),
      scheme_(scheme),
      opts_(opts),
      walker_(std::make_unique<detail::SegmentWalker>(model, scheme, opts)) {}

TrajectoryEngine::~TrajectoryEngine() = default;
TrajectoryEngine::TrajectoryEngine(TrajectoryEngine&&) noexcept = default;

TrajectoryOutcome TrajectoryEngine::run(RngStream& rng, Skeleton* skeleton,
                                        TrajectoryRecord* record) {
  return run_from(model_.initial_state(), 0.0, model_.horizon(), rng, skeleton, record);
}

TrajectoryOutcome TrajectoryEngine::run_from(const State& z0, double s0, double end_time,
                                             RngStream& rng, Skeleton* skeleton,
                                             TrajectoryRecord* record) {
  if (!(s0 >= 0.0) || !(end_time >= s0) || end_time > model_.horizon()) {
    throw Error(ErrorCode::invalid_argument, "need 0 <= s0 <= end_time <= horizon");
  }
  const double t_f = end_time;
  State z = z0;
  if (!z.m_d && model_.in_failure_region(z)) z.m_d = true;

  if (skeleton) {
    skeleton->entries.clear();
    skeleton->horizon = t_f - s0;
  }
  if (record) record->segments.clear();

  TrajectoryOutcome out;
  double elapsed = s0;
  for (;;) {
    if (opts_.stop_at_failure && z.m_d) break;
    detail::SegmentRequest req;
    req.start = z;
    req.start_time = elapsed;
    req.budget = t_f - elapsed;
    req.target_lambda = rng.exponential();
    req.per_transition_integrals = record != nullptr;
    const detail::SegmentResult& seg = walker_->run(req);

    out.log_weight += seg.lambda_g - seg.lambda_f;
    const JumpKind kind = seg.end == detail::SegmentEnd::jump       ? JumpKind::spontaneous
                          : seg.end == detail::SegmentEnd::boundary ? JumpKind::boundary
                                                                    : JumpKind::horizon;
    if (skeleton) skeleton->entries.push_back({z, seg.duration, kind});
    SegmentRecord* rec = nullptr;
    if (record) {
      rec = &record->segments.emplace_back();
      rec->departure = z;
      rec->start_time = elapsed;
      rec->duration = seg.duration;
      rec->kind = kind;
      rec->failure_entry = seg.failure_entry;
      rec->hazard_integrals.assign(seg.f_integrals.begin(), seg.f_integrals.end());
      model_.transitions(z, trans_);
      for (const auto& t : trans_) rec->arrivals.push_back(finalize_arrival(model_, z, t.arrival));
    }

    if (kind == JumpKind::horizon) {
      z = seg.end_state;
      break;
    }
    elapsed += seg.duration;
    const State& z_minus = seg.end_state;
    State arrival;

    if (kind == JumpKind::spontaneous) {
      weights_.assign(seg.g_end.begin(), seg.g_end.end());
      if (!(seg.g_total_end > 0.0)) {
        throw Error(ErrorCode::model_contract, "spontaneous jump with zero intensity");
      }
      const std::size_t j = draw_index(weights_, seg.g_total_end, rng);
      out.log_weight += std::log(seg.f_end[j]) - std::log(seg.g_end[j]);
      model_.transitions(z_minus, trans_);
      arrival = finalize_arrival(model_, z_minus, trans_[j].arrival);
      if (rec) {
        rec->chosen = j;
        rec->chosen_rate = seg.f_end[j];
      }
    } else if (seg.failure_entry) {
      arrival = z_minus;
      arrival.m_d = true;
    } else {
      model_.boundary_kernel(z_minus, kernel_);
      validate_kernel(z_minus, kernel_);
      for (auto& k : kernel_) k.arrival = finalize_arrival(model_, z_minus, k.arrival);
      weights_.resize(kernel_.size());
      double total = 0.0;
      const bool biased = scheme_ != nullptr && !z_minus.m_d;
      for (std::size_t i = 0; i < kernel_.size(); ++i) {
        weights_[i] = kernel_[i].probability *
                      (biased ? effective_u_boundary(*scheme_, kernel_[i].arrival, elapsed) : 1.0);
        total += weights_[i];
      }
      const std::size_t k = draw_index(weights_, total, rng);
      if (biased) {
        out.log_weight += std::log(kernel_[k].probability) - std::log(weights_[k] / total);
      }
      arrival = kernel_[k].arrival;
      if (rec) {
        rec->chosen = k;
        rec->kernel = kernel_;
      }
    }

    if (++out.jumps > opts_.max_jumps) {
      throw Error(ErrorCode::runaway_model, "jump count exceeded the configured maximum");
    }
    z = arrival;
  }
  out.hit_failure = z.m_d;
  out.final_state = z;
  return out;
}

JumpTime sample_jump_time(const Model& model, const State& z, double budget, RngStream& rng,
                          const SimOptions& opts) {
  detail::SegmentWalker walker(model, nullptr, opts);
  detail::SegmentRequest req;
  req.start = z;
  req.budget = budget;
  req.target_lambda = rng.exponential();
  const auto& seg = walker.run(req);
  switch (seg.end) {
    case detail::SegmentEnd::jump: return {seg.duration, JumpKind::spontaneous};
    case detail::SegmentEnd::boundary: return {seg.duration, JumpKind::boundary};
    default: return {seg.duration, JumpKind::horizon};
  }
}

State sample_transition(const Model& model, const State& z_minus, JumpKind kind, RngStream& rng) {
  if (kind == JumpKind::spontaneous) {
    std::vector<Transition> trans;
    model.transitions(z_minus, trans);
    std::vector<double> w;
    double total = 0.0;
    for (const auto& t : trans) {
      if (!(t.rate >= 0.0)) throw Error(ErrorCode::model_contract, "negative hazard");
      w.push_back(t.rate);
      total += t.rate;
    }
    if (!(total > 0.0)) {
      throw Error(ErrorCode::model_contract, "spontaneous jump from a zero-hazard state");
    }
    return finalize_arrival(model, z_minus, trans[draw_index(w, total, rng)].arrival);
  }
  if (kind == JumpKind::boundary) {
    std::vector<KernelOutcome> kernel;
    model.boundary_kernel(z_minus, kernel);
    validate_kernel(z_minus, kernel);
    std::vector<double> w;
    for (const auto& k : kernel) w.push_back(k.probability);
    return finalize_arrival(model, z_minus, kernel[draw_index(w, 1.0, rng)].arrival);
  }
  throw Error(ErrorCode::invalid_argument, "no transition at the horizon");
}

Skeleton simulate_trajectory(const Model& model, RngStream& rng, const SimOptions& opts) {
  SimOptions full = opts;
  full.stop_at_failure = false;
  TrajectoryEngine engine(model, nullptr, full);
  Skeleton sk;
  engine.run(rng, &sk);
  return sk;
}

}  // namespace pdmp
