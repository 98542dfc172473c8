#include "segment.hpp"

#include <algorithm>
#include <cmath>

#include "pdmp/error.hpp"
#include "pdmp/flow.hpp"

namespace pdmp::detail {

namespace {

// Root of  a*tau + c*tau^2 = r  on [0, w] with c = (b - a) / (2w).
double invert_linear_hazard(double a, double b, double w, double r) {
  if (r <= 0.0) return 0.0;
  const double c = (b - a) / (2.0 * w);
  double tau;
  if (c == 0.0) {
    tau = a > 0.0 ? r / a : w;
  } else {
    const double disc = std::max(0.0, a * a + 4.0 * c * r);
    const double denom = a + std::sqrt(disc);
    tau = denom > 0.0 ? 2.0 * r / denom : w;
  }
  return std::clamp(tau, 0.0, w);
}

double partial_area(double a, double b, double w, double tau) {
  return a * tau + (b - a) * tau * tau / (2.0 * w);
}

}  // namespace

SegmentWalker::SegmentWalker(const Model& model, const BiasScheme* scheme, const SimOptions& opts)
    : model_(model), scheme_(scheme), opts_(opts) {
  pool_.resize(static_cast<std::size_t>(std::max(opts_.quadrature_max_depth, 1)) + 2);
}

void SegmentWalker::evaluate(Node& node) {
  node.f.resize(n_trans_);
  node.g.resize(n_trans_);
  model_.hazards(node.z, node.f);
  double total = 0.0;
  for (double r : node.f) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw Error(ErrorCode::model_contract, "hazard must be finite and non-negative");
    }
    total += r;
  }
  node.f_total = total;

  const double s = req_.start_time + node.t;
  // time-dependent U vanishes at the horizon, so the ratio there is 0/0
  if (!biased_ || node.z.m_d || (multipliers_.empty() && s >= model_.horizon())) {
    std::copy(node.f.begin(), node.f.end(), node.g.begin());
    node.g_total = total;
    return;
  }
  double g_total = 0.0;
  if (!multipliers_.empty()) {
    for (std::size_t j = 0; j < n_trans_; ++j) {
      node.g[j] = node.f[j] * multipliers_[j];
      g_total += node.g[j];
    }
  } else {
    model_.transitions(node.z, trans_buf_);
    const double u0 = effective_u(*scheme_, node.z, s);
    for (std::size_t j = 0; j < n_trans_; ++j) {
      const State arr = finalize_arrival(model_, node.z, trans_buf_[j].arrival);
      node.g[j] = node.f[j] * (effective_u(*scheme_, arr, s) / u0);
      g_total += node.g[j];
    }
  }
  node.g_total = g_total;
}

double SegmentWalker::bisect(const State& za, double length, bool omega) const {
  auto outside = [&](double tau) {
    State z = za;
    model_.flow_step(z, tau);
    return omega ? model_.boundary_function(z) >= 0.0 : model_.in_failure_region(z);
  };
  double lo = 0.0;
  double hi = length;
  while (hi - lo > opts_.bisection_tol) {
    const double mid = 0.5 * (lo + hi);
    if (outside(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

void SegmentWalker::finish_interpolated(const Node& a, const Node& b, double tau, SegmentEnd end) {
  const double w = b.t - a.t;
  const double frac = w > 0.0 ? tau / w : 0.0;
  for (std::size_t j = 0; j < n_trans_; ++j) {
    f_end_[j] = a.f[j] + (b.f[j] - a.f[j]) * frac;
    g_end_[j] = a.g[j] + (b.g[j] - a.g[j]) * frac;
  }
  res_.f_total_end = a.f_total + (b.f_total - a.f_total) * frac;
  res_.g_total_end = a.g_total + (b.g_total - a.g_total) * frac;
  if (w > 0.0) {
    res_.lambda_f += partial_area(a.f_total, b.f_total, w, tau);
    res_.lambda_g += partial_area(a.g_total, b.g_total, w, tau);
    if (req_.per_transition_integrals) {
      for (std::size_t j = 0; j < n_trans_; ++j) f_int_[j] += partial_area(a.f[j], b.f[j], w, tau);
    }
  }
  res_.end = end;
  res_.duration = a.t + tau;
  // a_ is the RK4 node the piece hangs from; partial step from there
  res_.end_state = a_.z;
  model_.flow_step(res_.end_state, res_.duration - a_.t);
  check_finite(res_.end_state);
}

bool SegmentWalker::process_piece(const Node& a, const Node& b) {
  const double w = b.t - a.t;
  const double area_g = 0.5 * (a.g_total + b.g_total) * w;
  if (res_.lambda_g + area_g >= req_.target_lambda && b.t <= req_.target_time) {
    const double tau =
        invert_linear_hazard(a.g_total, b.g_total, w, req_.target_lambda - res_.lambda_g);
    finish_interpolated(a, b, tau, SegmentEnd::jump);
    return true;
  }
  if (b.t >= req_.target_time) {
    const double tau = std::clamp(req_.target_time - a.t, 0.0, w);
    finish_interpolated(a, b, tau, SegmentEnd::target_time);
    return true;
  }
  res_.lambda_g += area_g;
  res_.lambda_f += 0.5 * (a.f_total + b.f_total) * w;
  if (req_.per_transition_integrals) {
    for (std::size_t j = 0; j < n_trans_; ++j) f_int_[j] += 0.5 * (a.f[j] + b.f[j]) * w;
  }
  return false;
}

bool SegmentWalker::refine(const Node& anchor, const Node& a, const Node& b, int depth) {
  Node& mid = pool_[static_cast<std::size_t>(depth)];
  mid.t = 0.5 * (a.t + b.t);
  mid.z = anchor.z;
  model_.flow_step(mid.z, mid.t - anchor.t);
  evaluate(mid);
  const double err = std::abs(mid.g_total - 0.5 * (a.g_total + b.g_total)) * (b.t - a.t);
  if (err <= opts_.quadrature_tol || depth + 1 >= static_cast<int>(pool_.size())) {
    if (process_piece(a, mid)) return true;
    return process_piece(mid, b);
  }
  if (refine(anchor, a, mid, depth + 1)) return true;
  // pool_[depth] is still `mid`: deeper levels only touch higher slots
  return refine(anchor, mid, b, depth + 1);
}

const SegmentResult& SegmentWalker::run(const SegmentRequest& req) {
  req_ = req;
  res_ = SegmentResult{};
  n_trans_ = model_.transition_count(req.start);
  f_end_.assign(n_trans_, 0.0);
  g_end_.assign(n_trans_, 0.0);
  f_int_.assign(n_trans_, 0.0);
  res_.f_end = f_end_;
  res_.g_end = g_end_;
  res_.f_integrals = f_int_;

  biased_ = scheme_ != nullptr && !req.start.m_d;
  multipliers_.clear();
  if (biased_ && scheme_->mode_only()) {
    model_.transitions(req.start, trans_buf_);
    const double u0 = effective_u(*scheme_, req.start, req.start_time);
    multipliers_.resize(n_trans_);
    for (std::size_t j = 0; j < n_trans_; ++j) {
      const State arr = finalize_arrival(model_, req.start, trans_buf_[j].arrival);
      multipliers_[j] = effective_u(*scheme_, arr, req.start_time) / u0;
    }
  }

  if (model_.immediate_boundary(req.start)) {
    res_.end = SegmentEnd::boundary;
    res_.immediate = true;
    res_.end_state = req.start;
    return res_;
  }

  a_.t = 0.0;
  a_.z = req.start;
  evaluate(a_);
  if (req.budget <= 0.0) {
    res_.end = SegmentEnd::horizon;
    res_.end_state = req.start;
    return res_;
  }

  const double h = opts_.step;
  const bool watch_failure = !req.start.m_d;
  double g_a = model_.boundary_function(a_.z);
  bool d_a = watch_failure && model_.in_failure_region(a_.z);

  for (std::size_t i = 0;; ++i) {
    double tb = std::min(static_cast<double>(i + 1) * h, req.budget);
    double length = tb - a_.t;
    b_.z = a_.z;
    model_.flow_step(b_.z, length);
    check_finite(b_.z);

    const double g_b = model_.boundary_function(b_.z);
    const bool hit_omega = (g_a < 0.0 && g_b >= 0.0) || (g_a == 0.0 && g_b > 0.0);
    const bool hit_d = watch_failure && !d_a && model_.in_failure_region(b_.z);

    SegmentEnd end = SegmentEnd::jump;  // "no terminal event in this step"
    bool failure_entry = false;
    if (hit_omega || hit_d) {
      double tau = kInfinity;
      if (hit_omega) tau = bisect(a_.z, length, true);
      if (hit_d) {
        const double tau_d = bisect(a_.z, length, false);
        if (tau_d < tau) {
          tau = tau_d;
          failure_entry = true;
        }
      }
      length = tau;
      tb = a_.t + tau;
      b_.z = a_.z;
      model_.flow_step(b_.z, length);
      if (!failure_entry) model_.snap_to_boundary(b_.z);
      end = SegmentEnd::boundary;
    } else if (tb >= req.budget) {
      end = SegmentEnd::horizon;
    }
    b_.t = tb;
    evaluate(b_);

    bool stopped;
    if (opts_.quadrature_tol > 0.0 && length > 0.0) {
      stopped = refine(a_, a_, b_, 0);
    } else {
      stopped = length > 0.0 ? process_piece(a_, b_) : false;
    }
    if (stopped) return res_;

    if (end != SegmentEnd::jump) {
      res_.end = end;
      res_.failure_entry = failure_entry;
      res_.duration = end == SegmentEnd::horizon ? req.budget : tb;
      res_.end_state = b_.z;
      res_.f_total_end = b_.f_total;
      res_.g_total_end = b_.g_total;
      std::copy(b_.f.begin(), b_.f.end(), f_end_.begin());
      std::copy(b_.g.begin(), b_.g.end(), g_end_.begin());
      return res_;
    }
    std::swap(a_, b_);
    g_a = g_b;
    d_a = watch_failure && model_.in_failure_region(a_.z);
  }
}

}  // namespace pdmp::detail
