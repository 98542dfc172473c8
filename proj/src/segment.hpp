#pragma once

// Walks one inter-jump segment along the RK4 grid, integrating the original
// (f) and importance (g) jump intensities. Shared by the samplers and by
// the density evaluation so both see the same quadrature nodes.

#include <limits>
#include <span>
#include <vector>

#include "pdmp/bias.hpp"
#include "pdmp/model.hpp"
#include "pdmp/options.hpp"
#include "pdmp/state.hpp"

namespace pdmp::detail {

struct SegmentRequest {
  State start;
  double start_time = 0.0;  // absolute time s of the segment start
  double budget = 0.0;      // time left until the horizon
  double target_lambda = std::numeric_limits<double>::infinity();
  double target_time = std::numeric_limits<double>::infinity();
  bool per_transition_integrals = false;
};

enum class SegmentEnd { jump, target_time, boundary, horizon };

struct SegmentResult {
  SegmentEnd end = SegmentEnd::horizon;
  double duration = 0.0;
  bool failure_entry = false;  // boundary produced by the flow entering D
  bool immediate = false;      // zero-length cascade jump
  State end_state;             // z^- at the end of the segment
  double lambda_f = 0.0;
  double lambda_g = 0.0;
  // Intensities at the end point (linear interpolants of nodal values).
  double f_total_end = 0.0;
  double g_total_end = 0.0;
  std::span<const double> f_end;
  std::span<const double> g_end;
  std::span<const double> f_integrals;  // per transition, when requested
};

class SegmentWalker {
 public:
  /// `scheme` may be null for the original process.
  SegmentWalker(const Model& model, const BiasScheme* scheme, const SimOptions& opts);

  const SegmentResult& run(const SegmentRequest& req);

 private:
  struct Node {
    double t = 0.0;
    State z;
    double f_total = 0.0;
    double g_total = 0.0;
    std::vector<double> f;
    std::vector<double> g;
  };

  void evaluate(Node& node);
  bool process_piece(const Node& a, const Node& b);
  bool refine(const Node& anchor, const Node& a, const Node& b, int depth);
  double bisect(const State& za, double length, bool omega) const;
  void finish_interpolated(const Node& a, const Node& b, double tau, SegmentEnd end);

  const Model& model_;
  const BiasScheme* scheme_;
  SimOptions opts_;

  SegmentRequest req_;
  SegmentResult res_;
  std::size_t n_trans_ = 0;
  bool biased_ = false;
  std::vector<double> multipliers_;  // mode-only schemes
  std::vector<Transition> trans_buf_;
  std::vector<double> f_end_, g_end_, f_int_;
  Node a_, b_;
  std::vector<Node> pool_;
};

}  // namespace pdmp::detail
