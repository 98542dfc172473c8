#include "report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pdmp/flow.hpp"

namespace pdmpis {

namespace {

Json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

Json numbers(const std::vector<double>& v) {
  Json out = Json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

void write_row(std::ostream& out, const pdmp::Model& model, double t, const pdmp::State& z) {
  out << format_double(t);
  for (double x : z.position()) out << ',' << format_double(x);
  for (const auto& c : model.describe_mode(z)) out << ',' << c;
  out << ',' << (z.m_d ? 1 : 0) << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json to_json(const pdmp::EstimateReport& r) {
  Json j;
  j["method"] = r.method;
  j["n_sim"] = r.n_sim;
  j["n_hits"] = r.n_hits;
  j["p_hat"] = number(r.p_hat);
  j["sigma2"] = number(r.sigma2);
  j["var_hat"] = number(r.var_hat);
  j["ci"] = {number(r.ci_lo), number(r.ci_hi)};
  j["max_weight"] = number(r.max_weight);
  j["top_weights"] = numbers(r.top_weights);
  Json q;
  for (std::size_t i = 0; i < r.weight_quantiles.size(); ++i) {
    char key[16];
    std::snprintf(key, sizeof key, "q%g", 100.0 * pdmp::kWeightQuantileLevels[i]);
    q[key] = number(r.weight_quantiles[i]);
  }
  j["weight_quantiles"] = q;
  j["seed"] = r.seed;
  j["workers"] = r.workers;
  j["timing"] = {{"t_sim", number(r.t_sim)}, {"efficiency", number(r.efficiency)}};
  return j;
}

Json to_json(const pdmp::CeTrace& trace) {
  Json j;
  j["alpha"] = numbers(trace.alpha);
  j["converged"] = trace.converged;
  Json its = Json::array();
  for (const auto& it : trace.iterations) {
    its.push_back({{"alpha", numbers(it.alpha)},
                   {"alpha_next", numbers(it.alpha_next)},
                   {"n_drawn", it.n_drawn},
                   {"n_hits", it.n_hits},
                   {"objective_start", number(it.objective_start)},
                   {"objective", number(it.objective)},
                   {"evaluations", it.evaluations}});
  }
  j["iterations"] = its;
  return j;
}

Json to_json(const pdmp::IdentityReport& report) {
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"lhs", number(c.lhs)},
                      {"rhs", number(c.rhs)},
                      {"tolerance", number(c.tolerance)},
                      {"passed", c.passed}});
  }
  return {{"passed", report.passed()}, {"checks", checks}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

void append_run(const std::filesystem::path& path, const pdmp::EstimateReport& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to " + path.string());
  if (fresh) out << kRunsHeader << '\n';
  out << r.method << ',' << r.n_sim << ',' << format_double(r.p_hat) << ','
      << format_double(r.var_hat) << ',' << format_double(r.ci_lo) << ','
      << format_double(r.ci_hi) << ',' << format_double(r.t_sim) << ','
      << format_double(r.efficiency) << ',' << r.n_hits << '\n';
}

std::string histogram_csv(const pdmp::WeightHistogram& h) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1]) << ',' << h.counts[i]
        << '\n';
  }
  return out.str();
}

std::string ce_trace_csv(const pdmp::CeTrace& trace) {
  std::ostringstream out;
  const std::size_t dim = trace.alpha.size();
  out << "iter";
  for (std::size_t k = 0; k < dim; ++k) out << ",alpha" << k + 1;
  out << ",N,n_hits,objective\n";
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const auto& it = trace.iterations[i];
    out << i;
    for (double a : it.alpha) out << ',' << format_double(a);
    out << ',' << it.n_drawn << ',' << it.n_hits << ',' << format_double(it.objective) << '\n';
  }
  return out.str();
}

std::string trajectory_csv(const pdmp::Model& model, const pdmp::Skeleton& skeleton, double dt,
                           double step) {
  std::ostringstream out;
  out << "time";
  if (model.dimension() == 1) {
    out << ",x";
  } else {
    for (std::size_t k = 0; k < model.dimension(); ++k) out << ",x" << k + 1;
  }
  for (const auto& c : model.mode_columns()) out << ',' << c;
  out << ",m_d\n";

  double t0 = 0.0;
  double next = 0.0;
  for (const auto& e : skeleton.entries) {
    const double t1 = t0 + e.duration;
    write_row(out, model, t0, e.state);
    while (next <= t0) next += dt;
    pdmp::State z = e.state;
    double at = t0;
    for (; next < t1; next += dt) {
      z = pdmp::integrate_flow(model, z, next - at, step);
      at = next;
      write_row(out, model, next, z);
    }
    t0 = t1;
  }
  return out.str();
}

}  // namespace pdmpis
