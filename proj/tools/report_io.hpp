#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pdmp/ce.hpp"
#include "pdmp/estimate.hpp"
#include "pdmp/model.hpp"
#include "pdmp/oracle.hpp"
#include "pdmp/state.hpp"

namespace pdmpis {

using Json = nlohmann::ordered_json;

/// 17 significant digits, enough for an exact round trip.
std::string format_double(double v);

Json to_json(const pdmp::EstimateReport& r);
Json to_json(const pdmp::CeTrace& trace);
Json to_json(const pdmp::IdentityReport& report);

/// Writes text atomically enough for a single writer: temp file, then rename.
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& doc);

inline constexpr const char* kRunsHeader =
    "method,n,p_hat,var_hat,ci_lo,ci_hi,t_sim,efficiency,n_hits";

/// Appends one row to the runs ledger, writing the header for a new file.
void append_run(const std::filesystem::path& path, const pdmp::EstimateReport& r);

/// bin_lo,bin_hi,count
std::string histogram_csv(const pdmp::WeightHistogram& h);

/// iter,alpha1..alphaK,N,n_hits,objective; one row per CE sample.
std::string ce_trace_csv(const pdmp::CeTrace& trace);

/// Trajectory sampled every `dt` on [0, horizon], plus one row at each jump
/// arrival. Columns: time, position, the model's mode columns, m_d.
std::string trajectory_csv(const pdmp::Model& model, const pdmp::Skeleton& skeleton, double dt,
                           double step);

}  // namespace pdmpis
