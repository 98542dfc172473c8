#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdmp/models/ctmc.hpp"
#include "pdmp/models/heated_room.hpp"

namespace pdmpis {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ValueType { integer, real, text, boolean, real_list };

struct KeySpec {
  std::string section;
  std::string key;
  std::string fallback;
  ValueType type;
  std::string help;

  std::string name() const { return section + "." + key; }
};

/// Every recognised configuration key with its default.
const std::vector<KeySpec>& config_schema();

/// Flat "section.key" -> text store seeded with the schema defaults.
class ConfigStore {
 public:
  ConfigStore();

  void set(const std::string& name, const std::string& value);
  const std::string& get(const std::string& name) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// INI-style text: [section] headers, key = value lines, '#' or ';'
  /// comments.
  void load_ini(const std::string& text, const std::string& origin = "<config>");
  /// Nested JSON object {section: {key: value}}, as written to
  /// resolved_config.json.
  void load_json(const std::string& text, const std::string& origin = "<config>");
  void load_file(const std::filesystem::path& path);

  std::string to_json() const;

 private:
  std::map<std::string, std::string> values_;
};

struct CeSettings {
  std::vector<std::vector<double>> alpha0;  // one CE run per start point
  std::size_t n_ce = 100;
  double eps = 0.1;
  std::size_t max_iters = 20;
  std::size_t max_draws_per_step = 1'000'000;
  int restarts = 3;
  double simplex_scale = 0.2;
  std::size_t batch = 512;
  bool follow_up = true;  // estimate p with the final parameter
};

struct RunConfig {
  std::string method;
  std::string model;
  std::size_t n_sim = 0;
  std::uint64_t seed = 0;
  int workers = 0;
  std::filesystem::path output_dir;
  double step = 0.01;
  std::size_t histogram_bins = 50;
  std::size_t top_k = 10;
  double trajectory_dt = 0.1;

  pdmp::models::HeatedRoomParams heated_room;
  double ctmc_a = 0.1, ctmc_b = 1.0, ctmc_horizon = 2.0;
  int ctmc_components = 2;

  std::string scheme;  // neutral | heated_room | exact
  double alpha1 = 0.0, alpha2 = 0.0;

  CeSettings ce;

  std::vector<double> reproduce_is_sizes;
  std::vector<double> reproduce_mc_sizes;
  bool reproduce_run_ce = true;

  double h_dp = 1e-3;
  std::size_t validate_points = 10;
  std::size_t validate_m = 2000;
  std::size_t validate_nested_m = 20000;
  bool validate_heated_room = true;
};

/// Typed view; throws ConfigError on malformed or out-of-range values.
RunConfig resolve(const ConfigStore& store);

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "PDMPIS_OUTPUT_DIR";

}  // namespace pdmpis
