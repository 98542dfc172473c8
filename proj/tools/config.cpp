#include "config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pdmpis {

namespace {

using pdmp::models::FailureExposure;
using pdmp::models::HeaterStatus;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

const KeySpec* find_key(const std::string& name) {
  for (const auto& k : config_schema()) {
    if (k.name() == name) return &k;
  }
  return nullptr;
}

double parse_real(const std::string& name, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(name + ": expected a finite number, got '" + text + "'");
  }
  return v;
}

long long parse_integer(const std::string& name, const std::string& text) {
  const double v = parse_real(name, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) {
    throw ConfigError(name + ": expected an integer, got '" + text + "'");
  }
  return static_cast<long long>(v);
}

std::size_t parse_count(const std::string& name, const std::string& text, std::size_t min = 0) {
  const long long v = parse_integer(name, text);
  if (v < static_cast<long long>(min)) {
    throw ConfigError(name + ": must be at least " + std::to_string(min));
  }
  return static_cast<std::size_t>(v);
}

bool parse_bool(const std::string& name, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(name + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& name, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(name, item));
  return out;
}

std::vector<std::vector<double>> parse_points(const std::string& name, const std::string& text) {
  std::vector<std::vector<double>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!trim(item).empty()) out.push_back(parse_list(name, item));
  }
  if (out.empty()) throw ConfigError(name + ": needs at least one point");
  return out;
}

HeaterStatus parse_status(const std::string& name, const std::string& text) {
  std::string t = trim(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
  if (t == "ON") return HeaterStatus::on;
  if (t == "OFF") return HeaterStatus::off;
  if (t == "F") return HeaterStatus::failed;
  throw ConfigError(name + ": heater status must be ON, OFF or F, got '" + text + "'");
}

void check_choice(const std::string& name, const std::string& value,
                  std::initializer_list<const char*> choices) {
  for (const char* c : choices) {
    if (value == c) return;
  }
  std::string list;
  for (const char* c : choices) list += (list.empty() ? "" : ", ") + std::string(c);
  throw ConfigError(name + ": '" + value + "' is not one of " + list);
}

}  // namespace

const std::vector<KeySpec>& config_schema() {
  using T = ValueType;
  static const std::vector<KeySpec> schema{
      {"run", "method", "mc", T::text, "mc, is, ce, validate, reproduce or simulate"},
      {"run", "model", "heated_room", T::text, "heated_room or tiny_ctmc"},
      {"run", "n_sim", "10000", T::integer, "replications per estimate"},
      {"run", "seed", "1", T::integer, "base seed"},
      {"run", "workers", "0", T::integer, "OpenMP threads, 0 for all cores"},
      {"run", "output_dir", "", T::text, "output directory (default from PDMPIS_OUTPUT_DIR)"},
      {"run", "step", "0.01", T::real, "RK4 step and hazard quadrature step"},
      {"run", "histogram_bins", "50", T::integer, "weight histogram bins"},
      {"run", "top_k", "10", T::integer, "largest weights kept in reports"},
      {"run", "trajectory_dt", "0.1", T::real, "sampling interval of trajectory.csv"},

      {"heated_room", "x_min", "0.5", T::real, "lower thermostat threshold"},
      {"heated_room", "x_max", "5.5", T::real, "upper thermostat threshold"},
      {"heated_room", "x_ext", "-1.5", T::real, "exterior temperature"},
      {"heated_room", "beta1", "0.1", T::real, "exchange rate with the exterior"},
      {"heated_room", "beta2", "5", T::real, "heating power"},
      {"heated_room", "gamma", "0.01", T::real, "failure-on-demand probability"},
      {"heated_room", "failure_base", "0.0021", T::real, "failure rate at x = 0"},
      {"heated_room", "failure_slope", "0.00015", T::real, "failure rate slope in x"},
      {"heated_room", "repair_rate", "0.2", T::real, "repair rate"},
      {"heated_room", "horizon", "100", T::real, "mission time"},
      {"heated_room", "x0", "7.5", T::real, "initial temperature"},
      {"heated_room", "initial", "OFF,OFF,OFF", T::text, "initial heater statuses"},
      {"heated_room", "failures_apply_to", "all", T::text, "all or active_only"},

      {"tiny_ctmc", "a", "0.1", T::real, "failure rate per component"},
      {"tiny_ctmc", "b", "1.0", T::real, "repair rate per component"},
      {"tiny_ctmc", "n_comp", "2", T::integer, "number of components"},
      {"tiny_ctmc", "horizon", "2", T::real, "mission time"},

      {"scheme", "type", "heated_room", T::text, "neutral, heated_room, mode_exponential or exact"},
      {"scheme", "alpha1", "0.915", T::real, "interior exponent (mode_exponential: alpha)"},
      {"scheme", "alpha2", "1.197", T::real, "lower-threshold kernel exponent"},

      {"ce", "alpha0", "0.5,0.5", T::real_list, "start points, ';'-separated"},
      {"ce", "n_ce", "100", T::integer, "failing trajectories per step"},
      {"ce", "eps", "0.1", T::real, "max-norm stopping threshold"},
      {"ce", "max_iters", "20", T::integer, "iteration cap"},
      {"ce", "max_draws_per_step", "1000000", T::integer, "draw cap per step"},
      {"ce", "restarts", "3", T::integer, "Nelder-Mead restarts"},
      {"ce", "simplex_scale", "0.2", T::real, "initial simplex size"},
      {"ce", "batch", "512", T::integer, "trajectories per parallel batch"},
      {"ce", "follow_up", "true", T::boolean, "estimate p with the final parameter"},

      {"reproduce", "is_sizes", "1000,10000,100000,1000000", T::real_list, "IS sample sizes"},
      {"reproduce", "mc_sizes", "1000000", T::real_list, "crude MC sample sizes"},
      {"reproduce", "run_ce", "true", T::boolean, "select alpha by CE first"},

      {"oracle", "h_dp", "0.001", T::real, "DP time step"},
      {"validate", "points", "10", T::integer, "random (mode, time) points"},
      {"validate", "m", "2000", T::integer, "trajectories per tower check"},
      {"validate", "nested_m", "20000", T::integer, "trajectories per nested estimate"},
      {"validate", "heated_room", "true", T::boolean, "include heated-room spot checks"},
  };
  return schema;
}

ConfigStore::ConfigStore() {
  for (const auto& k : config_schema()) values_[k.name()] = k.fallback;
}

void ConfigStore::set(const std::string& name, const std::string& value) {
  if (!find_key(name)) throw ConfigError("unknown configuration key '" + name + "'");
  values_[name] = value;
}

const std::string& ConfigStore::get(const std::string& name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw ConfigError("unknown configuration key '" + name + "'");
  return it->second;
}

void ConfigStore::load_ini(const std::string& text, const std::string& origin) {
  std::stringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    const std::string name = section + "." + trim(line.substr(0, eq));
    if (!find_key(name)) throw ConfigError(where + "unknown configuration key '" + name + "'");
    values_[name] = trim(line.substr(eq + 1));
  }
}

void ConfigStore::load_json(const std::string& text, const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(origin + ": expected an object of sections");
  for (const auto& [section, keys] : doc.items()) {
    if (!keys.is_object()) throw ConfigError(origin + ": section '" + section + "' is not an object");
    for (const auto& [key, v] : keys.items()) {
      const std::string name = section + "." + key;
      if (v.is_string()) {
        set(name, v.get<std::string>());
      } else if (v.is_boolean()) {
        set(name, v.get<bool>() ? "true" : "false");
      } else if (v.is_number()) {
        set(name, v.dump());
      } else {
        throw ConfigError(origin + ": unsupported value for '" + name + "'");
      }
    }
  }
}

void ConfigStore::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    load_json(buf.str(), path.string());
  } else {
    load_ini(buf.str(), path.string());
  }
}

std::string ConfigStore::to_json() const {
  nlohmann::ordered_json doc;
  for (const auto& k : config_schema()) {
    const std::string& v = values_.at(k.name());
    auto& slot = doc[k.section][k.key];
    switch (k.type) {
      case ValueType::integer: slot = parse_integer(k.name(), v); break;
      case ValueType::real: slot = parse_real(k.name(), v); break;
      case ValueType::boolean: slot = parse_bool(k.name(), v); break;
      default: slot = v; break;
    }
  }
  return doc.dump(2) + "\n";
}

RunConfig resolve(const ConfigStore& store) {
  RunConfig c;
  auto real = [&](const std::string& n) { return parse_real(n, store.get(n)); };
  auto count = [&](const std::string& n, std::size_t min = 0) {
    return parse_count(n, store.get(n), min);
  };

  c.method = trim(store.get("run.method"));
  check_choice("run.method", c.method, {"mc", "is", "ce", "validate", "reproduce", "simulate"});
  c.model = trim(store.get("run.model"));
  check_choice("run.model", c.model, {"heated_room", "tiny_ctmc"});
  c.n_sim = count("run.n_sim", 1);
  c.seed = static_cast<std::uint64_t>(count("run.seed"));
  c.workers = static_cast<int>(count("run.workers"));
  std::string out = trim(store.get("run.output_dir"));
  if (out.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    out = env && *env ? env : "pdmpis_out";
  }
  c.output_dir = out;
  c.step = real("run.step");
  if (!(c.step > 0.0)) throw ConfigError("run.step: must be positive");
  c.histogram_bins = count("run.histogram_bins", 1);
  c.top_k = count("run.top_k");
  c.trajectory_dt = real("run.trajectory_dt");
  if (!(c.trajectory_dt > 0.0)) throw ConfigError("run.trajectory_dt: must be positive");

  auto& h = c.heated_room;
  h.x_min = real("heated_room.x_min");
  h.x_max = real("heated_room.x_max");
  h.x_ext = real("heated_room.x_ext");
  h.beta1 = real("heated_room.beta1");
  h.beta2 = real("heated_room.beta2");
  h.gamma = real("heated_room.gamma");
  h.failure_base = real("heated_room.failure_base");
  h.failure_slope = real("heated_room.failure_slope");
  h.repair_rate = real("heated_room.repair_rate");
  h.horizon = real("heated_room.horizon");
  h.x0 = real("heated_room.x0");
  {
    std::stringstream ss(store.get("heated_room.initial"));
    std::string item;
    std::size_t i = 0;
    while (std::getline(ss, item, ',')) {
      if (i == 3) throw ConfigError("heated_room.initial: expected three statuses");
      h.initial[i++] = parse_status("heated_room.initial", item);
    }
    if (i != 3) throw ConfigError("heated_room.initial: expected three statuses");
  }
  const std::string exposure = trim(store.get("heated_room.failures_apply_to"));
  check_choice("heated_room.failures_apply_to", exposure, {"all", "active_only"});
  h.failures = exposure == "all" ? FailureExposure::all : FailureExposure::active_only;
  try {
    h.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("heated_room: ") + e.what());
  }

  c.ctmc_a = real("tiny_ctmc.a");
  c.ctmc_b = real("tiny_ctmc.b");
  c.ctmc_components = static_cast<int>(count("tiny_ctmc.n_comp", 1));
  c.ctmc_horizon = real("tiny_ctmc.horizon");
  if (c.ctmc_a < 0.0 || c.ctmc_b < 0.0 || c.ctmc_horizon < 0.0) {
    throw ConfigError("tiny_ctmc: rates and horizon must be >= 0");
  }

  c.reproduce_run_ce = parse_bool("reproduce.run_ce", store.get("reproduce.run_ce"));
  c.scheme = trim(store.get("scheme.type"));
  check_choice("scheme.type", c.scheme, {"neutral", "heated_room", "mode_exponential", "exact"});
  c.alpha1 = real("scheme.alpha1");
  c.alpha2 = real("scheme.alpha2");
  if (c.alpha1 < 0.0 || c.alpha2 < 0.0) throw ConfigError("scheme: alpha must be >= 0");
  const bool uses_scheme = c.method == "is" || c.method == "simulate" ||
                           (c.method == "reproduce" && !c.reproduce_run_ce);
  if (uses_scheme && c.scheme == "heated_room" && c.model != "heated_room") {
    throw ConfigError("scheme.type heated_room needs run.model heated_room");
  }
  if (uses_scheme && c.scheme != "heated_room" && c.scheme != "neutral" && c.model != "tiny_ctmc") {
    throw ConfigError("scheme.type " + c.scheme + " needs run.model tiny_ctmc");
  }

  c.ce.alpha0 = parse_points("ce.alpha0", store.get("ce.alpha0"));
  c.ce.n_ce = count("ce.n_ce", 1);
  c.ce.eps = real("ce.eps");
  if (!(c.ce.eps > 0.0)) throw ConfigError("ce.eps: must be positive");
  c.ce.max_iters = count("ce.max_iters", 1);
  c.ce.max_draws_per_step = count("ce.max_draws_per_step", 1);
  c.ce.restarts = static_cast<int>(count("ce.restarts"));
  c.ce.simplex_scale = real("ce.simplex_scale");
  c.ce.batch = count("ce.batch", 1);
  c.ce.follow_up = parse_bool("ce.follow_up", store.get("ce.follow_up"));
  const std::size_t dim = c.model == "heated_room" ? 2 : 1;
  const bool uses_ce = c.method == "ce" || (c.method == "reproduce" && c.reproduce_run_ce);
  for (const auto& a : uses_ce ? c.ce.alpha0 : std::vector<std::vector<double>>{}) {
    if (a.size() != dim) {
      throw ConfigError("ce.alpha0: each point needs " + std::to_string(dim) + " coordinates");
    }
  }

  c.reproduce_is_sizes = parse_list("reproduce.is_sizes", store.get("reproduce.is_sizes"));
  c.reproduce_mc_sizes = parse_list("reproduce.mc_sizes", store.get("reproduce.mc_sizes"));
  for (double n : c.reproduce_is_sizes) {
    if (!(n >= 1.0) || n != std::floor(n)) throw ConfigError("reproduce.is_sizes: counts >= 1");
  }
  for (double n : c.reproduce_mc_sizes) {
    if (!(n >= 1.0) || n != std::floor(n)) throw ConfigError("reproduce.mc_sizes: counts >= 1");
  }

  c.h_dp = real("oracle.h_dp");
  if (!(c.h_dp > 0.0)) throw ConfigError("oracle.h_dp: must be positive");
  c.validate_points = count("validate.points");
  c.validate_m = count("validate.m", 2);
  c.validate_nested_m = count("validate.nested_m", 2);
  c.validate_heated_room = parse_bool("validate.heated_room", store.get("validate.heated_room"));
  return c;
}

}  // namespace pdmpis
