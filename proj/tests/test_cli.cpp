#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "report_io.hpp"

namespace {

namespace fs = std::filesystem;
using pdmpis::ConfigError;
using pdmpis::ConfigStore;

const fs::path kExamples = PDMPIS_EXAMPLES_DIR;

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const fs::path dir = fs::temp_directory_path() / "pdmpis_test_cli" /
                       (std::string(info->name()) + "_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

nlohmann::json without_timing(nlohmann::json j) {
  if (j.is_object()) {
    j.erase("timing");
    for (auto& [k, v] : j.items()) v = without_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = without_timing(v);
  }
  return j;
}

int run_store(const ConfigStore& store, std::string* log = nullptr, std::string* err = nullptr) {
  std::ostringstream l, e;
  const int code = pdmpis::run_guarded(store, l, e);
  if (log) *log = l.str();
  if (err) *err = e.str();
  return code;
}

ConfigStore tiny(const std::string& method, const fs::path& out, std::size_t n = 20'000) {
  ConfigStore s;
  s.set("run.method", method);
  s.set("run.model", "tiny_ctmc");
  s.set("run.n_sim", std::to_string(n));
  s.set("run.workers", "1");
  s.set("run.output_dir", out.string());
  return s;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(PDMPIS_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Config, EveryKeyHasADefault) {
  ConfigStore s;
  for (const auto& k : pdmpis::config_schema()) EXPECT_EQ(s.get(k.name()), k.fallback);
  const auto cfg = pdmpis::resolve(s);
  EXPECT_EQ(cfg.method, "mc");
  EXPECT_EQ(cfg.model, "heated_room");
  EXPECT_EQ(cfg.n_sim, 10'000u);
  EXPECT_EQ(cfg.heated_room.failures, pdmp::models::FailureExposure::all);
  EXPECT_DOUBLE_EQ(cfg.alpha1, 0.915);
}

TEST(Config, UnknownKeysRejected) {
  ConfigStore s;
  EXPECT_THROW(s.set("run.bogus", "1"), ConfigError);
  EXPECT_THROW(s.load_ini("[run]\nbogus = 1\n"), ConfigError);
  EXPECT_THROW(s.load_json(R"({"run": {"bogus": 1}})"), ConfigError);
  try {
    s.load_ini("[run]\nseed = 2\n\n[scheme]\nalpha3 = 1\n", "x.ini");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.ini:5"), std::string::npos) << e.what();
  }
}

TEST(Config, MalformedTextRejected) {
  ConfigStore s;
  EXPECT_THROW(s.load_ini("seed = 1\n"), ConfigError);
  EXPECT_THROW(s.load_ini("[run\nseed = 1\n"), ConfigError);
  EXPECT_THROW(s.load_ini("[run]\nseed\n"), ConfigError);
  EXPECT_THROW(s.load_json("{\"run\": "), ConfigError);
  EXPECT_THROW(s.load_json("[1, 2]"), ConfigError);
  EXPECT_THROW(s.load_file(kExamples / "does_not_exist.ini"), ConfigError);
}

TEST(Config, BadValuesRejectedOnResolve) {
  auto bad = [](const std::string& key, const std::string& value) {
    ConfigStore s;
    s.set(key, value);
    return s;
  };
  EXPECT_THROW(pdmpis::resolve(bad("run.n_sim", "abc")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("run.n_sim", "0")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("run.n_sim", "2.5")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("run.method", "magic")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("run.step", "-0.1")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("heated_room.gamma", "1.5")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("heated_room.initial", "ON,OFF")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("heated_room.initial", "ON,OFF,BROKEN")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("heated_room.failures_apply_to", "some")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("scheme.alpha1", "-1")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("ce.follow_up", "maybe")), ConfigError);
  EXPECT_THROW(pdmpis::resolve(bad("reproduce.is_sizes", "1000,0.5")), ConfigError);

  ConfigStore mismatch;
  mismatch.set("run.method", "is");
  mismatch.set("run.model", "tiny_ctmc");
  EXPECT_THROW(pdmpis::resolve(mismatch), ConfigError);
  mismatch.set("run.method", "ce");
  EXPECT_THROW(pdmpis::resolve(mismatch), ConfigError);
  mismatch.set("ce.alpha0", "0.5");
  EXPECT_NO_THROW(pdmpis::resolve(mismatch));
}

TEST(Config, ExampleFilesResolve) {
  std::size_t seen = 0;
  for (const auto& entry : fs::directory_iterator(kExamples)) {
    ConfigStore s;
    ASSERT_NO_THROW(s.load_file(entry.path())) << entry.path();
    EXPECT_NO_THROW(pdmpis::resolve(s)) << entry.path();
    ++seen;
  }
  EXPECT_GE(seen, 6u);
}

TEST(Config, OutputDirFromEnvironment) {
  ::setenv(pdmpis::kOutputDirEnv, "/tmp/pdmpis_env_dir", 1);
  EXPECT_EQ(pdmpis::resolve(ConfigStore{}).output_dir, fs::path("/tmp/pdmpis_env_dir"));
  ::unsetenv(pdmpis::kOutputDirEnv);
  EXPECT_EQ(pdmpis::resolve(ConfigStore{}).output_dir, fs::path("pdmpis_out"));
}

TEST(Config, FloatsRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1.2915e-5, 6.02214076e23, -2.5e-300}) {
    EXPECT_EQ(std::stod(pdmpis::format_double(v)), v);
  }
}

TEST(Run, CrudeMonteCarloArtifacts) {
  const auto out = scratch("mc");
  ASSERT_EQ(run_store(tiny("mc", out)), pdmpis::kExitOk);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["command"], "mc");
  const auto& est = report["estimate"];
  EXPECT_EQ(est["n_sim"], 20'000);
  const double p = est["p_hat"];
  EXPECT_GT(p, 0.0);
  EXPECT_LE(double(est["ci"][0]), p);
  EXPECT_GE(double(est["ci"][1]), p);
  EXPECT_TRUE(fs::exists(out / "resolved_config.json"));

  auto rows = lines(out / "runs.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], pdmpis::kRunsHeader);
  ASSERT_EQ(run_store(tiny("mc", out)), pdmpis::kExitOk);
  rows = lines(out / "runs.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].substr(0, 9), "mc,20000,");
}

TEST(Run, ImportanceSamplingWritesHistogram) {
  const auto out = scratch("is");
  auto s = tiny("is", out);
  s.set("scheme.type", "mode_exponential");
  s.set("scheme.alpha1", "1.5");
  s.set("run.histogram_bins", "12");
  ASSERT_EQ(run_store(s), pdmpis::kExitOk);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["scheme"]["type"], "mode_exponential");
  EXPECT_EQ(report["scheme"]["params"][0], 1.5);
  const auto rows = lines(out / "weights.csv");
  ASSERT_EQ(rows.size(), 13u);
  EXPECT_EQ(rows[0], "bin_lo,bin_hi,count");
  std::size_t total = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) total += std::stoul(rows[i].substr(rows[i].rfind(',') + 1));
  EXPECT_EQ(total, std::size_t(report["estimate"]["n_hits"]));
}

TEST(Run, DeterministicReportForOneWorker) {
  const auto a = scratch("a");
  const auto b = scratch("b");
  ConfigStore s;
  s.load_file(kExamples / "heated_room_is.ini");
  s.set("run.n_sim", "3000");
  s.set("run.workers", "1");
  s.set("run.output_dir", a.string());
  ASSERT_EQ(run_store(s), pdmpis::kExitOk);
  s.set("run.output_dir", b.string());
  ASSERT_EQ(run_store(s), pdmpis::kExitOk);
  const auto ja = nlohmann::json::parse(slurp(a / "report.json"));
  const auto jb = nlohmann::json::parse(slurp(b / "report.json"));
  EXPECT_EQ(without_timing(ja).dump(2), without_timing(jb).dump(2));
  EXPECT_EQ(slurp(a / "weights.csv"), slurp(b / "weights.csv"));
}

TEST(Run, ResolvedConfigReproducesTheRun) {
  const auto first = scratch("first");
  const auto second = scratch("second");
  ConfigStore s;
  s.load_file(kExamples / "tiny_ctmc_exact.json");
  s.set("run.n_sim", "200");
  s.set("run.workers", "1");
  s.set("run.output_dir", first.string());
  ASSERT_EQ(run_store(s), pdmpis::kExitOk);

  ConfigStore again;
  again.load_file(first / "resolved_config.json");
  EXPECT_EQ(again.to_json(), slurp(first / "resolved_config.json"));
  EXPECT_EQ(again.get("run.n_sim"), "200");
  again.set("run.output_dir", second.string());
  ASSERT_EQ(run_store(again), pdmpis::kExitOk);
  EXPECT_EQ(without_timing(nlohmann::json::parse(slurp(first / "report.json"))),
            without_timing(nlohmann::json::parse(slurp(second / "report.json"))));
}

TEST(Run, SimulateWritesTrajectory) {
  const auto out = scratch("sim");
  ConfigStore s;
  s.load_file(kExamples / "heated_room_simulate.ini");
  s.set("run.output_dir", out.string());
  ASSERT_EQ(run_store(s), pdmpis::kExitOk);
  const auto rows = lines(out / "trajectory.csv");
  ASSERT_GT(rows.size(), 1000u);
  EXPECT_EQ(rows[0], "time,x,heater1,heater2,heater3,m_d");
  EXPECT_EQ(rows[1], "0,7.5,OFF,OFF,OFF,0");
  double prev = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double t = std::stod(rows[i].substr(0, rows[i].find(',')));
    ASSERT_GE(t, prev);
    ASSERT_LE(t, 100.0);
    prev = t;
  }
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["log_weight"], 0.0);
}

TEST(Run, CeTraceAndFollowUp) {
  const auto out = scratch("ce");
  auto s = tiny("ce", out, 5000);
  s.set("ce.alpha0", "0.5; 1.5");
  ASSERT_EQ(run_store(s), pdmpis::kExitOk);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["family"], "mode_exponential");
  EXPECT_EQ(report["traces"].size(), 2u);
  EXPECT_EQ(report["estimate"]["n_sim"], 5000);
  const auto rows = lines(out / "ce_trace.csv");
  EXPECT_EQ(rows[0], "iter,alpha1,N,n_hits,objective");
  EXPECT_TRUE(fs::exists(out / "ce_trace_1.csv"));
}

TEST(Run, ReproduceTable) {
  const auto out = scratch("rep");
  auto s = tiny("reproduce", out);
  s.set("ce.alpha0", "1.0");
  s.set("reproduce.is_sizes", "1000,4000");
  s.set("reproduce.mc_sizes", "20000");
  std::string log;
  ASSERT_EQ(run_store(s, &log), pdmpis::kExitOk);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  ASSERT_EQ(report["rows"].size(), 3u);
  EXPECT_EQ(report["rows"][2]["method"], "mc");
  EXPECT_TRUE(report.contains("timing"));
  EXPECT_NE(log.find("N_sim"), std::string::npos);
  EXPECT_NE(log.find("95% CI"), std::string::npos);
  EXPECT_EQ(lines(out / "runs.csv").size(), 4u);
  EXPECT_TRUE(fs::exists(out / "weights_is_1000.csv"));
}

TEST(Run, ValidatePassesOnTinyChain) {
  const auto out = scratch("val");
  ConfigStore s;
  s.load_file(kExamples / "tiny_ctmc_validate.ini");
  s.set("run.output_dir", out.string());
  std::string log;
  ASSERT_EQ(run_store(s, &log), pdmpis::kExitOk) << log;
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_TRUE(report["passed"].get<bool>());
  EXPECT_NEAR(double(report["p_dp"]), 0.0197071374, 1e-9);
  EXPECT_TRUE(fs::exists(out / "ustar.csv"));
}

TEST(Run, ConfigErrorExitCode) {
  ConfigStore s;
  s.set("run.n_sim", "-4");
  s.set("run.output_dir", scratch("cfg").string());
  std::string err;
  EXPECT_EQ(run_store(s, nullptr, &err), pdmpis::kExitConfig);
  EXPECT_NE(err.find("run.n_sim"), std::string::npos);
}

TEST(Run, RuntimeErrorExitCode) {
  const auto out = scratch("rt");
  auto s = tiny("ce", out);
  s.set("tiny_ctmc.a", "0.001");
  s.set("tiny_ctmc.n_comp", "3");
  s.set("ce.alpha0", "0");
  s.set("ce.max_draws_per_step", "1000");
  std::string err;
  EXPECT_EQ(run_store(s, nullptr, &err), pdmpis::kExitRuntime);
  EXPECT_NE(err.find("under-biases"), std::string::npos) << err;
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_TRUE(report.contains("error"));
}

TEST(Binary, ExitCodes) {
  const auto out = scratch("bin");
  EXPECT_EQ(run_binary("--help"), 0);
  EXPECT_EQ(run_binary("--run.bogus=1"), pdmpis::kExitConfig);
  EXPECT_EQ(run_binary((kExamples / "missing.ini").string()), pdmpis::kExitConfig);
  EXPECT_EQ(run_binary("--model=tiny_ctmc --n_sim=nope --output_dir=" + out.string()),
            pdmpis::kExitConfig);
  EXPECT_EQ(run_binary((kExamples / "tiny_ctmc_mc.ini").string() +
                       " --n_sim=2000 --workers=1 --output_dir=" + out.string()),
            pdmpis::kExitOk);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["estimate"]["n_sim"], 2000);
  EXPECT_EQ(report["model"], "tiny_ctmc");
}

}  // namespace
