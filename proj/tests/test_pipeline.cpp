#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mllc/csv_io.hpp"
#include "mllc/pipeline.hpp"
#include "mllc/synthgen.hpp"

#include <json.hpp>

#include <filesystem>
#include <sstream>

using namespace mllc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mllc_pipeline_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExitCode run(const RunConfig& c, std::string* log_out = nullptr, std::string* err_out = nullptr) {
  std::ostringstream log, err;
  const auto code = run_pipeline(c, log, err);
  if (log_out) *log_out = log.str();
  if (err_out) *err_out = err.str();
  return code;
}

RunConfig simulated(const fs::path& dir, const std::string& scenario, int groups, int size) {
  RunConfig c;
  c.command = "simulate";
  c.scenario = scenario;
  c.groups = groups;
  c.group_size = size;
  c.seed = 7;
  c.out_dir = (dir / "sim").string();
  REQUIRE(run(c) == ExitCode::ok);
  RunConfig fit;
  fit.input = (dir / "sim" / "data.csv").string();
  fit.schema = (dir / "sim" / "schema.json").string();
  return fit;
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(read_file(p.string())); }

}  // namespace

TEST_CASE("range parsing") {
  CHECK(parse_range("3").lo == 3);
  CHECK(parse_range("1..4").hi == 4);
  CHECK_THROWS(parse_range("4..1"));
  CHECK_THROWS(parse_range("0"));
  CHECK_THROWS(parse_range("a..b"));
  CHECK_THROWS(parse_range("2..3x"));
}

TEST_CASE("fit-mllc on simulated profile data is reproducible byte for byte") {
  const auto dir = scratch("mllc");
  auto c = simulated(dir, "reference-profiles", 28, 60);
  c.command = "fit-mllc";
  c.clusters = {6, 6};
  c.classes = {4, 4};
  c.starts = 2;
  c.seed = 7;
  c.max_iter = 100;
  c.out_dir = (dir / "a").string();
  const auto first = run(c);
  CHECK((first == ExitCode::ok || first == ExitCode::not_converged));
  c.out_dir = (dir / "b").string();
  CHECK(run(c) == first);
  for (const auto* name : {"fit.json", "manifest.json"})
    CHECK(read_file((dir / "a" / name).string()) == read_file((dir / "b" / name).string()));
  CHECK(fs::exists(dir / "a" / "report.txt"));
  CHECK(fs::exists(dir / "a" / "run.log"));

  const auto fit = load_json(dir / "a" / "fit.json");
  CHECK(fit["profile"]["cluster_size_percent"].size() == 6);
  CHECK(fit["profile"]["class_cluster_percent"].size() == 4);
  for (const auto& row : fit["fit"]["params"]["cluster_given_class"]) {
    double sum = 0.0;
    for (const auto& v : row) sum += v.get<double>();
    CHECK(std::abs(sum - 1.0) < 1e-10);
  }
  const auto report = read_file((dir / "a" / "report.txt").string());
  CHECK(report.find("Cluster 6") != std::string::npos);
  CHECK(report.find("Class 4") != std::string::npos);
  const auto manifest = load_json(dir / "a" / "manifest.json");
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["config"]["command"] == "fit-mllc");
}

TEST_CASE("fit-mllc with a covariate driving cluster membership") {
  const auto dir = scratch("covariate");
  MllcScenario sc;
  sc.params = reference_profile_params();
  sc.covariates = {{"sector", {"industry", "retail", "services"}, Eigen::Vector3d(0.3, 0.3, 0.4)}};
  sc.groups = 8;
  sc.group_size_min = sc.group_size_max = 60;
  sc.seed = 4;
  const auto sim = simulate_mllc(sc);
  std::ostringstream csv;
  write_csv(sim.data, csv);
  write_file_atomic((dir / "d.csv").string(), csv.str());
  write_file_atomic((dir / "s.json").string(), schema_to_json(sim.data));
  RunConfig c;
  c.command = "fit-mllc";
  c.input = (dir / "d.csv").string();
  c.schema = (dir / "s.json").string();
  c.covariates = {"sector"};
  c.clusters = {3, 3};
  c.classes = {2, 2};
  c.starts = 2;
  c.out_dir = (dir / "out").string();
  const auto code = run(c);
  CHECK((code == ExitCode::ok || code == ExitCode::not_converged));
  const auto fit = load_json(dir / "out" / "fit.json");
  CHECK(fit["profile"]["covariates"].size() == 1);
  CHECK(read_file((dir / "out" / "report.txt").string()).find("industry") != std::string::npos);
}

TEST_CASE("grid writes a twelve-row comparison") {
  const auto dir = scratch("grid");
  auto c = simulated(dir, "reference-profiles", 10, 40);
  c.command = "grid";
  c.clusters = {1, 4};
  c.classes = {1, 3};
  c.starts = 1;
  c.max_iter = 50;
  c.out_dir = (dir / "out").string();
  CHECK(run(c) == ExitCode::ok);
  const auto grid = load_json(dir / "out" / "grid.json");
  CHECK(grid["rows"].size() == 12);
  const auto text = read_file((dir / "out" / "grid.txt").string());
  int lines = 0;
  for (const char ch : text) lines += ch == '\n';
  CHECK(lines >= 13);
}

TEST_CASE("fit-lc and output formats") {
  const auto dir = scratch("lc");
  auto c = simulated(dir, "reference-profiles", 4, 50);
  c.command = "fit-lc";
  c.clusters = {2, 2};
  c.starts = 2;
  c.format = "json";
  c.out_dir = (dir / "out").string();
  CHECK(run(c) == ExitCode::ok);
  CHECK(fs::exists(dir / "out" / "fit.json"));
  CHECK_FALSE(fs::exists(dir / "out" / "report.txt"));
  c.format = "text";
  c.out_dir = (dir / "txt").string();
  CHECK(run(c) == ExitCode::ok);
  CHECK_FALSE(fs::exists(dir / "txt" / "fit.json"));
  CHECK(fs::exists(dir / "txt" / "report.txt"));
}

TEST_CASE("random-intercept commands") {
  const auto dir = scratch("ri");
  auto c = simulated(dir, "ri-logit", 10, 60);
  c.command = "fit-relogit";
  c.outcome = "y";
  c.covariates = {"x1"};
  c.out_dir = (dir / "logit").string();
  CHECK(run(c) == ExitCode::ok);
  const auto reg = load_json(dir / "logit" / "regression.json");
  CHECK(reg["converged"] == true);
  CHECK(read_file((dir / "logit" / "report.txt").string()).find("ICC") != std::string::npos);

  // An ordinal outcome written through the CSV writer.
  RiScenario sc;
  sc.beta = Eigen::VectorXd::Constant(1, 0.5);
  sc.thresholds = Eigen::Vector2d(-0.5, 0.8);
  sc.var_u = 0.2;
  sc.groups = 10;
  sc.group_size = 50;
  sc.seed = 3;
  sc.categorical = {{"sector", {"a", "b", "c"}, Eigen::Vector3d(0.3, 0.3, 0.4)}};
  sc.beta.conservativeResize(3);
  sc.beta.tail(2) << 0.3, -0.4;
  const auto sim = simulate_ri_logit(sc);
  std::ostringstream csv;
  write_csv(sim.data, csv);
  write_file_atomic((dir / "ord.csv").string(), csv.str());
  write_file_atomic((dir / "ord.json").string(), schema_to_json(sim.data));
  c.command = "fit-reordinal";
  c.input = (dir / "ord.csv").string();
  c.schema = (dir / "ord.json").string();
  c.covariates = {"x1", "sector"};
  c.out_dir = (dir / "ord").string();
  CHECK(run(c) == ExitCode::ok);
  const auto ord = load_json(dir / "ord" / "regression.json");
  CHECK(ord["thresholds"].size() == 2);
}

TEST_CASE("oracle-check prints the agreement count") {
  const auto dir = scratch("oracle");
  RunConfig c;
  c.command = "oracle-check";
  c.seed = 1;
  c.out_dir = dir.string();
  std::string log;
  CHECK(run(c, &log) == ExitCode::ok);
  CHECK(log.find("100/100") != std::string::npos);
}

TEST_CASE("errors become exit codes and error.json") {
  const auto dir = scratch("errors");
  RunConfig c;
  c.command = "fit-mllc";
  c.input = (dir / "missing.csv").string();
  c.schema = (dir / "missing.json").string();
  c.out_dir = dir.string();
  std::string err;
  CHECK(run(c, nullptr, &err) == ExitCode::input_error);
  CHECK(nlohmann::json::parse(err)["error"]["code"] == 2);
  CHECK(fs::exists(dir / "error.json"));

  write_file_atomic((dir / "s.json").string(), R"({"items": [{"name": "a", "levels": 2}]})");
  write_file_atomic((dir / "d.csv").string(), "group_id,unit_id,weight,a\nG,1,1,1\nG,2,1,5\n");
  c.input = (dir / "d.csv").string();
  c.schema = (dir / "s.json").string();
  CHECK(run(c, nullptr, &err) == ExitCode::input_error);
  CHECK(err.find("line 3") != std::string::npos);

  c.command = "bogus";
  CHECK(run(c) == ExitCode::input_error);
  c.command = "grid";
  c.starts = 0;
  CHECK(run(c) == ExitCode::input_error);
}

TEST_CASE("an iteration cap reports non-convergence but still writes artifacts") {
  const auto dir = scratch("cap");
  auto c = simulated(dir, "reference-profiles", 6, 50);
  c.command = "fit-mllc";
  c.clusters = {3, 3};
  c.classes = {2, 2};
  c.starts = 1;
  c.max_iter = 2;
  c.out_dir = (dir / "out").string();
  CHECK(run(c) == ExitCode::not_converged);
  CHECK(fs::exists(dir / "out" / "fit.json"));
  CHECK(fs::exists(dir / "out" / "manifest.json"));
}
