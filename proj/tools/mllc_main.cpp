// Command-line front end: one subcommand per pipeline command.
#include "mllc/errors.hpp"
#include "mllc/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Flags {
  std::string clusters = "1";
  std::string classes = "1";
  std::string grid_clusters = "1..8";
  std::string grid_classes = "1..6";
  std::string weights = "per_group";
  std::string icc_scale = "unit";
  std::string bic_n = "units";
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel latent class and random-intercept models"};
  app.set_version_flag("--version", std::string(mllc::kVersion));
  app.require_subcommand(1);

  mllc::RunConfig config;
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", config.seed, "Random seed")->capture_default_str();
    sub->add_option("--out", config.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--format", config.format, "text, json or both")
        ->check(CLI::IsMember({"text", "json", "both"}))
        ->capture_default_str();
  };
  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--input", config.input, "CSV data file")->required();
    sub->add_option("--schema", config.schema, "JSON schema file")->required();
    sub->add_option("--weights", flags.weights, "Weight normalization: none, per_group, global")
        ->capture_default_str();
    sub->add_option("--covariates", config.covariates, "Covariate names")->delimiter(',');
  };
  auto add_em = [&](CLI::App* sub) {
    sub->add_option("--starts", config.starts, "Random starts")->capture_default_str();
    sub->add_option("--tol", config.tol, "Relative log-likelihood tolerance")->capture_default_str();
    sub->add_option("--max-iter", config.max_iter, "EM iteration limit")->capture_default_str();
    sub->add_flag("--hard-assignment", config.hard_assignment, "Modal assignment in covariate profiles");
  };

  auto* lc = app.add_subcommand("fit-lc", "Single-level latent class model");
  add_data(lc);
  add_em(lc);
  add_common(lc);
  lc->add_option("--clusters", flags.clusters, "Number of clusters L")->required();

  auto* ml = app.add_subcommand("fit-mllc", "Multilevel latent class model");
  add_data(ml);
  add_em(ml);
  add_common(ml);
  ml->add_option("--clusters", flags.clusters, "Number of unit clusters L")->required();
  ml->add_option("--classes", flags.classes, "Number of group classes H")->required();

  auto* grid = app.add_subcommand("grid", "BIC grid over (L, H)");
  add_data(grid);
  add_em(grid);
  add_common(grid);
  grid->add_option("--clusters", flags.grid_clusters, "Cluster range A..B")->capture_default_str();
  grid->add_option("--classes", flags.grid_classes, "Class range A..B")->capture_default_str();
  grid->add_option("--bic-n", flags.bic_n, "BIC sample size: units or groups")->capture_default_str();

  for (const char* name : {"fit-relogit", "fit-reordinal"}) {
    auto* re = app.add_subcommand(name, std::string(name) == "fit-relogit" ? "Random-intercept logit"
                                                                          : "Random-intercept cumulative logit");
    add_data(re);
    add_common(re);
    re->add_option("--outcome", config.outcome, "Outcome item")->required();
    re->add_option("--quadrature", config.quadrature, "Gauss-Hermite nodes")->capture_default_str();
    re->add_option("--icc-scale", flags.icc_scale, "ICC residual variance: unit or logistic")->capture_default_str();
  }

  auto* sim = app.add_subcommand("simulate", "Write a synthetic dataset");
  add_common(sim);
  sim->add_option("--scenario", config.scenario, "reference-profiles or ri-logit")->capture_default_str();
  sim->add_option("--groups", config.groups, "Number of groups")->capture_default_str();
  sim->add_option("--group-size", config.group_size, "Units per group")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle-check", "Compare likelihoods against brute-force enumeration");
  add_common(oracle);
  oracle->add_option("--instances", config.instances, "Random tiny instances")->capture_default_str();

  auto* repro = app.add_subcommand("reproduce-profiles", "Simulate from the reference profiles and refit");
  add_common(repro);
  repro->add_option("--groups", config.groups, "Number of groups")->capture_default_str();
  repro->add_option("--group-size", config.group_size, "Units per group")->capture_default_str();
  repro->add_option("--starts", config.starts, "Random starts")->capture_default_str();
  repro->add_option("--tol", config.tol, "Relative log-likelihood tolerance")->capture_default_str();
  repro->add_option("--max-iter", config.max_iter, "EM iteration limit")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(mllc::ExitCode::input_error);
  }

  config.command = app.get_subcommands().front()->get_name();
  try {
    const bool is_grid = config.command == "grid";
    config.clusters = mllc::parse_range(is_grid ? flags.grid_clusters : flags.clusters);
    config.classes = mllc::parse_range(is_grid ? flags.grid_classes : flags.classes);
    config.weights = mllc::parse_weight_mode(flags.weights);
    if (flags.icc_scale == "unit") {
      config.icc_scale = mllc::IccScale::unit;
    } else if (flags.icc_scale == "logistic") {
      config.icc_scale = mllc::IccScale::logistic;
    } else {
      throw mllc::InputError("--icc-scale must be unit or logistic");
    }
    if (flags.bic_n == "units") {
      config.bic_n = mllc::BicSampleSize::level1_units;
    } else if (flags.bic_n == "groups") {
      config.bic_n = mllc::BicSampleSize::level2_groups;
    } else {
      throw mllc::InputError("--bic-n must be units or groups");
    }
  } catch (const mllc::InputError& e) {
    std::cerr << "{\"error\":{\"code\":2,\"kind\":\"input\",\"message\":\"" << e.what() << "\"}}\n";
    return static_cast<int>(mllc::ExitCode::input_error);
  }
  return static_cast<int>(mllc::run_pipeline(config, std::cout, std::cerr));
}
