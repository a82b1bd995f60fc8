#include "mllc/pipeline.hpp"

#include "mllc/coding.hpp"
#include "mllc/csv_io.hpp"
#include "mllc/errors.hpp"
#include "mllc/labels.hpp"
#include "mllc/profile.hpp"
#include "mllc/serialize.hpp"
#include "mllc/synthgen.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mllc {

namespace fs = std::filesystem;

IntRange parse_range(const std::string& text) {
  const auto dots = text.find("..");
  IntRange r;
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      r.lo = r.hi = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
    } else {
      const auto a = text.substr(0, dots);
      const auto b = text.substr(dots + 2);
      r.lo = std::stoi(a, &used);
      if (used != a.size()) throw std::invalid_argument(text);
      r.hi = std::stoi(b, &used);
      if (used != b.size()) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw InputError("invalid range '" + text + "' (expected A or A..B)");
  }
  if (r.lo < 1 || r.hi < r.lo) throw InputError("invalid range '" + text + "'");
  return r;
}

namespace {

const std::vector<std::string> kCommands = {"fit-lc", "fit-mllc", "fit-relogit", "fit-reordinal",
                                            "grid",   "simulate", "oracle-check", "reproduce-profiles"};

bool needs_input(const std::string& command) {
  return command == "fit-lc" || command == "fit-mllc" || command == "fit-relogit" || command == "fit-reordinal" ||
         command == "grid";
}

Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["schema"] = c.schema;
  j["clusters"] = std::to_string(c.clusters.lo) + ".." + std::to_string(c.clusters.hi);
  j["classes"] = std::to_string(c.classes.lo) + ".." + std::to_string(c.classes.hi);
  j["covariates"] = c.covariates;
  j["outcome"] = c.outcome;
  j["starts"] = c.starts;
  j["seed"] = c.seed;
  j["quadrature"] = c.quadrature;
  j["weights"] = to_string(c.weights);
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["format"] = c.format;
  j["hard_assignment"] = c.hard_assignment;
  j["icc_residual_scale"] = c.icc_scale == IccScale::unit ? "unit" : "logistic";
  j["bic_n"] = to_string(c.bic_n);
  if (c.command == "simulate" || c.command == "reproduce-profiles") {
    j["scenario"] = c.scenario;
    j["groups"] = c.groups;
    j["group_size"] = c.group_size;
  }
  if (c.command == "oracle-check") j["instances"] = c.instances;
  return j;
}

class Artifacts {
 public:
  Artifacts(const RunConfig& config, std::ostream& log) : config_(config), log_(log) {}

  void json(const std::string& name, const Json& doc) {
    if (config_.format == "text") return;
    write(name + ".json", doc.dump(2) + "\n");
  }
  void text(const std::string& name, const std::string& body) {
    if (config_.format == "json") return;
    write(name + ".txt", body);
  }
  void raw(const std::string& file, const std::string& body) { write(file, body); }

 private:
  void write(const std::string& file, const std::string& body) {
    const auto path = (fs::path(config_.out_dir) / file).string();
    write_file_atomic(path, body);
    log_ << "wrote " << path << '\n';
  }
  const RunConfig& config_;
  std::ostream& log_;
};

TwoLevelDataset load(const RunConfig& c, std::ostream& log) {
  auto loaded = load_csv(c.input, c.schema);
  const auto& s = loaded.summary;
  log << "loaded " << s.rows << " rows x " << s.columns << " columns: J = " << s.groups << " groups, N = " << s.units
      << " units\n";
  log << "missing responses per item:";
  for (std::size_t k = 0; k < s.missing.per_item.size(); ++k)
    log << ' ' << loaded.data.schema.items[k].name << '=' << s.missing.per_item[k];
  log << " (" << s.missing.units_with_missing << " units with any missing)\n";
  return normalize_weights(std::move(loaded.data), c.weights);
}

EmConfig em_config(const RunConfig& c) {
  EmConfig em;
  em.seed = c.seed;
  em.max_iter = c.max_iter;
  em.rel_tol = c.tol;
  return em;
}

/// Wraps a single-level fit as a one-class multilevel fit for reporting.
MllcFit as_multilevel(const LcFit& lc, int groups) {
  MllcFit fit;
  fit.params.class_weights = Eigen::VectorXd::Ones(1);
  fit.params.cluster_given_class = lc.params.cluster_weights.transpose();
  fit.params.item_probs = lc.params.item_probs;
  fit.posteriors.group_class = Eigen::MatrixXd::Ones(groups, 1);
  fit.posteriors.unit_cluster = lc.posteriors;
  fit.posteriors.unit_cluster_given_class = lc.posteriors;
  fit.loglik = lc.loglik;
  fit.loglik_trace = lc.loglik_trace;
  fit.n_iter = lc.n_iter;
  fit.converged = lc.converged;
  fit.n_params = lc.n_params;
  fit.bic = lc.bic;
  return fit;
}

ExitCode run_fit_lc(const RunConfig& c, Artifacts& out, std::ostream& log) {
  const auto data = load(c, log);
  const int clusters = c.clusters.lo;
  std::optional<LcFit> best;
  std::vector<double> start_ll;
  for (int s = 0; s < c.starts; ++s) {
    EmConfig em = em_config(c);
    em.seed = start_seed(c.seed, s);
    auto fit = lc_em_fit(data, clusters, em);
    start_ll.push_back(fit.loglik);
    if (!best || fit.loglik > best->loglik) best = std::move(fit);
  }
  const auto lc = canonicalize_labels(*best);
  const auto fit = as_multilevel(lc, data.num_groups());
  ProfileOptions opt;
  opt.hard_assignment = c.hard_assignment;
  const auto report = profile_report(fit, data, opt);
  Json j;
  j["model"] = "latent class";
  j["fit"] = to_json(fit);
  j["start_logliks"] = start_ll;
  j["profile"] = to_json(report);
  out.json("fit", j);
  std::ostringstream txt;
  txt << "Latent class model, L = " << clusters << "\nlogL = " << std::fixed << std::setprecision(4) << fit.loglik
      << "  n_params = " << fit.n_params << "  BIC = " << fit.bic << "\n\n"
      << format_profile_text(report);
  out.text("report", txt.str());
  log << "L = " << clusters << ": logL = " << fit.loglik << ", BIC = " << fit.bic << (fit.converged ? "" : " (not converged)") << '\n';
  return fit.converged ? ExitCode::ok : ExitCode::not_converged;
}

void emit_mllc(const MllcFit& fit, const TwoLevelDataset& data, const RunConfig& c, Artifacts& out,
               const std::string& name, const Json& extra) {
  ProfileOptions opt;
  opt.hard_assignment = c.hard_assignment;
  const auto report = profile_report(fit, data, opt);
  const auto groups = classify_groups(fit, data);
  Json j = extra;
  j["model"] = "multilevel latent class";
  j["fit"] = to_json(fit);
  j["profile"] = to_json(report);
  j["group_assignment"] = to_json(groups);
  out.json(name, j);
  std::ostringstream txt;
  txt << "Multilevel latent class model, L = " << fit.params.num_clusters() << " clusters, H = " << fit.params.num_classes()
      << " classes\nlogL = " << std::fixed << std::setprecision(4) << fit.loglik << "  n_params = " << fit.n_params
      << "  BIC = " << fit.bic << (fit.converged ? "" : "  (not converged)") << "\n\n"
      << format_profile_text(report, groups);
  out.text(name == "fit" ? "report" : name + "_report", txt.str());
}

ExitCode run_fit_mllc(const RunConfig& c, Artifacts& out, std::ostream& log) {
  const auto data = load(c, log);
  std::optional<CodedDesign> design;
  if (!c.covariates.empty()) design = code_covariates(data, c.covariates);
  const auto ms = multi_start_fit(data, c.clusters.lo, c.classes.lo, c.starts, c.seed, design ? &*design : nullptr, em_config(c));
  const auto fit = canonicalize_labels(ms.best);
  Json extra;
  extra["best_start"] = ms.best_start;
  extra["start_logliks"] = ms.start_logliks;
  extra["covariates"] = c.covariates;
  emit_mllc(fit, data, c, out, "fit", extra);
  log << "L = " << c.clusters.lo << ", H = " << c.classes.lo << ": logL = " << fit.loglik << ", BIC = " << fit.bic
      << " (best of " << c.starts << " starts)\n";
  return fit.converged ? ExitCode::ok : ExitCode::not_converged;
}

ExitCode run_grid(const RunConfig& c, Artifacts& out, std::ostream& log) {
  const auto data = load(c, log);
  std::optional<CodedDesign> design;
  if (!c.covariates.empty()) design = code_covariates(data, c.covariates);
  GridSpec grid;
  grid.clusters_min = c.clusters.lo;
  grid.clusters_max = c.clusters.hi;
  grid.classes_min = c.classes.lo;
  grid.classes_max = c.classes.hi;
  grid.starts = c.starts;
  grid.seed = c.seed;
  grid.bic_n = c.bic_n;
  grid.em = em_config(c);
  const auto result = grid_search(data, grid, design ? &*design : nullptr);
  out.json("grid", to_json(result));
  out.text("grid", format_grid_text(result));
  const auto fit = canonicalize_labels(result.selected_fit);
  emit_mllc(fit, data, c, out, "selected", Json::object());
  const auto& sel = result.rows[static_cast<std::size_t>(result.selected)];
  log << format_grid_text(result);
  log << "selected L = " << sel.clusters << ", H = " << sel.classes << '\n';
  return ExitCode::ok;
}

ExitCode run_regression(const RunConfig& c, Artifacts& out, std::ostream& log, OutcomeKind kind) {
  const auto data = load(c, log);
  RegressionSpec spec;
  spec.outcome = c.outcome;
  spec.kind = kind;
  spec.covariates = c.covariates;
  spec.quadrature_nodes = c.quadrature;
  spec.icc_scale = c.icc_scale;
  const auto fit = kind == OutcomeKind::binary ? fit_ri_logit(data, spec) : fit_ri_ordinal(data, spec);
  out.json("regression", to_json(fit));
  std::ostringstream txt;
  txt << (kind == OutcomeKind::binary ? "Random-intercept logit" : "Random-intercept cumulative logit") << ", outcome '"
      << fit.outcome << "', Q = " << fit.quadrature_nodes << "\nlogL = " << std::fixed << std::setprecision(4)
      << fit.loglik << (fit.converged ? "" : "  (not converged)") << (fit.separation_warning ? "  (separation warning)" : "")
      << "\n\n"
      << format_regression_table(std::span<const RegressionFit>(&fit, 1));
  out.text("report", txt.str());
  log << "logL = " << fit.loglik << ", Var(u) = " << fit.var_u.value << ", ICC = " << fit.icc << '\n';
  return fit.converged ? ExitCode::ok : ExitCode::not_converged;
}

MllcScenario reference_scenario(const RunConfig& c) {
  MllcScenario sc;
  sc.params = reference_profile_params();
  sc.groups = c.groups;
  sc.group_size_min = sc.group_size_max = c.group_size;
  sc.seed = c.seed;
  sc.item_names = reference_profile_items();
  return sc;
}

ExitCode run_simulate(const RunConfig& c, Artifacts& out, std::ostream& log) {
  TwoLevelDataset data;
  std::ostringstream truth;
  if (c.scenario == "reference-profiles") {
    const auto sim = simulate_mllc(reference_scenario(c));
    data = sim.data;
    truth << "group_id,unit_id,class,cluster\n";
    std::size_t row = 0;
    for (std::size_t j = 0; j < data.groups.size(); ++j)
      for (const auto& u : data.groups[j].units)
        truth << data.groups[j].id << ',' << u.id << ',' << sim.group_class[j] + 1 << ',' << sim.unit_cluster[row++] + 1 << '\n';
  } else if (c.scenario == "ri-logit") {
    RiScenario sc;
    sc.beta = Eigen::Vector2d(-0.5, 1.0);
    sc.var_u = 0.25;
    sc.groups = c.groups;
    sc.group_size = c.group_size;
    sc.seed = c.seed;
    const auto sim = simulate_ri_logit(sc);
    data = sim.data;
    truth << "group_id,random_intercept\n" << std::setprecision(17);
    for (std::size_t j = 0; j < data.groups.size(); ++j)
      truth << data.groups[j].id << ',' << sim.random_intercepts(static_cast<Eigen::Index>(j)) << '\n';
  } else {
    throw InputError("unknown scenario '" + c.scenario + "' (expected reference-profiles or ri-logit)");
  }
  std::ostringstream csv;
  write_csv(data, csv);
  out.raw("data.csv", csv.str());
  out.raw("schema.json", schema_to_json(data));
  out.raw("truth.csv", truth.str());
  log << "simulated " << data.num_units() << " units in " << data.num_groups() << " groups\n";
  return ExitCode::ok;
}

ExitCode run_oracle_check(const RunConfig& c, Artifacts& out, std::ostream& log) {
  const auto sweep = oracle_sweep(c.seed, c.instances);
  Json j;
  j["instances"] = sweep.instances;
  j["agreements"] = sweep.agreements;
  j["max_abs_diff"] = sweep.max_abs_diff;
  j["tolerance"] = 1e-10;
  out.json("oracle", j);
  log << "oracle-check: " << sweep.agreements << "/" << sweep.instances << " tiny-instance agreements (max |diff| = "
      << std::scientific << std::setprecision(2) << sweep.max_abs_diff << ")\n" << std::defaultfloat;
  return sweep.agreements == sweep.instances ? ExitCode::ok : ExitCode::numerical_failure;
}

ExitCode run_reproduce(const RunConfig& c, Artifacts& out, std::ostream& log) {
  const auto truth = reference_profile_params();
  const auto sim = simulate_mllc(reference_scenario(c));
  log << "simulated " << sim.data.num_units() << " units in " << sim.data.num_groups() << " groups\n";
  const auto ms = multi_start_fit(sim.data, 6, 4, c.starts, c.seed, nullptr, em_config(c));
  auto fit = canonicalize_labels(ms.best);
  const auto order = align_clusters(fit.params.item_probs, truth.item_probs);
  std::vector<int> identity(static_cast<std::size_t>(fit.params.num_classes()));
  std::iota(identity.begin(), identity.end(), 0);
  const auto aligned = permute_labels(fit, order, identity);

  double item_dev = 0.0;
  for (std::size_t k = 0; k < truth.item_probs.size(); ++k)
    item_dev = std::max(item_dev, (aligned.params.item_probs[k] - truth.item_probs[k]).cwiseAbs().maxCoeff());
  const FlatData flat = flatten(sim.data);
  Eigen::VectorXd realized = Eigen::VectorXd::Zero(6);
  for (std::size_t i = 0; i < sim.unit_cluster.size(); ++i) realized(sim.unit_cluster[i]) += flat.weights(static_cast<Eigen::Index>(i));
  realized /= realized.sum();
  const Eigen::VectorXd fitted = (aligned.posteriors.unit_cluster.transpose() * flat.weights) / flat.weights.sum();
  const double size_dev = (fitted - realized).cwiseAbs().maxCoeff();

  Json extra;
  extra["best_start"] = ms.best_start;
  extra["start_logliks"] = ms.start_logliks;
  extra["max_abs_item_prob_deviation"] = item_dev;
  extra["max_abs_cluster_size_deviation"] = size_dev;
  extra["realized_cluster_sizes"] = to_json(realized);
  emit_mllc(fit, sim.data, c, out, "fit", extra);
  log << "max |item probability - generating value| = " << std::fixed << std::setprecision(4) << item_dev << '\n'
      << "max |cluster size - realized size| = " << size_dev << '\n' << std::defaultfloat;
  return fit.converged ? ExitCode::ok : ExitCode::not_converged;
}

void report_error(const RunConfig& c, std::ostream& err, ExitCode code, const std::string& kind, const std::string& message) {
  Json j;
  j["error"] = {{"code", static_cast<int>(code)}, {"kind", kind}, {"message", message}};
  err << j.dump() << '\n';
  try {
    write_file_atomic((fs::path(c.out_dir) / "error.json").string(), j.dump(2) + "\n");
  } catch (...) {
  }
}

}  // namespace

void RunConfig::validate() const {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
    throw InputError("unknown command '" + command + "'");
  if (needs_input(command)) {
    if (input.empty() || schema.empty()) throw InputError(command + " requires --input and --schema");
    if (!fs::exists(input)) throw InputError("input file '" + input + "' does not exist");
    if (!fs::exists(schema)) throw InputError("schema file '" + schema + "' does not exist");
  }
  if ((command == "fit-lc" || command == "fit-mllc") && (clusters.lo != clusters.hi || classes.lo != classes.hi))
    throw InputError(command + " takes a single --clusters/--classes value; use grid for ranges");
  if (command == "fit-lc" && classes.lo != 1) throw InputError("fit-lc has no classes; use fit-mllc");
  if ((command == "fit-relogit" || command == "fit-reordinal") && outcome.empty())
    throw InputError(command + " requires --outcome");
  if (starts < 1) throw InputError("--starts must be >= 1");
  if (quadrature < 5) throw InputError("--quadrature must be >= 5");
  if (!(tol > 0.0)) throw InputError("--tol must be positive");
  if (max_iter < 1) throw InputError("--max-iter must be >= 1");
  if (format != "text" && format != "json" && format != "both") throw InputError("--format must be text, json or both");
  if (groups < 1 || group_size < 1) throw InputError("--groups and --group-size must be >= 1");
  if (instances < 1) throw InputError("--instances must be >= 1");
}

ExitCode run_pipeline(const RunConfig& c, std::ostream& log, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  ExitCode code = ExitCode::ok;
  try {
    c.validate();
    Artifacts out(c, log);
    if (c.command == "fit-lc") {
      code = run_fit_lc(c, out, log);
    } else if (c.command == "fit-mllc") {
      code = run_fit_mllc(c, out, log);
    } else if (c.command == "grid") {
      code = run_grid(c, out, log);
    } else if (c.command == "fit-relogit") {
      code = run_regression(c, out, log, OutcomeKind::binary);
    } else if (c.command == "fit-reordinal") {
      code = run_regression(c, out, log, OutcomeKind::ordinal);
    } else if (c.command == "simulate") {
      code = run_simulate(c, out, log);
    } else if (c.command == "oracle-check") {
      code = run_oracle_check(c, out, log);
    } else {
      code = run_reproduce(c, out, log);
    }
    Json manifest;
    manifest["tool"] = "mllc";
    manifest["version"] = kVersion;
    manifest["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION);
    manifest["seed"] = c.seed;
    manifest["exit_code"] = static_cast<int>(code);
    manifest["config"] = config_json(c);
    write_file_atomic((fs::path(c.out_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::ostringstream timing;
    timing << "command " << c.command << "\nwall_time_seconds " << std::fixed << std::setprecision(3) << seconds << '\n';
    write_file_atomic((fs::path(c.out_dir) / "run.log").string(), timing.str());
  } catch (const InputError& e) {
    code = ExitCode::input_error;
    report_error(c, err, code, "input", e.what());
  } catch (const fs::filesystem_error& e) {
    code = ExitCode::input_error;
    report_error(c, err, code, "io", e.what());
  } catch (const NumericalError& e) {
    code = ExitCode::numerical_failure;
    report_error(c, err, code, "numerical", e.what());
  } catch (const std::exception& e) {
    code = ExitCode::numerical_failure;
    report_error(c, err, code, "internal", e.what());
  }
  return code;
}

}  // namespace mllc
