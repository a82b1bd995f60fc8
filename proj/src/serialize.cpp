#include "mllc/serialize.hpp"

#include <iomanip>
#include <sstream>

namespace mllc {

Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json to_json(const MllcParams& p) {
  Json j;
  j["class_weights"] = to_json(p.class_weights);
  j["cluster_given_class"] = to_json(p.cluster_given_class);
  if (p.concomitant) {
    j["concomitant"] = {{"intercepts", to_json(p.concomitant->intercepts)}, {"slopes", to_json(p.concomitant->slopes)}};
  }
  j["item_probs"] = Json::array();
  for (const auto& t : p.item_probs) j["item_probs"].push_back(to_json(t));
  return j;
}

Json to_json(const MllcFit& fit, bool include_unit_posteriors) {
  Json j;
  j["clusters"] = fit.params.num_clusters();
  j["classes"] = fit.params.num_classes();
  j["loglik"] = fit.loglik;
  j["n_params"] = fit.n_params;
  j["bic"] = fit.bic;
  j["n_iter"] = fit.n_iter;
  j["converged"] = fit.converged;
  j["flags"] = Json::array();
  if (fit.degenerate_l1) j["flags"].push_back("DEGENERATE_L1");
  if (fit.conditioning_warnings > 0) j["flags"].push_back("CONDITIONING_WARNING");
  j["params"] = to_json(fit.params);
  j["loglik_trace"] = fit.loglik_trace;
  j["group_class_posteriors"] = to_json(fit.posteriors.group_class);
  if (include_unit_posteriors) j["unit_cluster_posteriors"] = to_json(fit.posteriors.unit_cluster);
  return j;
}

Json to_json(const ProfileReport& r) {
  Json j;
  j["clusters"] = r.clusters;
  j["classes"] = r.classes;
  j["assignment"] = r.hard_assignment ? "modal" : "proportional";
  j["cluster_size_percent"] = to_json(r.cluster_size_percent);
  j["class_cluster_percent"] = to_json(r.class_cluster_percent);
  j["items"] = Json::array();
  for (const auto& item : r.items) j["items"].push_back({{"name", item.name}, {"percent", to_json(item.percent)}});
  j["covariates"] = Json::array();
  for (const auto& cov : r.covariates)
    j["covariates"].push_back({{"name", cov.name},
                               {"type", cov.kind == CovariateKind::continuous ? "continuous" : "categorical"},
                               {"labels", cov.labels},
                               {"values", to_json(cov.percent)}});
  return j;
}

Json to_json(const std::vector<GroupAssignment>& groups) {
  Json out = Json::array();
  for (const auto& g : groups)
    out.push_back({{"group", g.group_id}, {"class", g.assigned_class + 1}, {"posterior", g.confidence}});
  return out;
}

Json to_json(const GridResult& grid) {
  Json j;
  j["bic_sample_size"] = to_string(grid.bic_n);
  j["n"] = grid.bic_sample_size;
  j["rows"] = Json::array();
  for (const auto& r : grid.rows) {
    Json row;
    row["L"] = r.clusters;
    row["H"] = r.classes;
    row["ok"] = r.ok;
    if (r.ok) {
      row["loglik"] = r.loglik;
      row["n_params"] = r.n_params;
      row["BIC"] = r.bic;
      row["converged_share"] = r.converged_share;
    } else {
      row["error"] = r.error;
    }
    j["rows"].push_back(row);
  }
  const auto& sel = grid.rows[static_cast<std::size_t>(grid.selected)];
  j["selected"] = {{"L", sel.clusters}, {"H", sel.classes}, {"BIC", sel.bic}};
  return j;
}

namespace {

Json estimate_json(const Estimate& e) {
  return {{"name", e.name}, {"estimate", e.value}, {"se", e.se}, {"p_value", e.p_value}, {"significant", e.significant}};
}

}  // namespace

Json to_json(const RegressionFit& fit) {
  Json j;
  j["outcome"] = fit.outcome;
  j["model"] = fit.kind == OutcomeKind::binary ? "random-intercept logit" : "random-intercept cumulative logit";
  j["units"] = fit.units;
  j["groups"] = fit.groups;
  j["quadrature_nodes"] = fit.quadrature_nodes;
  j["loglik"] = fit.loglik;
  j["converged"] = fit.converged;
  j["gradient_norm"] = fit.gradient_norm;
  j["iterations"] = fit.iterations;
  j["separation_warning"] = fit.separation_warning;
  j["beta"] = Json::array();
  for (const auto& b : fit.beta) j["beta"].push_back(estimate_json(b));
  j["thresholds"] = Json::array();
  for (const auto& t : fit.thresholds) j["thresholds"].push_back(estimate_json(t));
  j["effects"] = Json::array();
  for (const auto& ce : fit.effects) {
    Json c;
    c["covariate"] = ce.covariate;
    c["reference"] = ce.reference;
    c["effects"] = Json::array();
    for (const auto& e : ce.effects) c["effects"].push_back(estimate_json(e));
    j["effects"].push_back(c);
  }
  j["var_u"] = estimate_json(fit.var_u);
  j["icc"] = fit.icc;
  j["icc_residual_scale"] = fit.icc_scale == IccScale::unit ? "unit" : "logistic";
  return j;
}

std::string format_grid_text(const GridResult& grid) {
  std::ostringstream os;
  os << "BIC sample size: " << to_string(grid.bic_n) << " (N = " << grid.bic_sample_size << ")\n";
  os << std::setw(4) << "L" << std::setw(4) << "H" << std::setw(18) << "loglik" << std::setw(10) << "n_params"
     << std::setw(18) << "BIC" << std::setw(17) << "converged_share" << '\n';
  for (std::size_t i = 0; i < grid.rows.size(); ++i) {
    const auto& r = grid.rows[i];
    os << std::setw(4) << r.clusters << std::setw(4) << r.classes;
    if (!r.ok) {
      os << "  failed: " << r.error << '\n';
      continue;
    }
    os << std::fixed << std::setprecision(3) << std::setw(18) << r.loglik << std::setw(10) << r.n_params
       << std::setw(18) << r.bic << std::setw(17) << std::setprecision(2) << r.converged_share
       << (static_cast<int>(i) == grid.selected ? "  *" : "") << '\n';
  }
  os << "* selected (lowest BIC)\n";
  return os.str();
}

}  // namespace mllc
