#include "mllc/profile.hpp"

#include <iomanip>
#include <sstream>

namespace mllc {

namespace {

Eigen::MatrixXd hard_assign(const Eigen::MatrixXd& post) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(post.rows(), post.cols());
  for (Eigen::Index i = 0; i < post.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index l = 1; l < post.cols(); ++l)
      if (post(i, l) > post(i, best)) best = l;
    out(i, best) = 1.0;
  }
  return out;
}

}  // namespace

ProfileReport profile_report(const MllcFit& fit, const TwoLevelDataset& data, const ProfileOptions& options) {
  const FlatData flat = flatten(data);
  const auto& post = fit.posteriors.unit_cluster;
  const int l_count = fit.params.num_clusters();

  ProfileReport rep;
  rep.clusters = l_count;
  rep.classes = fit.params.num_classes();
  rep.hard_assignment = options.hard_assignment;
  const Eigen::VectorXd mass = post.transpose() * flat.weights;
  rep.cluster_size_percent = 100.0 * mass / mass.sum();
  rep.class_cluster_percent = 100.0 * fit.params.cluster_given_class;
  for (int k = 0; k < flat.num_items(); ++k)
    rep.items.push_back({data.schema.items[static_cast<std::size_t>(k)].name,
                         100.0 * fit.params.item_probs[static_cast<std::size_t>(k)].transpose()});

  const Eigen::MatrixXd share = options.hard_assignment ? hard_assign(post) : post;
  const Eigen::MatrixXd weighted = share.array().colwise() * flat.weights.array();
  const Eigen::RowVectorXd col_mass = weighted.colwise().sum();
  for (std::size_t c = 0; c < data.covariates.size(); ++c) {
    const auto& info = data.covariates[c];
    CovariateProfile prof;
    prof.name = info.name;
    prof.kind = info.kind;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(flat.num_units()));
    for (const auto& g : data.groups)
      for (const auto& u : g.units) values.push_back(u.covariates[c]);
    if (info.kind == CovariateKind::continuous) {
      prof.labels = {"mean"};
      prof.percent = Eigen::MatrixXd::Zero(1, l_count);
      for (int i = 0; i < flat.num_units(); ++i) prof.percent.row(0) += values[static_cast<std::size_t>(i)] * weighted.row(i);
      for (int l = 0; l < l_count; ++l) prof.percent(0, l) = col_mass(l) > 0 ? prof.percent(0, l) / col_mass(l) : 0.0;
    } else {
      prof.labels = info.categories;
      prof.percent = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(info.categories.size()), l_count);
      for (int i = 0; i < flat.num_units(); ++i) prof.percent.row(static_cast<Eigen::Index>(values[static_cast<std::size_t>(i)])) += weighted.row(i);
      for (int l = 0; l < l_count; ++l)
        if (col_mass(l) > 0) prof.percent.col(l) *= 100.0 / col_mass(l);
    }
    rep.covariates.push_back(std::move(prof));
  }
  return rep;
}

std::vector<GroupAssignment> classify_groups(const MllcFit& fit, const TwoLevelDataset& data) {
  const auto& gc = fit.posteriors.group_class;
  std::vector<GroupAssignment> out;
  out.reserve(static_cast<std::size_t>(gc.rows()));
  for (Eigen::Index j = 0; j < gc.rows(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index h = 1; h < gc.cols(); ++h)
      if (gc(j, h) > gc(j, best)) best = h;
    out.push_back({data.groups[static_cast<std::size_t>(j)].id, static_cast<int>(best), gc(j, best)});
  }
  return out;
}

namespace {

constexpr int kLabelWidth = 34;
constexpr int kCellWidth = 11;

void header(std::ostringstream& os, int clusters) {
  os << std::left << std::setw(kLabelWidth) << "" << std::right;
  for (int l = 0; l < clusters; ++l) os << std::setw(kCellWidth) << ("Cluster " + std::to_string(l + 1));
  os << '\n';
}

void row(std::ostringstream& os, const std::string& label, const Eigen::Ref<const Eigen::RowVectorXd>& values) {
  os << std::left << std::setw(kLabelWidth) << label.substr(0, kLabelWidth - 1) << std::right << std::fixed
     << std::setprecision(2);
  for (Eigen::Index l = 0; l < values.size(); ++l) os << std::setw(kCellWidth) << values(l);
  os << '\n';
}

}  // namespace

std::string format_profile_text(const ProfileReport& rep, const std::vector<GroupAssignment>& groups) {
  std::ostringstream os;
  header(os, rep.clusters);
  row(os, "Size", rep.cluster_size_percent.transpose());
  os << "Conditional probabilities %\n";
  for (int h = 0; h < rep.classes; ++h) row(os, "Class " + std::to_string(h + 1), rep.class_cluster_percent.row(h));
  os << "Indicators\n";
  for (const auto& item : rep.items) {
    if (item.percent.rows() == 2) {
      row(os, item.name, item.percent.row(1));
      continue;
    }
    for (Eigen::Index s = 0; s < item.percent.rows(); ++s)
      row(os, item.name + " = " + std::to_string(s + 1), item.percent.row(s));
  }
  if (!rep.covariates.empty()) {
    os << "Covariates" << (rep.hard_assignment ? " (modal assignment)" : "") << '\n';
    for (const auto& cov : rep.covariates) {
      os << cov.name << '\n';
      for (std::size_t r = 0; r < cov.labels.size(); ++r)
        row(os, "  " + cov.labels[r], cov.percent.row(static_cast<Eigen::Index>(r)));
    }
  }
  if (!groups.empty()) {
    os << "\nGroup assignment\n";
    for (const auto& g : groups)
      os << std::left << std::setw(kLabelWidth) << g.group_id << "Class " << g.assigned_class + 1 << "  ("
         << std::fixed << std::setprecision(4) << g.confidence << ")\n";
  }
  return os.str();
}

}  // namespace mllc
