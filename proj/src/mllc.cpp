#include "mllc/mllc.hpp"

#include "mllc/concomitant.hpp"
#include "mllc/errors.hpp"
#include "mllc/numeric.hpp"
#include "mllc/random.hpp"
#include "mllc/selection.hpp"

#include <cmath>
#include <sstream>

namespace mllc {

int count_free_parameters(const std::vector<int>& levels, int clusters, int classes,
                          std::optional<int> covariate_columns) {
  int item_terms = 0;
  for (const int s : levels) item_terms += clusters * (s - 1);
  const int cluster_terms =
      covariate_columns ? (clusters - 1) * (classes + *covariate_columns) : classes * (clusters - 1);
  return (classes - 1) + item_terms + cluster_terms;
}

void check_mllc_params(const FlatData& flat, const MllcParams& params, const CodedDesign* design) {
  const int h = params.num_classes();
  const int l = params.num_clusters();
  if (h < 1 || l < 1) throw InputError("MllcParams needs at least one class and one cluster");
  if (params.cluster_given_class.rows() != h)
    throw InputError("cluster_given_class rows do not match the number of classes");
  if (params.class_weights.minCoeff() < 0.0 || std::abs(params.class_weights.sum() - 1.0) > 1e-10)
    throw InputError("class weights must sum to 1");
  if (!params.concomitant &&
      (params.cluster_given_class.minCoeff() < 0.0 ||
       (params.cluster_given_class.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-10))
    throw InputError("cluster_given_class rows must be probability vectors");
  check_item_probs(flat, params.item_probs, l);
  if (params.concomitant) {
    if (!design) throw InputError("covariate-parameterized model requires a coded design");
    const auto& c = *params.concomitant;
    if (c.intercepts.rows() != h || c.intercepts.cols() != l)
      throw InputError("concomitant intercepts must be H x L");
    if (c.slopes.rows() != design->cols() || c.slopes.cols() != l)
      throw InputError("concomitant slopes must be C x L for the supplied design");
    if (design->rows() != flat.num_units()) throw InputError("design rows do not align with units");
  }
}

Eigen::MatrixXd log_cluster_given_class(const MllcParams& params, const CodedDesign* design, int units) {
  const int h_count = params.num_classes();
  const int l_count = params.num_clusters();
  Eigen::MatrixXd out(units, h_count * l_count);
  if (!params.concomitant) {
    const Eigen::MatrixXd log_table = params.cluster_given_class.array().log();
    for (int h = 0; h < h_count; ++h)
      out.middleCols(h * l_count, l_count).rowwise() = log_table.row(h);
    return out;
  }
  const auto& coef = *params.concomitant;
  const Eigen::MatrixXd eta = design->matrix * coef.slopes;  // N x L
  for (int i = 0; i < units; ++i) {
    for (int h = 0; h < h_count; ++h) {
      Eigen::RowVectorXd row = eta.row(i) + coef.intercepts.row(h);
      row.array() -= log_sum_exp(row);
      out.block(i, h * l_count, 1, l_count) = row;
    }
  }
  return out;
}

Eigen::MatrixXd average_cluster_given_class(const MllcParams& params, const CodedDesign& design,
                                            const Eigen::VectorXd& weights) {
  const int l_count = params.num_clusters();
  const Eigen::MatrixXd logp = log_cluster_given_class(params, &design, static_cast<int>(weights.size()));
  const Eigen::RowVectorXd avg = (weights.transpose() * logp.array().exp().matrix()) / weights.sum();
  Eigen::MatrixXd table(params.num_classes(), l_count);
  for (int h = 0; h < params.num_classes(); ++h) table.row(h) = avg.segment(h * l_count, l_count);
  return table;
}

namespace {

struct EStepResult {
  double loglik = 0.0;
  MllcPosteriors posteriors;
};

EStepResult estep(const FlatData& flat, const MllcParams& params, const CodedDesign* design) {
  const int n = flat.num_units();
  const int h_count = params.num_classes();
  const int l_count = params.num_clusters();
  const Eigen::MatrixXd log_b = log_cluster_densities(flat, params.item_probs);
  Eigen::MatrixXd joint = log_cluster_given_class(params, design, n);  // becomes q_ihl

  // log c_ih = lse_l(log P(l|h,x) + log b_il); q_ihl = exp(... - log c_ih).
  Eigen::MatrixXd log_c(n, h_count);
  for (int i = 0; i < n; ++i) {
    for (int h = 0; h < h_count; ++h) {
      auto block = joint.block(i, h * l_count, 1, l_count);
      block += log_b.row(i);
      log_c(i, h) = softmax_inplace(block);
    }
  }

  EStepResult out;
  const Eigen::VectorXd log_pi = params.class_weights.array().log();
  out.posteriors.group_class.resize(flat.num_groups(), h_count);
  out.posteriors.unit_cluster = Eigen::MatrixXd::Zero(n, l_count);
  for (int j = 0; j < flat.num_groups(); ++j) {
    const int begin = flat.group_offsets[static_cast<std::size_t>(j)];
    const int end = flat.group_offsets[static_cast<std::size_t>(j) + 1];
    Eigen::VectorXd score = log_pi;
    for (int i = begin; i < end; ++i) score += flat.weights(i) * log_c.row(i).transpose();
    out.loglik += softmax_inplace(score);
    out.posteriors.group_class.row(j) = score.transpose();
    for (int i = begin; i < end; ++i)
      for (int h = 0; h < h_count; ++h)
        out.posteriors.unit_cluster.row(i) += score(h) * joint.block(i, h * l_count, 1, l_count);
  }
  out.posteriors.unit_cluster_given_class = std::move(joint);
  return out;
}

/// v_ihl = w_i P(W_j = h | .) P(Z = l | W = h, .)
Eigen::MatrixXd joint_unit_weights(const FlatData& flat, const MllcPosteriors& post, int l_count) {
  Eigen::MatrixXd v = post.unit_cluster_given_class;
  const int h_count = static_cast<int>(post.group_class.cols());
  for (int j = 0; j < flat.num_groups(); ++j) {
    for (int i = flat.group_offsets[static_cast<std::size_t>(j)]; i < flat.group_offsets[static_cast<std::size_t>(j) + 1]; ++i)
      for (int h = 0; h < h_count; ++h) v.block(i, h * l_count, 1, l_count) *= flat.weights(i) * post.group_class(j, h);
  }
  return v;
}

struct MStepOutcome {
  MllcParams params;
  bool conditioning_warning = false;
};

MStepOutcome mstep(const FlatData& flat, const MllcPosteriors& post, const CodedDesign* design,
                   const std::optional<ConcomitantCoefficients>& current) {
  const int h_count = static_cast<int>(post.group_class.cols());
  const int l_count = static_cast<int>(post.unit_cluster.cols());
  MStepOutcome out;
  auto& p = out.params;
  p.class_weights = floor_simplex_mle(Eigen::VectorXd(post.group_class.colwise().sum().transpose()));
  p.item_probs = item_mstep(flat, post.unit_cluster);

  const Eigen::MatrixXd v = joint_unit_weights(flat, post, l_count);
  if (!design) {
    const Eigen::RowVectorXd mass = v.colwise().sum();
    p.cluster_given_class.resize(h_count, l_count);
    for (int h = 0; h < h_count; ++h)
      p.cluster_given_class.row(h) = floor_simplex_mle(Eigen::VectorXd(mass.segment(h * l_count, l_count).transpose())).transpose();
    return out;
  }
  ConcomitantCoefficients start;
  if (current) {
    start = *current;
  } else {
    start.intercepts = Eigen::MatrixXd::Zero(h_count, l_count);
    start.slopes = Eigen::MatrixXd::Zero(design->cols(), l_count);
  }
  auto step = concomitant_mstep(v, design->matrix, start);
  out.conditioning_warning = step.conditioning_warning;
  p.concomitant = std::move(step.coefficients);
  p.cluster_given_class = average_cluster_given_class(p, *design, flat.weights);
  return out;
}

}  // namespace

double mllc_loglik(const TwoLevelDataset& data, const MllcParams& params, const CodedDesign* design) {
  const FlatData flat = flatten(data);
  check_mllc_params(flat, params, design);
  return estep(flat, params, design).loglik;
}

MllcPosteriors mllc_posteriors(const TwoLevelDataset& data, const MllcParams& params, const CodedDesign* design) {
  const FlatData flat = flatten(data);
  check_mllc_params(flat, params, design);
  return estep(flat, params, design).posteriors;
}

MllcFit mllc_em_fit(const TwoLevelDataset& data, int clusters, int classes, const CodedDesign* design,
                    const EmConfig& config) {
  const FlatData flat = flatten(data);
  if (clusters < 1) throw InputError("number of clusters must be >= 1");
  if (classes < 1) throw InputError("number of classes must be >= 1");
  if (clusters > flat.num_units()) throw InputError("number of clusters exceeds the number of units");
  if (classes > flat.num_groups()) {
    std::ostringstream msg;
    msg << "number of classes (" << classes << ") exceeds the number of groups (" << flat.num_groups() << ")";
    throw InputError(msg.str());
  }
  if (design && design->rows() != flat.num_units()) throw InputError("design rows do not align with units");

  // Random start: Dirichlet(1) unit cluster and group class responsibilities.
  Rng rng(derive_seed(config.seed, {1}));
  MllcPosteriors init;
  init.group_class.resize(flat.num_groups(), classes);
  for (int j = 0; j < flat.num_groups(); ++j) init.group_class.row(j) = rng.dirichlet_flat(classes).transpose();
  init.unit_cluster.resize(flat.num_units(), clusters);
  init.unit_cluster_given_class.resize(flat.num_units(), classes * clusters);
  for (int i = 0; i < flat.num_units(); ++i) {
    init.unit_cluster.row(i) = rng.dirichlet_flat(clusters).transpose();
    for (int h = 0; h < classes; ++h) init.unit_cluster_given_class.block(i, h * clusters, 1, clusters) = init.unit_cluster.row(i);
  }

  MllcFit fit;
  fit.degenerate_l1 = clusters == 1;
  auto ms = mstep(flat, init, design, std::nullopt);
  fit.params = std::move(ms.params);
  fit.conditioning_warnings += ms.conditioning_warning ? 1 : 0;
  auto es = estep(flat, fit.params, design);
  if (!std::isfinite(es.loglik)) throw NumericalError("non-finite log-likelihood after initialization");
  double ll = es.loglik;
  fit.loglik_trace.push_back(ll);

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    ms = mstep(flat, es.posteriors, design, fit.params.concomitant);
    fit.params = std::move(ms.params);
    fit.conditioning_warnings += ms.conditioning_warning ? 1 : 0;
    es = estep(flat, fit.params, design);
    if (!std::isfinite(es.loglik)) {
      std::ostringstream msg;
      msg << "non-finite log-likelihood at EM iteration " << iter;
      throw NumericalError(msg.str());
    }
    fit.loglik_trace.push_back(es.loglik);
    fit.n_iter = iter;
    const double rel = std::abs(es.loglik - ll) / std::max(std::abs(es.loglik), 1e-300);
    ll = es.loglik;
    if (rel < config.rel_tol) {
      fit.converged = true;
      break;
    }
  }
  fit.loglik = ll;
  fit.posteriors = std::move(es.posteriors);
  fit.n_params = count_free_parameters(flat.levels, clusters, classes,
                                       design ? std::optional<int>(design->cols()) : std::nullopt);
  fit.bic = bic(ll, fit.n_params, flat.num_units());
  return fit;
}

}  // namespace mllc
