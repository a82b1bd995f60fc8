#include "mllc/lc.hpp"

#include "mllc/errors.hpp"
#include "mllc/numeric.hpp"
#include "mllc/random.hpp"
#include "mllc/selection.hpp"

#include <cmath>
#include <sstream>

namespace mllc {

void check_item_probs(const FlatData& flat, const ItemProbs& item_probs, int clusters) {
  if (static_cast<int>(item_probs.size()) != flat.num_items()) {
    std::ostringstream msg;
    msg << "parameter schema mismatch: " << item_probs.size() << " item tables for " << flat.num_items() << " items";
    throw InputError(msg.str());
  }
  for (int k = 0; k < flat.num_items(); ++k) {
    const auto& table = item_probs[static_cast<std::size_t>(k)];
    if (table.rows() != clusters || table.cols() != flat.levels[static_cast<std::size_t>(k)]) {
      std::ostringstream msg;
      msg << "parameter schema mismatch: item " << k << " table is " << table.rows() << "x" << table.cols()
          << ", expected " << clusters << "x" << flat.levels[static_cast<std::size_t>(k)];
      throw InputError(msg.str());
    }
    for (int l = 0; l < clusters; ++l) {
      if (table.row(l).minCoeff() < 0.0 || std::abs(table.row(l).sum() - 1.0) > 1e-10) {
        std::ostringstream msg;
        msg << "item " << k << " probabilities for cluster " << l << " are not a probability vector";
        throw InputError(msg.str());
      }
    }
  }
}

Eigen::MatrixXd log_cluster_densities(const FlatData& flat, const ItemProbs& item_probs) {
  const int n = flat.num_units();
  const int clusters = static_cast<int>(item_probs.front().rows());
  std::vector<Eigen::MatrixXd> log_tables;
  log_tables.reserve(item_probs.size());
  for (const auto& t : item_probs) log_tables.push_back(t.array().log().transpose().matrix());  // S_k x L

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, clusters);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < flat.num_items(); ++k) {
      const int r = flat.responses(i, k);
      if (r == kMissing) continue;
      out.row(i) += log_tables[static_cast<std::size_t>(k)].row(r);
    }
  }
  return out;
}

ItemProbs item_mstep(const FlatData& flat, const Eigen::Ref<const Eigen::MatrixXd>& responsibilities) {
  const int clusters = static_cast<int>(responsibilities.cols());
  ItemProbs counts;
  for (const int s : flat.levels) counts.push_back(Eigen::MatrixXd::Zero(s, clusters));  // transposed
  for (int i = 0; i < flat.num_units(); ++i) {
    const double w = flat.weights(i);
    for (int k = 0; k < flat.num_items(); ++k) {
      const int r = flat.responses(i, k);
      if (r == kMissing) continue;
      counts[static_cast<std::size_t>(k)].row(r) += w * responsibilities.row(i);
    }
  }
  ItemProbs probs;
  probs.reserve(counts.size());
  for (const auto& c : counts) {
    Eigen::MatrixXd table(clusters, c.rows());
    for (int l = 0; l < clusters; ++l) table.row(l) = floor_simplex_mle(c.col(l)).transpose();
    probs.push_back(std::move(table));
  }
  return probs;
}

namespace {

void check_lc(const FlatData& flat, const LcParams& params) {
  if (params.num_clusters() < 1) throw InputError("LcParams has no clusters");
  if (params.cluster_weights.minCoeff() < 0.0 || std::abs(params.cluster_weights.sum() - 1.0) > 1e-10)
    throw InputError("cluster weights must sum to 1");
  check_item_probs(flat, params.item_probs, params.num_clusters());
}

/// Per-unit log joint rows log P(Z=l) + log b_il.
Eigen::MatrixXd log_joint(const FlatData& flat, const LcParams& params) {
  Eigen::MatrixXd lj = log_cluster_densities(flat, params.item_probs);
  lj.rowwise() += params.cluster_weights.array().log().matrix().transpose();
  return lj;
}

double estep(const FlatData& flat, const LcParams& params, Eigen::MatrixXd& posteriors) {
  posteriors = log_joint(flat, params);
  double ll = 0.0;
  for (int i = 0; i < flat.num_units(); ++i) {
    auto row = posteriors.row(i);
    ll += flat.weights(i) * softmax_inplace(row);
  }
  return ll;
}

LcParams mstep(const FlatData& flat, const Eigen::MatrixXd& posteriors) {
  LcParams p;
  const Eigen::VectorXd mass = posteriors.transpose() * flat.weights;
  p.cluster_weights = floor_simplex_mle(mass);
  p.item_probs = item_mstep(flat, posteriors);
  return p;
}

}  // namespace

double lc_loglik(const TwoLevelDataset& data, const LcParams& params) {
  const FlatData flat = flatten(data);
  check_lc(flat, params);
  const Eigen::MatrixXd lj = log_joint(flat, params);
  double ll = 0.0;
  for (int i = 0; i < flat.num_units(); ++i) ll += flat.weights(i) * log_sum_exp(lj.row(i));
  return ll;
}

Eigen::MatrixXd lc_posteriors(const TwoLevelDataset& data, const LcParams& params) {
  const FlatData flat = flatten(data);
  check_lc(flat, params);
  Eigen::MatrixXd post;
  estep(flat, params, post);
  return post;
}

LcFit lc_em_fit(const TwoLevelDataset& data, int clusters, const EmConfig& config) {
  const FlatData flat = flatten(data);
  if (clusters < 1) throw InputError("number of clusters must be >= 1");
  if (clusters > flat.num_units()) throw InputError("number of clusters exceeds the number of units");

  Rng rng(derive_seed(config.seed, {0}));
  Eigen::MatrixXd post(flat.num_units(), clusters);
  for (int i = 0; i < flat.num_units(); ++i) post.row(i) = rng.dirichlet_flat(clusters).transpose();

  LcFit fit;
  fit.params = mstep(flat, post);
  double ll = estep(flat, fit.params, post);
  if (!std::isfinite(ll)) throw NumericalError("non-finite log-likelihood after initialization");
  fit.loglik_trace.push_back(ll);

  for (int iter = 1; iter <= config.max_iter; ++iter) {
    fit.params = mstep(flat, post);
    const double next = estep(flat, fit.params, post);
    if (!std::isfinite(next)) {
      std::ostringstream msg;
      msg << "non-finite log-likelihood at EM iteration " << iter;
      throw NumericalError(msg.str());
    }
    fit.loglik_trace.push_back(next);
    fit.n_iter = iter;
    const double rel = std::abs(next - ll) / std::max(std::abs(next), 1e-300);
    ll = next;
    if (rel < config.rel_tol) {
      fit.converged = true;
      break;
    }
  }
  fit.loglik = ll;
  fit.posteriors = std::move(post);
  int item_terms = 0;
  for (const int s : flat.levels) item_terms += clusters * (s - 1);
  fit.n_params = (clusters - 1) + item_terms;
  fit.bic = bic(ll, fit.n_params, flat.num_units());
  return fit;
}

}  // namespace mllc
