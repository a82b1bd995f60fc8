#include "mllc/labels.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace mllc {

namespace {

std::vector<int> descending_order(const Eigen::VectorXd& key) {
  std::vector<int> order(static_cast<std::size_t>(key.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) > key(b); });
  return order;
}

Eigen::MatrixXd permute_cols(const Eigen::MatrixXd& m, const std::vector<int>& order) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t p = 0; p < order.size(); ++p) out.col(static_cast<Eigen::Index>(p)) = m.col(order[p]);
  return out;
}

Eigen::MatrixXd permute_rows(const Eigen::MatrixXd& m, const std::vector<int>& order) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t p = 0; p < order.size(); ++p) out.row(static_cast<Eigen::Index>(p)) = m.row(order[p]);
  return out;
}

double item_distance(const ItemProbs& a, int la, const ItemProbs& b, int lb) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k].row(la) - b[k].row(lb)).cwiseAbs().sum();
  return d;
}

template <typename Cost>
std::vector<int> best_assignment(int n, Cost cost) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  if (n > 8) {
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    for (int p = 0; p < n; ++p) {
      int best = -1;
      double best_cost = std::numeric_limits<double>::infinity();
      for (int q = 0; q < n; ++q)
        if (!used[static_cast<std::size_t>(q)] && cost(p, q) < best_cost) {
          best = q;
          best_cost = cost(p, q);
        }
      used[static_cast<std::size_t>(best)] = true;
      perm[static_cast<std::size_t>(p)] = best;
    }
    return perm;
  }
  std::vector<int> best = perm;
  double best_total = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int p = 0; p < n; ++p) total += cost(p, perm[static_cast<std::size_t>(p)]);
    if (total < best_total) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

std::vector<int> canonical_cluster_order(const ItemProbs& item_probs, const Eigen::VectorXd& cluster_sizes) {
  const bool all_binary =
      std::all_of(item_probs.begin(), item_probs.end(), [](const Eigen::MatrixXd& t) { return t.cols() == 2; });
  if (!all_binary) return descending_order(cluster_sizes);
  Eigen::VectorXd actions = Eigen::VectorXd::Zero(cluster_sizes.size());
  for (const auto& t : item_probs) actions += t.col(1);
  return descending_order(actions);
}

Eigen::VectorXd marginal_cluster_sizes(const MllcParams& params) {
  return params.cluster_given_class.transpose() * params.class_weights;
}

MllcFit permute_labels(MllcFit fit, const std::vector<int>& cluster_order, const std::vector<int>& class_order) {
  auto& p = fit.params;
  const int l_count = p.num_clusters();
  const int h_count = p.num_classes();

  Eigen::VectorXd weights(h_count);
  for (int h = 0; h < h_count; ++h) weights(h) = p.class_weights(class_order[static_cast<std::size_t>(h)]);
  p.class_weights = weights;
  p.cluster_given_class = permute_cols(permute_rows(p.cluster_given_class, class_order), cluster_order);
  for (auto& t : p.item_probs) t = permute_rows(t, cluster_order);
  if (p.concomitant) {
    auto& c = *p.concomitant;
    c.intercepts = permute_cols(permute_rows(c.intercepts, class_order), cluster_order);
    c.slopes = permute_cols(c.slopes, cluster_order);
    // Re-anchor on the new last cluster.
    const Eigen::VectorXd base_i = c.intercepts.col(l_count - 1);
    const Eigen::VectorXd base_s = c.slopes.col(l_count - 1);
    c.intercepts.colwise() -= base_i;
    c.slopes.colwise() -= base_s;
  }

  auto& post = fit.posteriors;
  post.group_class = permute_cols(post.group_class, class_order);
  post.unit_cluster = permute_cols(post.unit_cluster, cluster_order);
  Eigen::MatrixXd joint(post.unit_cluster_given_class.rows(), post.unit_cluster_given_class.cols());
  for (int h = 0; h < h_count; ++h)
    for (int l = 0; l < l_count; ++l)
      joint.col(h * l_count + l) =
          post.unit_cluster_given_class.col(class_order[static_cast<std::size_t>(h)] * l_count + cluster_order[static_cast<std::size_t>(l)]);
  post.unit_cluster_given_class = std::move(joint);
  return fit;
}

MllcFit canonicalize_labels(MllcFit fit) {
  const auto cluster_order = canonical_cluster_order(fit.params.item_probs, marginal_cluster_sizes(fit.params));
  const auto class_order = descending_order(fit.params.class_weights);
  return permute_labels(std::move(fit), cluster_order, class_order);
}

LcFit canonicalize_labels(LcFit fit) {
  const auto order = canonical_cluster_order(fit.params.item_probs, fit.params.cluster_weights);
  Eigen::VectorXd w(fit.params.num_clusters());
  for (std::size_t p = 0; p < order.size(); ++p) w(static_cast<Eigen::Index>(p)) = fit.params.cluster_weights(order[p]);
  fit.params.cluster_weights = w;
  for (auto& t : fit.params.item_probs) t = permute_rows(t, order);
  fit.posteriors = permute_cols(fit.posteriors, order);
  return fit;
}

std::vector<int> align_clusters(const ItemProbs& estimate, const ItemProbs& reference) {
  const int n = static_cast<int>(reference.front().rows());
  return best_assignment(n, [&](int p, int q) { return item_distance(reference, p, estimate, q); });
}

std::vector<int> align_classes(const Eigen::MatrixXd& estimate, const Eigen::MatrixXd& reference) {
  return best_assignment(static_cast<int>(reference.rows()),
                         [&](int p, int q) { return (reference.row(p) - estimate.row(q)).cwiseAbs().sum(); });
}

}  // namespace mllc
