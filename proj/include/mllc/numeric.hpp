#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace mllc {

/// Lower/upper bound applied to every estimated probability.
inline constexpr double kProbFloor = 1e-6;

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

/// Normalizes log-weights in place to probabilities; returns the log normalizer.
template <typename Derived>
typename Derived::Scalar softmax_inplace(Eigen::DenseBase<Derived>& x) {
  const auto lse = log_sum_exp(x);
  x.derived().array() = (x.derived().array() - lse).exp();
  return lse;
}

template <typename Scalar>
Scalar logistic(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// log(logistic(x)) without overflow.
template <typename Scalar>
Scalar log_logistic(Scalar x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// Maximizer of sum_s counts[s] * log p[s] over the simplex with p[s] >= floor.
/// Categories whose unconstrained share falls below the floor are pinned to it
/// and the remaining mass is redistributed proportionally.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> floor_simplex_mle(
    const Eigen::MatrixBase<Derived>& counts, typename Derived::Scalar floor = kProbFloor) {
  using Scalar = typename Derived::Scalar;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = counts.size();
  Vec p(n);
  if (n == 1) {
    p(0) = 1;
    return p;
  }
  const Scalar total = counts.sum();
  if (!(total > 0)) {
    p.setConstant(Scalar(1) / Scalar(n));
    return p;
  }
  std::vector<bool> pinned(static_cast<std::size_t>(n), false);
  for (;;) {
    Scalar free_mass = 1;
    Scalar free_counts = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
      if (pinned[s]) {
        free_mass -= floor;
      } else {
        free_counts += counts(s);
      }
    }
    bool changed = false;
    for (Eigen::Index s = 0; s < n; ++s) {
      if (pinned[s]) {
        p(s) = floor;
        continue;
      }
      p(s) = free_counts > 0 ? free_mass * counts(s) / free_counts : floor;
    }
    for (Eigen::Index s = 0; s < n; ++s) {
      if (!pinned[s] && p(s) < floor) {
        pinned[s] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return p;
}

}  // namespace mllc
