#include "mllc/regression.hpp"

#include "mllc/errors.hpp"
#include "mllc/numeric.hpp"
#include "mllc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

namespace mllc {

void RegressionSpec::validate() const {
  if (outcome.empty()) throw InputError("regression outcome not set");
  if (quadrature_nodes < 5) throw InputError("quadrature needs at least 5 nodes");
  if (max_iter < 1) throw InputError("max_iter must be >= 1");
}

double compute_icc(double var_u, IccScale scale) {
  if (!(var_u >= 0.0)) throw InputError("random-intercept variance must be non-negative");
  const double residual = scale == IccScale::unit ? 1.0 : std::numbers::pi * std::numbers::pi / 3.0;
  return var_u / (var_u + residual);
}

RegressionData prepare_regression(const TwoLevelDataset& data, const RegressionSpec& spec) {
  spec.validate();
  const int item = data.schema.find(spec.outcome);
  if (item < 0) throw InputError("unknown outcome item '" + spec.outcome + "'");
  const int levels = data.schema.levels(item);
  if (spec.kind == OutcomeKind::binary && levels != 2)
    throw InputError("binary regression needs a 2-level outcome; '" + spec.outcome + "' has " + std::to_string(levels));

  // Keep units with an observed outcome; empty groups are dropped.
  TwoLevelDataset kept;
  kept.schema = data.schema;
  kept.covariates = data.covariates;
  for (const auto& g : data.groups) {
    Group ng{g.id, {}};
    for (const auto& u : g.units)
      if (u.responses[static_cast<std::size_t>(item)] != kMissing) ng.units.push_back(u);
    if (!ng.units.empty()) kept.groups.push_back(std::move(ng));
  }
  if (kept.groups.empty()) throw InputError("outcome '" + spec.outcome + "' is never observed");

  RegressionData out;
  out.levels = levels;
  out.intercept = spec.kind == OutcomeKind::binary;
  out.design = code_covariates(kept, spec.covariates, spec.references);
  const int n = kept.num_units();
  const int offset = out.intercept ? 1 : 0;
  out.x.resize(n, out.design.cols() + offset);
  if (out.intercept) out.x.col(0).setOnes();
  out.x.rightCols(out.design.cols()) = out.design.matrix;
  out.y.resize(n);
  out.w.resize(n);
  out.group_offsets.push_back(0);
  int row = 0;
  std::vector<int> seen(static_cast<std::size_t>(levels), 0);
  for (const auto& g : kept.groups) {
    for (const auto& u : g.units) {
      out.y(row) = u.responses[static_cast<std::size_t>(item)];
      out.w(row) = u.weight;
      ++seen[static_cast<std::size_t>(out.y(row))];
      ++row;
    }
    out.group_offsets.push_back(row);
  }
  int distinct = 0;
  for (const int c : seen) distinct += c > 0 ? 1 : 0;
  if (distinct < 2) throw InputError("degenerate outcome: every unit has the same level of '" + spec.outcome + "'");

  if (out.intercept) out.column_names.push_back("Intercept");
  for (const auto& cov : out.design.covariates) {
    const auto& info = kept.covariates[static_cast<std::size_t>(cov.covariate)];
    if (cov.kind == CovariateKind::continuous) {
      out.column_names.push_back(cov.name);
      continue;
    }
    for (const int c : cov.categories)
      if (c != cov.reference) out.column_names.push_back(cov.name + ": " + info.categories[static_cast<std::size_t>(c)]);
  }
  return out;
}

Eigen::VectorXd thresholds_from_gaps(const Eigen::Ref<const Eigen::VectorXd>& packed) {
  Eigen::VectorXd tau(packed.size());
  for (Eigen::Index m = 0; m < packed.size(); ++m) tau(m) = m == 0 ? packed(0) : tau(m - 1) + std::exp(packed(m));
  return tau;
}

Eigen::VectorXd gaps_from_thresholds(const Eigen::Ref<const Eigen::VectorXd>& thresholds) {
  Eigen::VectorXd packed(thresholds.size());
  for (Eigen::Index m = 0; m < thresholds.size(); ++m) {
    if (m == 0) {
      packed(0) = thresholds(0);
      continue;
    }
    const double gap = thresholds(m) - thresholds(m - 1);
    if (!(gap > 0.0)) throw InputError("thresholds must be strictly increasing");
    packed(m) = std::log(gap);
  }
  return packed;
}

namespace {

/// Per-unit log-probability and its derivatives with respect to the linear
/// predictor and (ordinal) the two adjacent thresholds.
struct UnitTerm {
  double logp = 0.0;
  double d_eta = 0.0;
  double d2_eta = 0.0;
  int lower = -1;  // threshold index of a = tau_{m-1} - eta
  double d_lower = 0.0;
  int upper = -1;  // threshold index of b = tau_m - eta
  double d_upper = 0.0;
};

struct BinaryTerm {
  UnitTerm operator()(int y, double eta) const {
    UnitTerm t;
    const double mu = logistic(eta);
    t.logp = y == 1 ? log_logistic(eta) : log_logistic(-eta);
    t.d_eta = static_cast<double>(y) - mu;
    t.d2_eta = -mu * (1.0 - mu);
    return t;
  }
};

struct OrdinalTerm {
  const Eigen::VectorXd* tau;
  UnitTerm operator()(int y, double eta) const {
    UnitTerm t;
    const auto& th = *tau;
    const int last = static_cast<int>(th.size());
    double fa = 0.0, fb = 0.0;  // 1 - 2F at a and b
    if (y == 0) {
      const double b = th(0) - eta;
      t.logp = log_logistic(b);
      t.upper = 0;
      t.d_upper = logistic(-b);
      fb = 1.0 - 2.0 * logistic(b);
    } else if (y == last) {
      const double a = th(last - 1) - eta;
      t.logp = log_logistic(-a);
      t.lower = last - 1;
      t.d_lower = -logistic(a);
      fa = 1.0 - 2.0 * logistic(a);
    } else {
      const double a = th(y - 1) - eta;
      const double b = th(y) - eta;
      const double gap = -std::expm1(a - b);
      t.logp = log_logistic(b) + log_logistic(-a) + std::log(gap);
      t.lower = y - 1;
      t.d_lower = -logistic(a) / (logistic(b) * gap);
      t.upper = y;
      t.d_upper = logistic(-b) / (logistic(-a) * gap);
      fa = 1.0 - 2.0 * logistic(a);
      fb = 1.0 - 2.0 * logistic(b);
    }
    t.d_eta = -(t.d_lower + t.d_upper);
    // d_upper = f(b)/D, d_lower = -f(a)/D and f' = f (1 - 2F).
    t.d2_eta = t.d_upper * fb + t.d_lower * fa - t.d_eta * t.d_eta;
    return t;
  }
};

struct Integrated {
  double loglik = 0.0;
  Eigen::VectorXd d_eta;  // per unit, posterior-averaged w_i dlogp/deta
  double d_log_sigma = 0.0;
  Eigen::VectorXd d_tau;
};

/// Mode and curvature scale of u -> sum_i w_i log p(y_i | eta_i + u) - u^2 / (2 sigma^2).
template <typename Term>
std::pair<double, double> group_mode(const RegressionData& d, const Eigen::VectorXd& eta, int begin, int end,
                                     double sigma, const Term& term) {
  const double prec = 1.0 / (sigma * sigma);
  auto eval = [&](double u, double& g1, double& g2) {
    double f = -0.5 * u * u * prec;
    g1 = -u * prec;
    g2 = -prec;
    for (int i = begin; i < end; ++i) {
      const UnitTerm t = term(d.y(i), eta(i) + u);
      f += d.w(i) * t.logp;
      g1 += d.w(i) * t.d_eta;
      g2 += d.w(i) * t.d2_eta;
    }
    return f;
  };
  double u = 0.0, g1 = 0.0, g2 = 0.0;
  double f = eval(u, g1, g2);
  for (int it = 0; it < 100; ++it) {
    const double step = -g1 / g2;  // g2 < 0: the integrand is log-concave
    double t = 1.0, n1 = 0.0, n2 = 0.0, fn = 0.0;
    for (int halving = 0; halving < 50; ++halving, t *= 0.5) {
      fn = eval(u + t * step, n1, n2);
      if (fn >= f - 1e-12 * std::abs(f)) break;
    }
    u += t * step;
    f = fn;
    g1 = n1;
    g2 = n2;
    if (std::abs(t * step) < 1e-10 * (1.0 + std::abs(u))) break;
  }
  return {u, 1.0 / std::sqrt(-g2)};
}

/// Adaptive Gauss-Hermite: per group the Q standard-normal nodes are centered
/// at the posterior mode of u and scaled by its curvature. Gradients are the
/// posterior expectations of the complete-data scores at those nodes.
template <typename Term>
Integrated integrate(const RegressionData& d, const Eigen::VectorXd& eta, double sigma, int q, const Term& term,
                     int thresholds, bool want_grad) {
  const bool random = sigma > 0.0;
  QuadratureRule rule;
  if (random) {
    rule = standard_normal_rule(q);
  } else {
    rule.nodes = Eigen::VectorXd::Zero(1);
    rule.weights = Eigen::VectorXd::Ones(1);
  }
  const Eigen::Index nodes = rule.nodes.size();
  const Eigen::VectorXd log_w = rule.weights.array().log() + 0.5 * rule.nodes.array().square();

  Integrated out;
  if (want_grad) {
    out.d_eta = Eigen::VectorXd::Zero(eta.size());
    out.d_tau = Eigen::VectorXd::Zero(thresholds);
  }
  Eigen::VectorXd score(nodes), u(nodes);
  for (int j = 0; j < d.num_groups(); ++j) {
    const int begin = d.group_offsets[static_cast<std::size_t>(j)];
    const int end = d.group_offsets[static_cast<std::size_t>(j) + 1];
    double base = 0.0;
    if (random) {
      const auto [mode, scale] = group_mode(d, eta, begin, end, sigma, term);
      u = mode + scale * rule.nodes.array();
      base = std::log(scale / sigma);
    } else {
      u.setZero();
    }
    for (Eigen::Index k = 0; k < nodes; ++k) {
      double s = base + (random ? log_w(k) - 0.5 * u(k) * u(k) / (sigma * sigma) : 0.0);
      for (int i = begin; i < end; ++i) s += d.w(i) * term(d.y(i), eta(i) + u(k)).logp;
      score(k) = s;
    }
    out.loglik += softmax_inplace(score);
    if (!want_grad) continue;
    for (Eigen::Index k = 0; k < nodes; ++k) {
      const double post = score(k);
      if (post == 0.0) continue;
      for (int i = begin; i < end; ++i) {
        const UnitTerm t = term(d.y(i), eta(i) + u(k));
        const double wd = post * d.w(i);
        out.d_eta(i) += wd * t.d_eta;
        if (t.lower >= 0) out.d_tau(t.lower) += wd * t.d_lower;
        if (t.upper >= 0) out.d_tau(t.upper) += wd * t.d_upper;
      }
      if (random) out.d_log_sigma += post * (u(k) * u(k) / (sigma * sigma) - 1.0);
    }
  }
  return out;
}

}  // namespace

double ri_logit_loglik(const RegressionData& data, const Eigen::VectorXd& beta, double var_u, int q) {
  if (!(var_u >= 0.0)) throw InputError("random-intercept variance must be non-negative");
  if (beta.size() != data.x.cols()) throw InputError("coefficient vector does not match the design");
  const Eigen::VectorXd eta = data.x * beta;
  return integrate(data, eta, std::sqrt(var_u), q, BinaryTerm{}, 0, false).loglik;
}

double ri_ordinal_loglik(const RegressionData& data, const Eigen::VectorXd& beta, const Eigen::VectorXd& thresholds,
                         double var_u, int q) {
  if (!(var_u >= 0.0)) throw InputError("random-intercept variance must be non-negative");
  if (beta.size() != data.x.cols()) throw InputError("coefficient vector does not match the design");
  if (thresholds.size() != data.levels - 1) throw InputError("ordinal model needs M-1 thresholds");
  for (Eigen::Index m = 1; m < thresholds.size(); ++m)
    if (!(thresholds(m) > thresholds(m - 1))) throw InputError("thresholds must be strictly increasing");
  const Eigen::VectorXd eta = data.x * beta;
  return integrate(data, eta, std::sqrt(var_u), q, OrdinalTerm{&thresholds}, static_cast<int>(thresholds.size()), false)
      .loglik;
}

double ri_logit_objective(const RegressionData& data, const Eigen::VectorXd& theta, int q, Eigen::VectorXd* grad) {
  const Eigen::Index p = data.x.cols();
  const Eigen::VectorXd eta = data.x * theta.head(p);
  const double sigma = std::exp(theta(p));
  const auto r = integrate(data, eta, sigma, q, BinaryTerm{}, 0, grad != nullptr);
  if (grad) {
    grad->resize(p + 1);
    grad->head(p) = data.x.transpose() * r.d_eta;
    (*grad)(p) = r.d_log_sigma;
  }
  return r.loglik;
}

double ri_ordinal_objective(const RegressionData& data, const Eigen::VectorXd& theta, int q, Eigen::VectorXd* grad) {
  const Eigen::Index p = data.x.cols();
  const Eigen::Index m = data.levels - 1;
  const Eigen::VectorXd eta = data.x * theta.head(p);
  const Eigen::VectorXd packed = theta.segment(p, m);
  const Eigen::VectorXd tau = thresholds_from_gaps(packed);
  const double sigma = std::exp(theta(p + m));
  const auto r = integrate(data, eta, sigma, q, OrdinalTerm{&tau}, static_cast<int>(m), grad != nullptr);
  if (grad) {
    grad->resize(p + m + 1);
    grad->head(p) = data.x.transpose() * r.d_eta;
    // tau_k = c_0 + sum_{1<=k'<=k} exp(c_k')
    double tail = 0.0;
    for (Eigen::Index k = m - 1; k >= 0; --k) {
      tail += r.d_tau(k);
      (*grad)(p + k) = k == 0 ? tail : tail * std::exp(packed(k));
    }
    (*grad)(p + m) = r.d_log_sigma;
  }
  return r.loglik;
}

namespace {

using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct OptResult {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
  int iterations = 0;
};

/// BFGS ascent with Armijo backtracking.
OptResult maximize_bfgs(const Objective& f, Eigen::VectorXd x, int max_iter, double tol) {
  const Eigen::Index n = x.size();
  OptResult r;
  Eigen::VectorXd g;
  double fx = f(x, &g);
  if (!std::isfinite(fx)) throw NumericalError("non-finite log-likelihood at the starting values");
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, g.lpNorm<Eigen::Infinity>());
  for (int it = 0; it < max_iter; ++it) {
    r.iterations = it + 1;
    if (g.lpNorm<Eigen::Infinity>() < tol) break;
    Eigen::VectorXd dir = h_inv * g;
    if (dir.dot(g) <= 0.0) {
      h_inv = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, g.lpNorm<Eigen::Infinity>());
      dir = h_inv * g;
    }
    double step = 1.0;
    Eigen::VectorXd x_new, g_new;
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving) {
      x_new = x + step * dir;
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && f_new >= fx + 1e-4 * step * dir.dot(g)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g - g_new;  // curvature of -f
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (it == 0) h_inv = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n) - rho * s * y.transpose();
      h_inv = v * h_inv * v.transpose() + rho * s * s.transpose();
    }
    x = x_new;
    g = g_new;
    fx = f_new;
  }
  r.x = x;
  r.f = fx;
  r.g = g;
  return r;
}

/// Hessian by central differences of the analytic gradient.
Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd gp, gm;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double step = 1e-5 * std::max(1.0, std::abs(x(k)));
    Eigen::VectorXd xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    f(xp, &gp);
    f(xm, &gm);
    h.col(k) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

/// Newton refinement from a BFGS solution; leaves the final Hessian in `hess`.
void newton_polish(const Objective& f, OptResult& r, double tol, Eigen::MatrixXd& hess) {
  for (int it = 0; it < 20; ++it) {
    hess = numeric_hessian(f, r.x);
    if (r.g.lpNorm<Eigen::Infinity>() < 1e-3 * tol) return;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(-hess);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return;
    const Eigen::VectorXd dir = ldlt.solve(r.g);
    if (!dir.allFinite()) return;
    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      Eigen::VectorXd g_new;
      const Eigen::VectorXd x_new = r.x + step * dir;
      const double f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && f_new >= r.f) {
        improved = f_new > r.f || g_new.lpNorm<Eigen::Infinity>() < r.g.lpNorm<Eigen::Infinity>();
        r.x = x_new;
        r.f = f_new;
        r.g = g_new;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      hess = numeric_hessian(f, r.x);
      return;
    }
  }
}

Estimate wald(std::string name, double value, double variance) {
  Estimate e;
  e.name = std::move(name);
  e.value = value;
  e.se = variance > 0.0 ? std::sqrt(variance) : std::numeric_limits<double>::quiet_NaN();
  e.p_value = std::isfinite(e.se) && e.se > 0.0 ? std::erfc(std::abs(value / e.se) / std::numbers::sqrt2)
                                                 : std::numeric_limits<double>::quiet_NaN();
  e.significant = std::isfinite(e.p_value) && e.p_value < 0.05;
  return e;
}

RegressionFit fit_common(const TwoLevelDataset& dataset, const RegressionSpec& spec, OutcomeKind kind) {
  RegressionSpec s = spec;
  s.kind = kind;
  const RegressionData d = prepare_regression(dataset, s);
  const Eigen::Index p = d.x.cols();
  const Eigen::Index m = kind == OutcomeKind::ordinal ? d.levels - 1 : 0;
  const int q = s.quadrature_nodes;

  const Objective obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* g) {
    return kind == OutcomeKind::binary ? ri_logit_objective(d, theta, q, g) : ri_ordinal_objective(d, theta, q, g);
  };

  // Start: marginal (cumulative) log-odds, zero slopes, sigma_u = 0.5.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + m + 1);
  const double total_w = d.w.sum();
  Eigen::VectorXd level_mass = Eigen::VectorXd::Zero(d.levels);
  for (Eigen::Index i = 0; i < d.y.size(); ++i) level_mass(d.y(i)) += d.w(i);
  const auto clamp_p = [](double v) { return std::clamp(v, 1e-4, 1.0 - 1e-4); };
  if (kind == OutcomeKind::binary) {
    const double mean = clamp_p(level_mass(1) / total_w);
    theta(0) = std::log(mean / (1.0 - mean));
  } else {
    Eigen::VectorXd tau(m);
    double cum = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      cum += level_mass(k) / total_w;
      const double c = clamp_p(cum);
      tau(k) = std::log(c / (1.0 - c));
      if (k > 0 && tau(k) <= tau(k - 1)) tau(k) = tau(k - 1) + 1e-2;
    }
    theta.segment(p, m) = gaps_from_thresholds(tau);
  }
  theta(p + m) = std::log(0.5);

  const double tol = s.grad_tol * total_w;
  OptResult opt = maximize_bfgs(obj, theta, s.max_iter, tol);
  Eigen::MatrixXd hess;
  newton_polish(obj, opt, tol, hess);

  RegressionFit fit;
  fit.outcome = s.outcome;
  fit.kind = kind;
  fit.loglik = opt.f;
  fit.iterations = opt.iterations;
  fit.gradient_norm = opt.g.lpNorm<Eigen::Infinity>() / total_w;
  fit.converged = opt.g.lpNorm<Eigen::Infinity>() < tol;
  fit.quadrature_nodes = q;
  fit.units = static_cast<int>(d.y.size());
  fit.groups = d.num_groups();
  fit.theta = opt.x;
  fit.icc_scale = s.icc_scale;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(opt.x.size(), opt.x.size(), std::numeric_limits<double>::quiet_NaN());
  {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(-hess);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive())
      cov = ldlt.solve(Eigen::MatrixXd::Identity(opt.x.size(), opt.x.size()));
  }
  fit.covariance = cov;

  for (Eigen::Index k = 0; k < p; ++k) {
    fit.beta.push_back(wald(d.column_names[static_cast<std::size_t>(k)], opt.x(k), cov(k, k)));
    if (std::abs(opt.x(k)) > 15.0) fit.separation_warning = true;
  }
  if (kind == OutcomeKind::ordinal) {
    const Eigen::VectorXd packed = opt.x.segment(p, m);
    const Eigen::VectorXd tau = thresholds_from_gaps(packed);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
      jac(r, 0) = 1.0;
      for (Eigen::Index c = 1; c <= r; ++c) jac(r, c) = std::exp(packed(c));
    }
    const Eigen::MatrixXd cov_tau = jac * cov.block(p, p, m, m) * jac.transpose();
    for (Eigen::Index k = 0; k < m; ++k)
      fit.thresholds.push_back(wald("Threshold " + std::to_string(k + 1) + "|" + std::to_string(k + 2), tau(k), cov_tau(k, k)));
  }
  const double log_sigma = opt.x(p + m);
  const double var_u = std::exp(2.0 * log_sigma);
  fit.var_u = wald("Var(u)", var_u, 4.0 * var_u * var_u * cov(p + m, p + m));
  fit.icc = compute_icc(var_u, s.icc_scale);

  const Eigen::Index offset = d.intercept ? 1 : 0;
  for (const auto& c : d.design.covariates) {
    CovariateEffects ce;
    ce.covariate = c.name;
    ce.kind = c.kind;
    const Eigen::Index first = offset + c.first_column;
    const Eigen::VectorXd coef = opt.x.segment(first, c.num_columns);
    const Eigen::MatrixXd block = cov.block(first, first, c.num_columns, c.num_columns);
    if (c.kind == CovariateKind::continuous) {
      ce.effects.push_back(wald(c.name, coef(0), block(0, 0)));
    } else {
      const auto& info = dataset.covariates[static_cast<std::size_t>(c.covariate)];
      const Eigen::VectorXd effects = expand_effects(c, coef);
      ce.reference = info.categories[static_cast<std::size_t>(c.reference)];
      int col = 0;
      for (std::size_t r = 0; r < c.categories.size(); ++r) {
        const auto& label = info.categories[static_cast<std::size_t>(c.categories[r])];
        const double variance = c.categories[r] == c.reference ? block.sum() : block(col, col);
        if (c.categories[r] != c.reference) ++col;
        ce.effects.push_back(wald(label, effects(static_cast<Eigen::Index>(r)), variance));
      }
    }
    fit.effects.push_back(std::move(ce));
  }
  return fit;
}

}  // namespace

RegressionFit fit_ri_logit(const TwoLevelDataset& data, const RegressionSpec& spec) {
  return fit_common(data, spec, OutcomeKind::binary);
}

RegressionFit fit_ri_ordinal(const TwoLevelDataset& data, const RegressionSpec& spec) {
  return fit_common(data, spec, OutcomeKind::ordinal);
}

std::string format_regression_table(std::span<const RegressionFit> fits) {
  // Union of row labels in first-appearance order.
  std::vector<std::string> order;
  std::vector<std::map<std::string, std::string>> cells(fits.size());
  auto put = [&](std::size_t f, const std::string& label, const std::string& text) {
    if (std::find(order.begin(), order.end(), label) == order.end()) order.push_back(label);
    cells[f][label] = text;
  };
  auto fmt = [](const Estimate& e) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << e.value << (e.significant ? "*" : "");
    return os.str();
  };
  for (std::size_t f = 0; f < fits.size(); ++f) {
    const auto& fit = fits[f];
    if (fit.kind == OutcomeKind::binary && !fit.beta.empty()) put(f, "Intercept", fmt(fit.beta.front()));
    for (const auto& t : fit.thresholds) put(f, t.name, fmt(t));
    for (const auto& ce : fit.effects) {
      if (ce.kind == CovariateKind::continuous) {
        put(f, ce.covariate, fmt(ce.effects.front()));
        continue;
      }
      put(f, ce.covariate, "");
      for (const auto& e : ce.effects) put(f, ce.covariate + "\x1f" + e.name, fmt(e));
    }
    put(f, "Var(u)", fmt(fit.var_u));
    std::ostringstream icc;
    icc << std::fixed << std::setprecision(3) << fit.icc;
    put(f, "ICC", icc.str());
  }
  constexpr int kLabel = 34;
  constexpr int kCell = 14;
  std::ostringstream os;
  os << std::left << std::setw(kLabel) << "" << std::right;
  for (const auto& fit : fits) os << std::setw(kCell) << fit.outcome.substr(0, kCell - 1);
  os << '\n';
  for (const auto& label : order) {
    const auto sep = label.find('\x1f');
    const std::string shown = sep == std::string::npos ? label : "  " + label.substr(sep + 1);
    os << std::left << std::setw(kLabel) << shown.substr(0, kLabel - 1) << std::right;
    for (std::size_t f = 0; f < fits.size(); ++f) {
      const auto it = cells[f].find(label);
      os << std::setw(kCell) << (it == cells[f].end() ? "" : it->second);
    }
    os << '\n';
  }
  os << "* p < 0.05\n";
  return os.str();
}

}  // namespace mllc
