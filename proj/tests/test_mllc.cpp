#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "mllc/concomitant.hpp"
#include "mllc/errors.hpp"
#include "mllc/labels.hpp"
#include "mllc/lc.hpp"
#include "mllc/mllc.hpp"
#include "mllc/profile.hpp"
#include "mllc/synthgen.hpp"

#include <cmath>

using namespace mllc;

namespace {

MllcParams three_by_two() {
  MllcParams p;
  p.class_weights = Eigen::Vector2d(0.55, 0.45);
  p.cluster_given_class.resize(2, 3);
  p.cluster_given_class << 0.7, 0.2, 0.1, 0.1, 0.2, 0.7;
  for (int k = 0; k < 6; ++k) {
    Eigen::MatrixXd t(3, 2);
    for (int l = 0; l < 3; ++l) {
      const double yes = (k + l) % 3 == 0 ? 0.9 : ((k + 2 * l) % 3 == 1 ? 0.5 : 0.1);
      t(l, 0) = 1.0 - yes;
      t(l, 1) = yes;
    }
    p.item_probs.push_back(t);
  }
  return p;
}

}  // namespace

TEST_CASE("group likelihood by hand") {
  // One group, two units, one binary item, L = 2, H = 2.
  MllcParams p;
  p.class_weights = Eigen::Vector2d(0.4, 0.6);
  p.cluster_given_class.resize(2, 2);
  p.cluster_given_class << 0.8, 0.2, 0.3, 0.7;
  p.item_probs = {(Eigen::MatrixXd(2, 2) << 0.9, 0.1, 0.25, 0.75).finished()};
  const auto d = make_dataset({{{1}, {0}}}, {2}, {{1.0, 2.0}});
  auto c = [&](int h, int y) {
    return p.cluster_given_class(h, 0) * p.item_probs[0](0, y) + p.cluster_given_class(h, 1) * p.item_probs[0](1, y);
  };
  const double expected =
      std::log(0.4 * c(0, 1) * std::pow(c(0, 0), 2.0) + 0.6 * c(1, 1) * std::pow(c(1, 0), 2.0));
  CHECK(mllc_loglik(d, p) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("brute-force enumeration agrees on random tiny instances") {
  for (std::uint64_t s = 1; s <= 60; ++s) {
    const auto inst = random_tiny_instance(s);
    const CodedDesign* design = inst.design ? &*inst.design : nullptr;
    CHECK(std::abs(mllc_loglik(inst.data, inst.params, design) - brute_force_loglik(inst.data, inst.params, design)) < 1e-10);
  }
  const auto sweep = oracle_sweep(1, 100);
  CHECK(sweep.agreements == 100);
}

TEST_CASE("one class collapses to the single-level model") {
  for (std::uint64_t s = 1; s <= 20; ++s) {
    TinyLimits lim;
    lim.max_classes = 1;
    lim.allow_covariates = false;
    const auto inst = random_tiny_instance(s, lim);
    LcParams lc{inst.params.cluster_given_class.row(0).transpose(), inst.params.item_probs};
    CHECK(std::abs(mllc_loglik(inst.data, inst.params) - lc_loglik(inst.data, lc)) < 1e-12);
  }
}

TEST_CASE("posteriors are consistent probability tables") {
  const auto inst = random_tiny_instance(17);
  const CodedDesign* design = inst.design ? &*inst.design : nullptr;
  const auto post = mllc_posteriors(inst.data, inst.params, design);
  CHECK((post.group_class.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((post.unit_cluster.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("EM is monotone, deterministic and recovers a (3, 2) model") {
  MllcScenario sc;
  sc.params = three_by_two();
  sc.groups = 30;
  sc.group_size_min = sc.group_size_max = 200;
  sc.seed = 21;
  const auto sim = simulate_mllc(sc);
  EmConfig em;
  em.seed = 3;
  const auto fit = mllc_em_fit(sim.data, 3, 2, nullptr, em);
  for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t) CHECK(fit.loglik_trace[t] >= fit.loglik_trace[t - 1] - 1e-9);
  const auto again = mllc_em_fit(sim.data, 3, 2, nullptr, em);
  CHECK(again.loglik == fit.loglik);
  CHECK(again.params.cluster_given_class == fit.params.cluster_given_class);

  auto aligned = canonicalize_labels(fit);
  const auto co = align_clusters(aligned.params.item_probs, sc.params.item_probs);
  const auto ho = align_classes(permute_labels(aligned, co, {0, 1}).params.cluster_given_class, sc.params.cluster_given_class);
  aligned = permute_labels(aligned, co, ho);
  for (std::size_t k = 0; k < sc.params.item_probs.size(); ++k)
    CHECK((aligned.params.item_probs[k] - sc.params.item_probs[k]).cwiseAbs().maxCoeff() < 0.03);
  CHECK((aligned.params.class_weights - sc.params.class_weights).cwiseAbs().maxCoeff() < 0.05 + 0.1);
  CHECK(mllc_loglik(sim.data, aligned.params) == doctest::Approx(fit.loglik).epsilon(1e-10));
  CHECK(fit.n_params == 1 + 6 * 3 + 2 * 2);
}

TEST_CASE("a single cluster is flagged") {
  const auto d = make_dataset({{{0, 1}, {1, 1}}, {{0, 0}}, {{1, 0}}}, {2, 2});
  const auto fit = mllc_em_fit(d, 1, 2);
  CHECK(fit.degenerate_l1);
  LcParams lc{Eigen::VectorXd::Ones(1), fit.params.item_probs};
  CHECK(fit.loglik == doctest::Approx(lc_loglik(d, lc)).epsilon(1e-10));
  CHECK_THROWS_AS(mllc_em_fit(d, 2, 4), InputError);
}

TEST_CASE("concomitant intercept-only step has the proportion closed form") {
  // With no covariate columns, the optimum is P(l|h) = v_.hl / v_.h.
  Eigen::MatrixXd v(4, 6);
  v << 0.2, 0.5, 0.3, 0.1, 0.1, 0.8,
       0.6, 0.2, 0.2, 0.3, 0.3, 0.4,
       0.1, 0.1, 0.8, 0.0, 0.5, 0.5,
       0.4, 0.4, 0.2, 0.2, 0.2, 0.6;
  CodedDesign design;
  design.matrix.resize(4, 0);
  ConcomitantCoefficients start{Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(0, 3)};
  const auto step = concomitant_mstep(v, design.matrix, start);
  for (int h = 0; h < 2; ++h) {
    const Eigen::RowVectorXd tot = v.middleCols(h * 3, 3).colwise().sum();
    const Eigen::RowVectorXd target = tot / tot.sum();
    const Eigen::RowVectorXd eta = step.coefficients.intercepts.row(h);
    const Eigen::RowVectorXd prob = eta.array().exp() / eta.array().exp().sum();
    CHECK((prob - target).cwiseAbs().maxCoeff() < 1e-8);
  }
  CHECK(step.objective_after >= step.objective_before);
}

TEST_CASE("concomitant binary covariate matches the two-group logit") {
  // L = 2, H = 1, x = +1/-1: alpha + beta = logit p(+), alpha - beta = logit p(-).
  const int n = 10;
  Eigen::MatrixXd v(n, 2);
  CodedDesign design;
  design.matrix.resize(n, 1);
  double pos[2] = {0, 0}, neg[2] = {0, 0};
  for (int i = 0; i < n; ++i) {
    const double x = i < 4 ? 1.0 : -1.0;
    const double a = 0.1 + 0.08 * i;
    design.matrix(i, 0) = x;
    v(i, 0) = a;
    v(i, 1) = 1.0 - a;
    (x > 0 ? pos : neg)[0] += a;
    (x > 0 ? pos : neg)[1] += 1.0 - a;
  }
  ConcomitantCoefficients start{Eigen::MatrixXd::Zero(1, 2), Eigen::MatrixXd::Zero(1, 2)};
  const auto step = concomitant_mstep(v, design.matrix, start);
  const double alpha = step.coefficients.intercepts(0, 0), beta = step.coefficients.slopes(0, 0);
  CHECK(alpha + beta == doctest::Approx(std::log(pos[0] / pos[1])).epsilon(1e-8));
  CHECK(alpha - beta == doctest::Approx(std::log(neg[0] / neg[1])).epsilon(1e-8));
  CHECK(step.coefficients.intercepts(0, 1) == 0.0);
  CHECK(step.coefficients.slopes(0, 1) == 0.0);
}

TEST_CASE("EM with a concomitant covariate") {
  MllcScenario sc;
  sc.params = three_by_two();
  ConcomitantCoefficients coef{Eigen::MatrixXd::Zero(2, 3), Eigen::MatrixXd::Zero(2, 3)};
  coef.intercepts << 1.0, 0.3, 0.0, -0.8, 0.2, 0.0;
  coef.slopes << 1.2, 0.0, 0.0, -0.6, 0.5, 0.0;
  sc.params.concomitant = coef;
  sc.covariates = {{"sector", {"a", "b", "c"}, Eigen::Vector3d(0.3, 0.3, 0.4)}};
  sc.groups = 20;
  sc.group_size_min = sc.group_size_max = 150;
  sc.seed = 12;
  const auto sim = simulate_mllc(sc);
  const auto design = code_covariates(sim.data, {"sector"});
  EmConfig em;
  em.seed = 2;
  const auto fit = mllc_em_fit(sim.data, 3, 2, &design, em);
  for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t) CHECK(fit.loglik_trace[t] >= fit.loglik_trace[t - 1] - 1e-9);
  REQUIRE(fit.params.concomitant);
  CHECK(fit.params.num_clusters() == 3);
  CHECK(fit.params.concomitant->intercepts.col(2).isZero());
  CHECK(fit.params.concomitant->slopes.col(2).isZero());
  CHECK(fit.n_params == 1 + 6 * 3 + 2 * (2 + 2));
  CHECK(mllc_loglik(sim.data, fit.params, &design) == doctest::Approx(fit.loglik).epsilon(1e-10));
  // the reported table is the weighted average of the unit-level probabilities
  CHECK((fit.params.cluster_given_class.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);

  // relabeling keeps the baseline column at zero and the likelihood fixed
  const auto swapped = permute_labels(fit, {2, 0, 1}, {1, 0});
  CHECK(swapped.params.concomitant->intercepts.col(2).isZero());
  CHECK(mllc_loglik(sim.data, swapped.params, &design) == doctest::Approx(fit.loglik).epsilon(1e-10));

  const auto report = profile_report(canonicalize_labels(fit), sim.data);
  REQUIRE(report.covariates.size() == 1);
  for (int l = 0; l < 3; ++l) CHECK(report.covariates[0].percent.col(l).sum() == doctest::Approx(100.0).epsilon(1e-10));
}

TEST_CASE("label permutation and profile report") {
  MllcScenario sc;
  sc.params = three_by_two();
  sc.groups = 20;
  sc.group_size_min = sc.group_size_max = 150;
  sc.seed = 2;
  const auto sim = simulate_mllc(sc);
  EmConfig em;
  em.seed = 8;
  const auto fit = canonicalize_labels(mllc_em_fit(sim.data, 3, 2, nullptr, em));
  const auto swapped = permute_labels(fit, {2, 0, 1}, {1, 0});
  CHECK(mllc_loglik(sim.data, swapped.params) == doctest::Approx(fit.loglik).epsilon(1e-12));
  const auto back = canonicalize_labels(swapped);
  CHECK((back.params.cluster_given_class - fit.params.cluster_given_class).cwiseAbs().maxCoeff() < 1e-15);

  const auto report = profile_report(fit, sim.data);
  CHECK(report.cluster_size_percent.sum() == doctest::Approx(100.0).epsilon(1e-12));
  for (int h = 0; h < 2; ++h) CHECK(report.class_cluster_percent.row(h).sum() == doctest::Approx(100.0).epsilon(1e-10));
  for (const auto& item : report.items)
    for (int l = 0; l < 3; ++l) CHECK(item.percent.col(l).sum() == doctest::Approx(100.0).epsilon(1e-10));
  // expected positive responses descend across the canonical cluster order
  Eigen::VectorXd pos = Eigen::VectorXd::Zero(3);
  for (const auto& t : fit.params.item_probs) pos += t.col(1);
  CHECK(pos(0) >= pos(1));
  CHECK(pos(1) >= pos(2));

  // modal classification against the hidden classes, up to relabeling
  const auto groups = classify_groups(fit, sim.data);
  int agree = 0, flipped = 0;
  for (std::size_t j = 0; j < groups.size(); ++j) {
    agree += groups[j].assigned_class == sim.group_class[j];
    flipped += groups[j].assigned_class != sim.group_class[j];
  }
  CHECK(std::max(agree, flipped) >= 19);
  const auto text = format_profile_text(report, groups);
  CHECK(text.find("Cluster 3") != std::string::npos);
}

TEST_CASE("classification ties go to the lower class") {
  MllcFit fit;
  fit.params = three_by_two();
  fit.params.cluster_given_class.row(1) = fit.params.cluster_given_class.row(0);
  fit.params.class_weights = Eigen::Vector2d(0.5, 0.5);
  const auto d = make_dataset({{{0, 1, 0, 1, 0, 1}}}, {2, 2, 2, 2, 2, 2});
  fit.posteriors = mllc_posteriors(d, fit.params);
  const auto g = classify_groups(fit, d);
  CHECK(g[0].assigned_class == 0);
  CHECK(g[0].confidence == doctest::Approx(0.5));
}
