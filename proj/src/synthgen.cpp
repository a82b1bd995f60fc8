#include "mllc/synthgen.hpp"

#include "mllc/errors.hpp"
#include "mllc/coding.hpp"
#include "mllc/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mllc {

void validate_mllc_params(const MllcParams& p, double tol) {
  const auto check_simplex = [tol](const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& what) {
    if (v.size() == 0) throw InputError(what + " is empty");
    if ((v.array() < 0.0).any() || (v.array() > 1.0).any() || std::abs(v.sum() - 1.0) > tol)
      throw InputError(what + " is not a probability vector");
  };
  check_simplex(p.class_weights, "class_weights");
  if (p.cluster_given_class.rows() != p.num_classes()) throw InputError("cluster_given_class must have H rows");
  if (!p.concomitant)
    for (int h = 0; h < p.num_classes(); ++h)
      check_simplex(p.cluster_given_class.row(h).transpose(), "cluster_given_class row " + std::to_string(h + 1));
  if (p.item_probs.empty()) throw InputError("no item tables");
  for (std::size_t k = 0; k < p.item_probs.size(); ++k) {
    const auto& t = p.item_probs[k];
    if (t.rows() != p.num_clusters() || t.cols() < 2) throw InputError("item table " + std::to_string(k + 1) + " has the wrong shape");
    for (int l = 0; l < p.num_clusters(); ++l)
      check_simplex(t.row(l).transpose(), "item " + std::to_string(k + 1) + " row " + std::to_string(l + 1));
  }
}

namespace {

Eigen::RowVectorXd effect_row(int category, int count) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(count - 1);
  if (category == count - 1) {
    row.setConstant(-1.0);
  } else {
    row(category) = 1.0;
  }
  return row;
}

double draw_weight(Rng& rng, WeightScheme scheme) {
  return scheme == WeightScheme::unit ? 1.0 : 0.5 + 1.5 * rng.uniform();
}

}  // namespace

SimulatedMllc simulate_mllc(const MllcScenario& sc) {
  validate_mllc_params(sc.params);
  if (sc.groups < 1) throw InputError("scenario needs at least one group");
  if (sc.group_size_min < 1 || sc.group_size_max < sc.group_size_min) throw InputError("invalid group size range");
  const auto& p = sc.params;
  const int k_count = static_cast<int>(p.item_probs.size());
  int coded_cols = 0;
  for (const auto& g : sc.covariates) {
    if (g.categories.size() < 2 || static_cast<std::size_t>(g.probs.size()) != g.categories.size())
      throw InputError("covariate generator '" + g.name + "' is malformed");
    coded_cols += static_cast<int>(g.categories.size()) - 1;
  }
  if (p.concomitant && p.concomitant->slopes.rows() != coded_cols)
    throw InputError("concomitant slopes do not match the covariate generators");

  SimulatedMllc out;
  auto& data = out.data;
  for (int k = 0; k < k_count; ++k) {
    const std::string name = k < static_cast<int>(sc.item_names.size()) ? sc.item_names[static_cast<std::size_t>(k)]
                                                                         : "y" + std::to_string(k + 1);
    data.schema.items.push_back({name, static_cast<int>(p.item_probs[static_cast<std::size_t>(k)].cols())});
  }
  for (const auto& g : sc.covariates) data.covariates.push_back({g.name, CovariateKind::categorical, g.categories});

  for (int j = 0; j < sc.groups; ++j) {
    Rng group_rng(derive_seed(sc.seed, {1, static_cast<std::uint64_t>(j)}));
    const int w = group_rng.categorical(p.class_weights);
    const int size = sc.group_size_min == sc.group_size_max ? sc.group_size_min
                                                             : group_rng.uniform_int(sc.group_size_min, sc.group_size_max);
    out.group_class.push_back(w);
    Group group{"G" + std::to_string(j + 1), {}};
    for (int i = 0; i < size; ++i) {
      Rng rng(derive_seed(sc.seed, {2, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(i)}));
      Unit unit;
      unit.id = group.id + "-" + std::to_string(i + 1);
      Eigen::RowVectorXd coded(coded_cols);
      int col = 0;
      for (const auto& g : sc.covariates) {
        const int c = rng.categorical(g.probs);
        unit.covariates.push_back(c);
        const int count = static_cast<int>(g.categories.size());
        coded.segment(col, count - 1) = effect_row(c, count);
        col += count - 1;
      }
      Eigen::RowVectorXd cluster_probs;
      if (p.concomitant) {
        Eigen::RowVectorXd eta = p.concomitant->intercepts.row(w) + coded * p.concomitant->slopes;
        eta.array() -= eta.maxCoeff();
        cluster_probs = eta.array().exp();
      } else {
        cluster_probs = p.cluster_given_class.row(w);
      }
      const int z = rng.categorical(cluster_probs);
      out.unit_cluster.push_back(z);
      for (int k = 0; k < k_count; ++k) unit.responses.push_back(rng.categorical(p.item_probs[static_cast<std::size_t>(k)].row(z)));
      unit.weight = draw_weight(rng, sc.weights);
      group.units.push_back(std::move(unit));
    }
    data.groups.push_back(std::move(group));
  }
  ItemSchema schema = data.schema;
  out.data = validate_dataset(std::move(data), schema);
  return out;
}

SimulatedRi simulate_ri_logit(const RiScenario& sc) {
  if (!(sc.var_u >= 0.0)) throw InputError("random-intercept variance must be non-negative");
  if (sc.groups < 1 || sc.group_size < 1) throw InputError("scenario needs groups and units");
  const bool ordinal = sc.thresholds.has_value();
  if (ordinal)
    for (Eigen::Index m = 1; m < sc.thresholds->size(); ++m)
      if (!((*sc.thresholds)(m) > (*sc.thresholds)(m - 1))) throw InputError("thresholds must be strictly increasing");
  int coded_cols = 0;
  for (const auto& g : sc.categorical) coded_cols += static_cast<int>(g.categories.size()) - 1;
  const int offset = ordinal ? 0 : 1;
  const int continuous = static_cast<int>(sc.beta.size()) - offset - coded_cols;
  if (continuous < 0) throw InputError("beta is shorter than the coded design");

  SimulatedRi out;
  auto& data = out.data;
  data.schema.items.push_back({"y", ordinal ? static_cast<int>(sc.thresholds->size()) + 1 : 2});
  for (int c = 0; c < continuous; ++c) data.covariates.push_back({"x" + std::to_string(c + 1), CovariateKind::continuous, {}});
  for (const auto& g : sc.categorical) data.covariates.push_back({g.name, CovariateKind::categorical, g.categories});
  out.random_intercepts.resize(sc.groups);
  const double sigma = std::sqrt(sc.var_u);

  for (int j = 0; j < sc.groups; ++j) {
    Rng group_rng(derive_seed(sc.seed, {1, static_cast<std::uint64_t>(j)}));
    const double u = sigma * group_rng.normal();
    out.random_intercepts(j) = u;
    Group group{"G" + std::to_string(j + 1), {}};
    for (int i = 0; i < sc.group_size; ++i) {
      Rng rng(derive_seed(sc.seed, {2, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(i)}));
      Unit unit;
      unit.id = group.id + "-" + std::to_string(i + 1);
      double eta = ordinal ? 0.0 : sc.beta(0);
      for (int c = 0; c < continuous; ++c) {
        const double x = rng.normal();
        unit.covariates.push_back(x);
        eta += sc.beta(offset + c) * x;
      }
      int col = offset + continuous;
      for (const auto& g : sc.categorical) {
        const int cat = rng.categorical(g.probs);
        unit.covariates.push_back(cat);
        const int count = static_cast<int>(g.categories.size());
        eta += effect_row(cat, count).dot(sc.beta.segment(col, count - 1));
        col += count - 1;
      }
      eta += u;
      const double draw = rng.uniform();
      int y = 0;
      if (ordinal) {
        const auto& tau = *sc.thresholds;
        y = static_cast<int>(tau.size());
        for (Eigen::Index m = 0; m < tau.size(); ++m) {
          if (draw < 1.0 / (1.0 + std::exp(-(tau(m) - eta)))) {
            y = static_cast<int>(m);
            break;
          }
        }
      } else {
        y = draw < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
      }
      unit.responses.push_back(y);
      unit.weight = draw_weight(rng, sc.weights);
      group.units.push_back(std::move(unit));
    }
    data.groups.push_back(std::move(group));
  }
  ItemSchema schema = data.schema;
  out.data = validate_dataset(std::move(data), schema);
  return out;
}

std::vector<std::string> reference_profile_items() {
  return {"saving_water",        "saving_energy",       "renewable_energy",    "saving_materials",
          "minimising_waste",    "selling_scrap",       "recycling_reusing",   "sustainable_products"};
}

Eigen::VectorXd reference_profile_sizes_raw() {
  Eigen::VectorXd s(6);
  s << 13.74, 14.23, 20.39, 14.76, 7.23, 29.63;
  return s;
}

MllcParams reference_profile_params() {
  Eigen::MatrixXd classes(4, 6);
  classes << 5.57, 8.72, 23.91, 8.56, 1.53, 51.72,  //
      9.85, 14.59, 20.87, 23.04, 4.50, 27.15,      //
      33.61, 1.96, 16.24, 7.25, 26.10, 14.84,      //
      11.50, 37.39, 18.19, 21.74, 0.00, 11.17;
  Eigen::MatrixXd yes(8, 6);
  yes << 58.71, 91.10, 78.16, 26.35, 9.43, 2.86,  //
      87.88, 94.96, 99.10, 30.33, 59.46, 14.15,   //
      44.30, 9.25, 11.15, 0.00, 39.58, 2.58,      //
      87.95, 90.56, 63.02, 50.98, 43.55, 9.5,     //
      91.70, 93.38, 74.54, 75.36, 48.66, 12.74,   //
      53.18, 28.83, 10.66, 18.55, 12.77, 6.69,    //
      70.05, 71.66, 27.44, 44.41, 28.54, 11.36,   //
      46.88, 51.23, 12.23, 22.18, 17.54, 4.75;

  MllcParams p;
  p.class_weights.resize(4);
  p.class_weights << 9.0, 8.0, 6.0, 5.0;
  p.class_weights /= 28.0;
  p.cluster_given_class = classes.array().colwise() / classes.rowwise().sum().array();
  for (int k = 0; k < 8; ++k) {
    Eigen::MatrixXd t(6, 2);
    t.col(1) = yes.row(k).transpose() / 100.0;
    t.col(0) = 1.0 - t.col(1).array();
    p.item_probs.push_back(t);
  }
  return p;
}

std::vector<Eigen::VectorXd> mixture_marginals(const MllcParams& params) {
  const Eigen::VectorXd sizes = params.cluster_given_class.transpose() * params.class_weights;
  std::vector<Eigen::VectorXd> out;
  for (const auto& t : params.item_probs) out.push_back(t.transpose() * sizes);
  return out;
}

double brute_force_size(const TwoLevelDataset& data, const MllcParams& params) {
  double terms = 0.0;
  for (const auto& g : data.groups)
    terms += params.num_classes() * std::pow(static_cast<double>(params.num_clusters()), static_cast<double>(g.units.size()));
  return terms;
}

double brute_force_loglik(const TwoLevelDataset& data, const MllcParams& params, const CodedDesign* design,
                          double max_terms) {
  const double terms = brute_force_size(data, params);
  if (terms > max_terms) {
    std::ostringstream msg;
    msg << "instance too large for enumeration: " << terms << " terms (limit " << max_terms << ")";
    throw InputError(msg.str());
  }
  if (params.concomitant && !design) throw InputError("covariate-parameterized oracle requires a design");
  const int H = params.num_classes();
  const int L = params.num_clusters();

  // P(Z = l | W = h) for the unit at flat row `row`.
  auto membership = [&](int row, int h, int l) {
    if (!params.concomitant) return params.cluster_given_class(h, l);
    const auto& c = *params.concomitant;
    double denom = 0.0;
    double num = 0.0;
    for (int m = 0; m < L; ++m) {
      double eta = c.intercepts(h, m);
      for (int col = 0; col < design->cols(); ++col) eta += design->matrix(row, col) * c.slopes(col, m);
      const double e = std::exp(eta);
      denom += e;
      if (m == l) num = e;
    }
    return num / denom;
  };
  auto pattern_prob = [&](const Unit& u, int l) {
    double prob = 1.0;
    for (std::size_t k = 0; k < u.responses.size(); ++k)
      if (u.responses[k] != kMissing) prob *= params.item_probs[k](l, u.responses[k]);
    return prob;
  };

  bool unit_weights = true;
  for (const auto& g : data.groups)
    for (const auto& u : g.units) unit_weights = unit_weights && u.weight == 1.0;

  double total = 0.0;
  int row0 = 0;
  for (const auto& g : data.groups) {
    const int n = static_cast<int>(g.units.size());
    double group_prob = 0.0;
    for (int h = 0; h < H; ++h) {
      double class_term = 0.0;
      if (unit_weights) {
        // Every joint cluster assignment (z_1, ..., z_n) as a mixed-radix counter.
        std::vector<int> z(static_cast<std::size_t>(n), 0);
        for (;;) {
          double prob = 1.0;
          for (int i = 0; i < n; ++i)
            prob *= membership(row0 + i, h, z[static_cast<std::size_t>(i)]) *
                    pattern_prob(g.units[static_cast<std::size_t>(i)], z[static_cast<std::size_t>(i)]);
          class_term += prob;
          int pos = 0;
          while (pos < n && ++z[static_cast<std::size_t>(pos)] == L) z[static_cast<std::size_t>(pos++)] = 0;
          if (pos == n) break;
        }
      } else {
        class_term = 1.0;
        for (int i = 0; i < n; ++i) {
          double unit_prob = 0.0;
          for (int l = 0; l < L; ++l) unit_prob += membership(row0 + i, h, l) * pattern_prob(g.units[static_cast<std::size_t>(i)], l);
          class_term *= std::pow(unit_prob, g.units[static_cast<std::size_t>(i)].weight);
        }
      }
      group_prob += params.class_weights(h) * class_term;
    }
    total += std::log(group_prob);
    row0 += n;
  }
  return total;
}

TinyInstance random_tiny_instance(std::uint64_t seed, const TinyLimits& lim) {
  Rng rng(derive_seed(seed, {3}));
  const int groups = rng.uniform_int(1, lim.max_groups);
  const int items = rng.uniform_int(1, lim.max_items);
  const int clusters = rng.uniform_int(1, lim.max_clusters);
  const int classes = rng.uniform_int(1, std::min(lim.max_classes, groups));
  const bool weighted = lim.allow_weights && rng.uniform() < 0.5;
  const bool with_covariate = lim.allow_covariates && rng.uniform() < 0.3;

  TinyInstance inst;
  auto& data = inst.data;
  for (int k = 0; k < items; ++k) data.schema.items.push_back({"y" + std::to_string(k + 1), rng.uniform_int(2, 3)});
  if (with_covariate) data.covariates.push_back({"c", CovariateKind::categorical, {"a", "b", "c"}});
  for (int j = 0; j < groups; ++j) {
    Group g{"G" + std::to_string(j + 1), {}};
    const int size = rng.uniform_int(1, lim.max_group_size);
    for (int i = 0; i < size; ++i) {
      Unit u;
      u.id = g.id + "-" + std::to_string(i + 1);
      for (int k = 0; k < items; ++k) {
        const bool missing = lim.allow_missing && rng.uniform() < 0.1;
        u.responses.push_back(missing ? kMissing : rng.uniform_int(0, data.schema.levels(k) - 1));
      }
      if (with_covariate) u.covariates.push_back(rng.uniform_int(0, 2));
      u.weight = weighted ? 0.25 + 2.0 * rng.uniform() : 1.0;
      g.units.push_back(std::move(u));
    }
    data.groups.push_back(std::move(g));
  }
  const ItemSchema schema = data.schema;
  data = validate_dataset(std::move(data), schema);

  auto& p = inst.params;
  p.class_weights = rng.dirichlet_flat(classes);
  p.cluster_given_class.resize(classes, clusters);
  for (int h = 0; h < classes; ++h) p.cluster_given_class.row(h) = rng.dirichlet_flat(clusters).transpose();
  for (int k = 0; k < items; ++k) {
    Eigen::MatrixXd t(clusters, data.schema.levels(k));
    for (int l = 0; l < clusters; ++l) t.row(l) = rng.dirichlet_flat(data.schema.levels(k)).transpose();
    p.item_probs.push_back(t);
  }
  if (with_covariate) {
    try {
      inst.design = code_covariates(data, {"c"});
    } catch (const InputError&) {
      inst.design.reset();  // fewer than two observed categories
    }
    if (inst.design) {
      ConcomitantCoefficients c;
      c.intercepts = Eigen::MatrixXd::Zero(classes, clusters);
      c.slopes = Eigen::MatrixXd::Zero(inst.design->cols(), clusters);
      for (int l = 0; l + 1 < clusters; ++l) {
        for (int h = 0; h < classes; ++h) c.intercepts(h, l) = rng.normal();
        for (int col = 0; col < inst.design->cols(); ++col) c.slopes(col, l) = rng.normal();
      }
      p.concomitant = c;
      p.cluster_given_class = average_cluster_given_class(p, *inst.design, flatten(data).weights);
    }
  }
  return inst;
}

OracleSweep oracle_sweep(std::uint64_t seed, int count, double tol) {
  OracleSweep out;
  for (int t = 0; t < count; ++t) {
    const auto inst = random_tiny_instance(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    const CodedDesign* design = inst.design ? &*inst.design : nullptr;
    const double fast = mllc_loglik(inst.data, inst.params, design);
    const double exact = brute_force_loglik(inst.data, inst.params, design);
    const double diff = std::abs(fast - exact);
    ++out.instances;
    out.agreements += diff < tol ? 1 : 0;
    out.max_abs_diff = std::max(out.max_abs_diff, diff);
  }
  return out;
}

}  // namespace mllc
