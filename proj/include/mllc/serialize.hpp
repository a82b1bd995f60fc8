#pragma once

#include "mllc/lc.hpp"
#include "mllc/mllc.hpp"
#include "mllc/profile.hpp"
#include "mllc/regression.hpp"
#include "mllc/selection.hpp"

#include <json.hpp>

#include <vector>

namespace mllc {

using Json = nlohmann::ordered_json;

Json to_json(const Eigen::MatrixXd& m);
Json to_json(const Eigen::VectorXd& v);
Json to_json(const MllcParams& params);
/// Fit summary and parameters; posteriors are included when requested.
Json to_json(const MllcFit& fit, bool include_unit_posteriors = false);
Json to_json(const ProfileReport& report);
Json to_json(const std::vector<GroupAssignment>& groups);
Json to_json(const GridResult& grid);
Json to_json(const RegressionFit& fit);

/// Plain-text comparison table: L, H, loglik, n_params, BIC, converged_share.
std::string format_grid_text(const GridResult& grid);

}  // namespace mllc
